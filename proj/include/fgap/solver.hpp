#pragma once

// P1 finite elements for the energy 1/2 int H(grad u)^2 with perfectly conducting
// inclusions: every inclusion boundary carries one unknown constant (a tied DOF), the
// outer boundary carries affine Dirichlet data.

#include "fgap/analytic.hpp"
#include "fgap/mesh.hpp"

#include <Eigen/Sparse>

#include <optional>
#include <vector>

namespace fgap {

/// phi(x) = a.x + b
struct AffineData {
    Vec a;
    double b = 0.0;

    double operator()(const Vec& x) const { return a.dot(x) + b; }
    static AffineData constant(int dim, double b) { return {Vec::Zero(dim), b}; }
    AffineData scaled(double k) const { return {k * a, k * b}; }
};

enum class InclusionMode {
    Tied,   // one unknown constant per inclusion
    Merged, // one unknown constant shared by both inclusions
    Fixed,  // prescribed constants (annulus problems)
};

enum class DofKind : unsigned char { Free, Dirichlet, Tied };

struct DofMap {
    std::vector<DofKind> kind; // per vertex
    std::vector<int> index;    // free index or tied group
    Vec dirichlet;             // per vertex, meaningful for Dirichlet vertices
    int num_free = 0;
    int num_tied = 0;
    bool merged = false;
    std::vector<int> group_of_inclusion; // -1 when fixed
    AffineData phi;

    int num_dofs() const { return num_free + num_tied; }
};

/// `fixed` holds the inclusion constants for InclusionMode::Fixed.
DofMap make_dofmap(const Mesh& mesh, const AffineData& phi, InclusionMode mode, const std::vector<double>& fixed = {});

/// Per-vertex values of a DOF vector.
Vec vertex_values(const Vec& dofs, const DofMap& map);

struct Assembly {
    double energy = 0.0;
    Vec gradient;                       // w.r.t. the DOFs
    Eigen::SparseMatrix<double> hessian; // empty unless requested
    long degenerate_elements = 0;
};

struct AssemblyOptions {
    bool hessian = true;
    bool general_path = false;   // use the norm calculus even for quadratic norms
    double degenerate_grad = 0.0; // H(grad u) at or below this uses mu_1 I
    int threads = 0;             // 0: hardware concurrency
};

/// Exact energy, gradient and Hessian of the piecewise-linear discretization. The result
/// does not depend on the thread count.
Assembly assemble(const Vec& dofs, const Mesh& mesh, const DofMap& map, const NormModel& norm,
                  const AssemblyOptions& opts = {});

struct DiscreteField {
    Vec dofs;
    Vec values;    // per vertex
    Mat gradients; // dim x elements
    double energy = 0.0;
    double U1 = 0.0;
    double U2 = 0.0;
};

struct SolveOptions {
    double rel_tol = 1e-10;
    int max_iter = 60;
    int threads = 0;
    bool general_path = false;
    bool use_cholmod = true;
    std::optional<Vec> initial;
    std::optional<std::pair<WulffConfig, NeckSpec>> neck; // for max_grad_neck
};

struct SolveReport {
    int iterations = 0;
    int gradient_steps = 0;
    bool converged = false;
    bool roundoff_stop = false;
    double energy = 0.0;
    double residual = 0.0;  // final max |gradient|
    double tolerance = 0.0; // absolute stopping tolerance
    double U1 = 0.0;
    double U2 = 0.0;
    double flux1 = 0.0;
    double flux2 = 0.0;
    double flux1_quadrature = 0.0;
    double flux2_quadrature = 0.0;
    double outer_flux = 0.0;
    double divergence_defect = 0.0;
    double max_grad = 0.0;
    double max_grad_neck = 0.0;
    long degenerate_elements = 0;
    double wall_time = 0.0;
    std::vector<double> energy_trace;
};

struct SolveResult {
    DiscreteField field;
    SolveReport report;
};

/// Damped Newton with Armijo backtracking on the energy and a gradient-step fallback.
/// Throws NumericError on stagnation or when max_iter is exhausted.
SolveResult solve(const Mesh& mesh, const DofMap& map, const NormModel& norm, const SolveOptions& opts = {});

struct FluxResult {
    double variational = 0.0; // minus the summed nodal residual over the inclusion
    double quadrature = 0.0;  // facet quadrature of H grad H(grad u) . nu
};

/// Flux through inclusion `which` (1 or 2), with nu the normal pointing out of the inclusion.
FluxResult flux_integral(const DiscreteField& field, const Mesh& mesh, const NormModel& norm, int which);

/// Summed nodal residual over the outer boundary (outward normal).
double outer_flux(const DiscreteField& field, const Mesh& mesh, const NormModel& norm);

struct MaxGrad {
    double value = 0.0;
    long element = -1;
    Vec location;
};

/// Largest element value of H(grad u); restricted to the neck when `neck` is given.
MaxGrad max_grad_H(const DiscreteField& field, const Mesh& mesh, const NormModel& norm,
                   const std::optional<std::pair<WulffConfig, NeckSpec>>& neck = std::nullopt);

struct R0Result {
    double delta_ref = 0.0;
    double flux_ref = 0.0;  // merged problem at delta_ref
    double flux_half = 0.0; // and at delta_ref / 2
    double R0 = 0.0;        // Richardson extrapolation, first order
    double relative_change = 0.0;
    bool warning = false;   // the two fluxes differ by more than 5%
};

/// R0 from the merged problem, solved at delta_ref and delta_ref / 2 (default 1e-3 R1).
R0Result compute_R0(const WulffConfig& cfg, const AffineData& phi, const MeshParams& mesh_params,
                    const SolveOptions& opts = {}, double delta_ref = 0.0);

struct MaxPrincipleReport {
    double u_interior_max = 0.0, u_interior_min = 0.0;
    double u_boundary_max = 0.0, u_boundary_min = 0.0;
    double u_excess = 0.0;             // how far interior extrema leave the boundary range
    bool inclusion_strictly_inside = true;
    double grad_interior_max = 0.0, grad_boundary_max = 0.0;
    double grad_excess = 0.0;          // interior / boundary - 1
    double p_interior_max = 0.0, p_boundary_max = 0.0;
    double p_excess = 0.0;
    bool lambda_below_lambda0 = false;
};

struct MaxPrincipleOptions {
    std::optional<CutoffSpec> cutoff; // f = 1 when absent
    double lambda = 0.0;
    double lambda_0 = 0.0;
};

MaxPrincipleReport verify_max_principles(const DiscreteField& field, const Mesh& mesh, const DofMap& map,
                                         const NormModel& norm, const MaxPrincipleOptions& opts = {});

/// Solves twice from independent random starts; returns the max-norm DOF difference
/// relative to the max-norm of the solution.
double uniqueness_probe(const Mesh& mesh, const DofMap& map, const NormModel& norm, const SolveOptions& opts = {},
                        unsigned seed = 7);

} // namespace fgap
