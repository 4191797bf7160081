#pragma once

// Anisotropic norm calculus: the norm H acting on gradients (dual space), its
// dual H0 acting on points, their derivatives, and the dual map H*grad(H).

#include "fgap/types.hpp"

#include <utility>

namespace fgap {

enum class NormFamily { Euclidean, Ellipse, PerturbedEllipse };

const char* to_string(NormFamily family);
NormFamily norm_family_from_string(const std::string& name);

/// Value, gradient and Hessian of H at a nonzero point.
struct NormJet {
    double value = 0.0;
    Vec gradient;
    Mat hessian;
};

/// A = 1/2 Hessian of H^2 together with its extreme eigenvalues.
struct EnergyHessian {
    Mat A;
    double mu_min = 0.0;
    double mu_max = 0.0;
};

/// Best constants of the uniform ellipticity bound, estimated by sampling.
struct EllipticityBounds {
    double lambda_lower = 0.0;
    double lambda_upper = 0.0;
};

/// A smooth, centrally symmetric, uniformly elliptic norm from one of three families.
///
/// * Euclidean:         H(xi) = |xi|
/// * Ellipse(M):        H(xi) = sqrt(xi^T M xi), M symmetric positive definite
/// * PerturbedEllipse:  H(xi) = sqrt(xi^T M xi) * (1 + beta cos(k theta)), 2-D only,
///                      theta = angle of xi, k even so that H(-xi) = H(xi).
///
/// A PerturbedEllipse may carry an orthogonal frame F, in which case
/// H(xi) = H_base(F xi). Ellipse and Euclidean fold rotations into M.
class NormModel {
public:
    static NormModel euclidean(int dim);
    static NormModel ellipse(const Mat& M);
    /// Throws NonEllipticNormError when beta is too large for the probe to find lambda_* > 0.
    static NormModel perturbed_ellipse(const Mat& M, double beta, int k);

    /// The same norm expressed in coordinates rotated by the orthogonal matrix R:
    /// the returned norm satisfies H'(R xi) = H(xi).
    NormModel rotated(const Mat& R) const;

    NormFamily family() const { return family_; }
    int dim() const { return dim_; }
    const Mat& matrix() const { return M_; }
    const Mat& frame() const { return frame_; }
    double beta() const { return beta_; }
    int k() const { return k_; }

    /// True when H is a quadratic form (Euclidean or Ellipse), so that A(xi) == M.
    bool is_quadratic() const { return family_ != NormFamily::PerturbedEllipse; }

    /// H(xi); H(0) = 0.
    double value(const Vec& xi) const;

    /// Smallest eigenvalue of A over the unit sphere (sampled for non-quadratic norms).
    double energy_floor() const { return energy_floor_; }

private:
    NormModel() = default;
    void compute_energy_floor();

    friend NormJet eval_jet(const NormModel&, const Vec&);
    friend double eval_dual(const NormModel&, const Vec&);

    NormFamily family_ = NormFamily::Euclidean;
    int dim_ = 2;
    Mat M_;
    Mat M_inv_;
    Mat frame_;
    double beta_ = 0.0;
    int k_ = 0;
    double energy_floor_ = 1.0;
};

/// H, grad H, Hessian H at xi != 0. Throws DegeneratePointError at the origin.
NormJet eval_jet(const NormModel& norm, const Vec& xi);

/// Dual norm H0(x) = sup_{xi != 0} x.xi / H(xi). Closed form for quadratic norms;
/// multi-start ascent over the unit circle for PerturbedEllipse.
double eval_dual(const NormModel& norm, const Vec& x);

/// H(xi) grad H(xi); continuous extension 0 at xi = 0.
Vec dual_map(const NormModel& norm, const Vec& xi);

/// Inverse of dual_map, i.e. H0(x) grad H0(x), by damped Newton seeded at `seed`
/// (defaults to x). Throws NumericError when the residual stalls above 1e-12 |x|.
Vec inverse_dual_map(const NormModel& norm, const Vec& x);
Vec inverse_dual_map(const NormModel& norm, const Vec& x, const Vec& seed);

/// A(xi) = grad H grad H^T + H Hess H. Throws DegeneratePointError at the origin.
EnergyHessian energy_hessian(const NormModel& norm, const Vec& xi);

EllipticityBounds ellipticity_probe(const NormModel& norm, int samples);

/// H0, grad H0 and Hessian H0 at x != 0. For non-quadratic norms the Hessian comes
/// from Legendre duality: Hess(H0^2/2)(x) = A(xi)^{-1} with xi = inverse_dual_map(x).
NormJet eval_dual_jet(const NormModel& norm, const Vec& x);

/// Worst relative violations of the norm identities over random nonzero xi (magnitudes
/// spread over six decades): Euler relation, H0(grad H) = 1, dual-map round trip and
/// A(xi) xi . xi = H(xi)^2.
struct IdentityReport {
    int samples = 0;
    double euler = 0.0;
    double dual_of_gradient = 0.0;
    double round_trip = 0.0;
    double hessian_quadratic = 0.0;

    bool ok() const { return euler <= 1e-10 && dual_of_gradient <= 1e-8 && round_trip <= 1e-8 && hessian_quadratic <= 1e-10; }
};

IdentityReport identity_suite(const NormModel& norm, int samples = 1000, unsigned seed = 1);

} // namespace fgap
