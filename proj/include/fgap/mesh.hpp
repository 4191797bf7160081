#pragma once

// Simplicial meshes of the region between an outer Wulff ball and one or two Wulff
// inclusions.
//
// Meshing happens in a frame y with x = origin + T y, where T = M^{1/2} R and M is the
// quadratic part of the norm. For Euclidean and Ellipse norms every Wulff ball is a
// Euclidean ball in y, so the 2-D mesher is a plain Delaunay mesher and P1 stiffness in x
// equals the Euclidean one in y. 3-D meshes are built by revolving a 2-D meridian mesh
// about the e_N axis (quadratic norms only).

#include "fgap/geometry.hpp"

#include <array>
#include <iosfwd>
#include <memory>
#include <optional>
#include <vector>

namespace fgap {

enum class BoundaryTag : int { Interior = 0, Outer = 1, Inclusion1 = 2, Inclusion2 = 3, Axis = 4 };

const char* to_string(BoundaryTag tag);

/// What to mesh. All inclusion centers must lie on the line outer.center + s e_N.
struct MeshDomain {
    NormModel norm;
    int dim = 2;
    std::vector<WulffShape> inclusions{}; // one or two; tags Inclusion1, Inclusion2 in order
    WulffShape outer{};
    std::optional<Vec> focus{};         // grading center (touching point), if any
    double delta = 0.0;                 // gap width, 0 when there is no gap

    static MeshDomain from_config(const WulffConfig& cfg);
    static MeshDomain annulus(const NormModel& norm, const Vec& center, double r, double R);
};

struct MeshParams {
    double h_max = 0.25;
    double h_min = 0.0;   // 0: delta / (2 k_gap)
    double theta = 0.25;  // grading slope away from the focus
    int k_gap = 8;        // element layers across the gap
    int sectors = 16;     // 3-D revolution sectors
    long max_elements = 3000000;
    double jitter = 0.1;
    unsigned seed = 12345;
};

struct MeshQuality {
    double min_angle_deg = 0.0; // 2-D only
    double min_volume = 0.0;
    double max_aspect = 0.0;    // longest edge / inradius, normalized to 1 for regular
    long inverted = 0;
};

struct Mesh {
    int dim = 2;
    Mat vertices;                        // dim x nv
    std::vector<int> simplices;          // (dim + 1) per element, positively oriented
    std::vector<int> facets;             // dim per boundary facet
    std::vector<BoundaryTag> facet_tags;
    std::vector<BoundaryTag> vertex_tags;

    std::shared_ptr<const MeshDomain> domain; // for boundary projection on refinement
    Mat T;                                    // x = origin + T y
    Vec origin;

    long num_vertices() const { return vertices.cols(); }
    long num_elements() const { return static_cast<long>(simplices.size()) / (dim + 1); }
    long num_facets() const { return static_cast<long>(facets.size()) / dim; }
    const int* element(long e) const { return simplices.data() + e * (dim + 1); }
    const int* facet(long f) const { return facets.data() + f * dim; }
    Vec centroid(long e) const;
    double volume(long e) const;
};

/// Builds the mesh. Throws ResourceError when the estimated element count exceeds
/// params.max_elements, PreconditionError for N >= 4 or a non-quadratic norm in 3-D.
Mesh build_mesh(const MeshDomain& domain, const MeshParams& params);

/// Splits every simplex uniformly (1 -> 4 in 2-D, red 1 -> 8 in 3-D), projecting new
/// boundary vertices radially onto their Wulff boundary.
Mesh refine_uniform(const Mesh& mesh);

struct MeshReport {
    bool conforming = false;
    long inverted = 0;
    long untagged_boundary_facets = 0;
    long gap_layers = -1; // elements crossed along the axis inside the gap, -1 without a gap
    long boundary_vertices_off_curve = 0;
    MeshQuality quality;
    bool ok() const { return conforming && inverted == 0 && untagged_boundary_facets == 0 && boundary_vertices_off_curve == 0; }
};

MeshReport validate_mesh(const Mesh& mesh, int k_gap = 0);

MeshQuality mesh_quality(const Mesh& mesh);

/// Plain-text format:
///
///   # finsler-gap mesh v1
///   dim <N>
///   vertices <nv>
///   <x_1> ... <x_N>                 (nv lines)
///   simplices <ne>
///   <v_0> ... <v_N>                 (ne lines, 0-based)
///   facets <nf>
///   <tag> <v_0> ... <v_{N-1}>       (nf lines; 1 outer, 2 inclusion1, 3 inclusion2)
void write_mesh(std::ostream& out, const Mesh& mesh);
Mesh read_mesh(std::istream& in);

/// Index of the element containing x (brute force), or -1.
long locate_element(const Mesh& mesh, const Vec& x);

/// Barycentric gradients of element e (columns) and its volume.
void element_geometry(const Mesh& mesh, long e, Mat& grads, double& volume);

} // namespace fgap
