#include "fgap/mesh.hpp"

#include <gtest/gtest.h>

#include <map>

#include <cmath>
#include <numbers>
#include <sstream>

using namespace fgap;

namespace {

constexpr double kPi = std::numbers::pi;

Mat diag(std::initializer_list<double> d) {
    Mat M = Mat::Zero(d.size(), d.size());
    int i = 0;
    for (double x : d) {
        M(i, i) = x;
        ++i;
    }
    return M;
}

double total_volume(const Mesh& m) {
    double v = 0.0;
    for (long e = 0; e < m.num_elements(); ++e) v += m.volume(e);
    return v;
}

double longest_edge(const Mesh& m, long e) {
    const int* v = m.element(e);
    double l = 0.0;
    for (int i = 0; i <= m.dim; ++i)
        for (int j = i + 1; j <= m.dim; ++j) l = std::max(l, (m.vertices.col(v[i]) - m.vertices.col(v[j])).norm());
    return l;
}

} // namespace

TEST(Mesh, SmokeTwoInclusions) {
    auto cfg = make_wulff_config(NormModel::euclidean(2), 1.0, 1.0, 0.1);
    MeshParams p;
    const Mesh m = build_mesh(MeshDomain::from_config(cfg), p);
    const auto rep = validate_mesh(m);
    EXPECT_TRUE(rep.ok());
    EXPECT_TRUE(rep.conforming);
    EXPECT_EQ(rep.inverted, 0);
    EXPECT_GE(rep.gap_layers, p.k_gap);
    EXPECT_GT(rep.quality.min_angle_deg, 10.0);
    const double exact = kPi * (64.0 - 2.0);
    EXPECT_NEAR(total_volume(m) / exact, 1.0, 2e-3);
}

TEST(Mesh, GradingContract) {
    const double delta = 1e-3;
    auto cfg = make_wulff_config(NormModel::euclidean(2), 1.0, 1.0, delta);
    MeshParams p;
    const Mesh m = build_mesh(MeshDomain::from_config(cfg), p);
    const auto rep = validate_mesh(m);
    EXPECT_TRUE(rep.ok());
    EXPECT_GE(rep.gap_layers, 8);
    double smallest = 1e300;
    for (long e = 0; e < m.num_elements(); ++e) {
        const Vec c = m.centroid(e);
        if (std::abs(c(0)) < delta && std::abs(c(1)) < delta) smallest = std::min(smallest, longest_edge(m, e));
    }
    EXPECT_LE(smallest, delta / 8);
}

TEST(Mesh, HalvingHminQuadruplesGapCount) {
    const double delta = 1e-2;
    auto cfg = make_wulff_config(NormModel::euclidean(2), 1.0, 1.0, delta);
    MeshParams p;
    p.theta = 0.05;
    p.h_min = delta / 16;
    auto count = [&](const MeshParams& q) {
        const Mesh m = build_mesh(MeshDomain::from_config(cfg), q);
        long n = 0;
        for (long e = 0; e < m.num_elements(); ++e) {
            const Vec c = m.centroid(e);
            if (std::abs(c(0)) < 0.5 * delta && std::abs(c(1)) < delta) ++n;
        }
        return n;
    };
    const long n1 = count(p);
    p.h_min /= 2;
    const long n2 = count(p);
    EXPECT_GT(static_cast<double>(n2) / n1, 3.0);
    EXPECT_LT(static_cast<double>(n2) / n1, 5.5);
}

TEST(Mesh, AnisotropicNormsStayOnBoundary) {
    Mat M(2, 2);
    M << 2.0, 0.3, 0.3, 1.0;
    for (const auto& n : {NormModel::ellipse(M), NormModel::perturbed_ellipse(M, 0.02, 4), NormModel::ellipse(diag({1, 4}))}) {
        auto cfg = make_wulff_config(n, 1.0, 1.5, 0.05);
        const Mesh m = build_mesh(MeshDomain::from_config(cfg), MeshParams{});
        const auto rep = validate_mesh(m);
        EXPECT_TRUE(rep.ok());
        EXPECT_EQ(rep.boundary_vertices_off_curve, 0);
        EXPECT_GE(rep.gap_layers, 8);
        if (n.is_quadratic()) {
            const double area = kPi * (cfg.outer_radius * cfg.outer_radius - 1.0 - 2.25) * std::sqrt(n.matrix().determinant());
            EXPECT_NEAR(total_volume(m) / area, 1.0, 2e-3);
        }
    }
}

TEST(Mesh, DelaunayInMeshingFrame) {
    // for quadratic norms the P1 stiffness in x is the Euclidean one in the meshing frame,
    // so opposite angles there sum to at most pi on every interior edge
    Mat M(2, 2);
    M << 2.0, 0.3, 0.3, 1.0;
    auto cfg = make_wulff_config(NormModel::ellipse(M), 1.0, 1.0, 0.02);
    const Mesh m = build_mesh(MeshDomain::from_config(cfg), MeshParams{});
    const Mat Tinv = m.T.inverse();
    std::map<std::pair<int, int>, double> opposite;
    long bad = 0;
    for (long e = 0; e < m.num_elements(); ++e) {
        const int* v = m.element(e);
        for (int i = 0; i < 3; ++i) {
            const int a = v[(i + 1) % 3], b = v[(i + 2) % 3];
            const Vec p = Tinv * (m.vertices.col(v[i]) - m.origin);
            const Vec pa = Tinv * (m.vertices.col(a) - m.origin) - p;
            const Vec pb = Tinv * (m.vertices.col(b) - m.origin) - p;
            const double ang = std::acos(pa.dot(pb) / (pa.norm() * pb.norm()));
            auto key = std::minmax(a, b);
            auto it = opposite.find(key);
            if (it == opposite.end())
                opposite[key] = ang;
            else if (it->second + ang > kPi + 1e-6)
                ++bad;
        }
    }
    EXPECT_EQ(bad, 0);
}

TEST(Mesh, UniformRefinement2D) {
    const auto n = NormModel::ellipse(diag({2.0, 1.0}));
    MeshParams p;
    p.h_max = 0.4;
    const Mesh m0 = build_mesh(MeshDomain::annulus(n, Vec::Zero(2), 0.5, 2.0), p);
    const Mesh m1 = refine_uniform(m0);
    EXPECT_EQ(m1.num_elements(), 4 * m0.num_elements());
    EXPECT_EQ(m1.num_facets(), 2 * m0.num_facets());
    const auto rep = validate_mesh(m1);
    EXPECT_TRUE(rep.ok());
    const double area = kPi * (4.0 - 0.25) * std::sqrt(2.0);
    const double e0 = std::abs(total_volume(m0) - area), e1 = std::abs(total_volume(m1) - area);
    // outer and hole polygon errors partly cancel, so the ratio is only roughly 4
    EXPECT_GT(e0 / e1, 3.0);
    EXPECT_LT(e0 / e1, 6.0);
}

TEST(Mesh, ConcentricShell3D) {
    const auto n = NormModel::ellipse(diag({1.0, 2.0, 1.5}));
    MeshParams p;
    p.h_max = 0.3;
    p.sectors = 12;
    const Mesh m = build_mesh(MeshDomain::annulus(n, Vec::Zero(3), 0.6, 2.0), p);
    const auto rep = validate_mesh(m);
    EXPECT_TRUE(rep.ok());
    const double vol = 4.0 / 3.0 * kPi * (8.0 - 0.216) * std::sqrt(3.0);
    EXPECT_NEAR(total_volume(m) / vol, 1.0, 0.05);
    const Mesh r = refine_uniform(m);
    EXPECT_EQ(r.num_elements(), 8 * m.num_elements());
    const auto rr = validate_mesh(r);
    EXPECT_TRUE(rr.ok());
    EXPECT_LT(std::abs(total_volume(r) - vol), std::abs(total_volume(m) - vol));
}

TEST(Mesh, Revolved3DGap) {
    auto cfg = make_wulff_config(NormModel::euclidean(3), 1.0, 1.0, 0.05);
    MeshParams p;
    p.h_max = 0.5;
    p.sectors = 8;
    const Mesh m = build_mesh(MeshDomain::from_config(cfg), p);
    const auto rep = validate_mesh(m);
    EXPECT_TRUE(rep.ok());
    EXPECT_GE(rep.gap_layers, 8);
}

TEST(Mesh, TextRoundTrip) {
    auto cfg = make_wulff_config(NormModel::euclidean(2), 1.0, 2.0, 0.1);
    const Mesh m = build_mesh(MeshDomain::from_config(cfg), MeshParams{});
    std::stringstream ss;
    write_mesh(ss, m);
    const Mesh r = read_mesh(ss);
    EXPECT_EQ(r.vertices, m.vertices);
    EXPECT_EQ(r.simplices, m.simplices);
    EXPECT_EQ(r.facets, m.facets);
    EXPECT_EQ(r.facet_tags, m.facet_tags);
    std::stringstream bad("mesh\n");
    EXPECT_THROW(read_mesh(bad), ConfigError);
}

TEST(Mesh, Deterministic) {
    auto cfg = make_wulff_config(NormModel::euclidean(2), 1.0, 1.0, 0.01);
    const Mesh a = build_mesh(MeshDomain::from_config(cfg), MeshParams{});
    const Mesh b = build_mesh(MeshDomain::from_config(cfg), MeshParams{});
    EXPECT_EQ(a.vertices, b.vertices);
    EXPECT_EQ(a.simplices, b.simplices);
}

TEST(Mesh, Errors) {
    auto cfg = make_wulff_config(NormModel::euclidean(2), 1.0, 1.0, 1e-4);
    MeshParams p;
    p.max_elements = 2000;
    EXPECT_THROW(build_mesh(MeshDomain::from_config(cfg), p), ResourceError);
    EXPECT_THROW(build_mesh(MeshDomain::annulus(NormModel::euclidean(4), Vec::Zero(4), 1.0, 2.0), MeshParams{}),
                 PreconditionError);
    Mat M = diag({1.0, 1.0});
    EXPECT_THROW(build_mesh(MeshDomain::annulus(NormModel::perturbed_ellipse(M, 0.01, 4), Vec::Zero(2), 1.0, 0.5),
                            MeshParams{}),
                 DomainError);
}

TEST(Mesh, ElementGeometry) {
    Mesh m;
    m.dim = 2;
    m.vertices.resize(2, 3);
    m.vertices << 0, 2, 0, 0, 0, 1;
    m.simplices = {0, 1, 2};
    Mat G;
    double vol;
    element_geometry(m, 0, G, vol);
    EXPECT_DOUBLE_EQ(vol, 1.0);
    EXPECT_NEAR((G.rowwise().sum()).norm(), 0.0, 1e-15);
    EXPECT_NEAR(G(0, 1), 0.5, 1e-15);
    EXPECT_NEAR(G(1, 2), 1.0, 1e-15);
    Vec x(2);
    x << 0.5, 0.25;
    EXPECT_EQ(locate_element(m, x), 0);
    x << 3, 3;
    EXPECT_EQ(locate_element(m, x), -1);
}
