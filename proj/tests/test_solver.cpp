#include "fgap/solver.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace fgap;

namespace {

Mat diag(std::initializer_list<double> d) {
    Mat M = Mat::Zero(d.size(), d.size());
    int i = 0;
    for (double x : d) {
        M(i, i) = x;
        ++i;
    }
    return M;
}

Vec unit(int dim, int k) {
    Vec e = Vec::Zero(dim);
    e(k) = 1.0;
    return e;
}

MeshParams coarse() {
    MeshParams p;
    p.h_max = 0.5;
    p.k_gap = 4;
    return p;
}

WulffConfig gap_config(const NormModel& n, double delta = 0.1) { return make_wulff_config(n, 1.0, 1.0, delta, 4.0); }

AffineData vertical(int dim) { return {unit(dim, dim - 1), 0.0}; }

Vec random_dofs(long n, unsigned seed) {
    std::srand(seed);
    return Vec::Random(n);
}

} // namespace

TEST(Solver, ConstantDataGivesConstantSolution) {
    const auto cfg = gap_config(NormModel::euclidean(2));
    const Mesh mesh = build_mesh(MeshDomain::from_config(cfg), coarse());
    const DofMap map = make_dofmap(mesh, AffineData::constant(2, 3.5), InclusionMode::Tied);
    const auto res = solve(mesh, map, cfg.norm);
    EXPECT_TRUE(res.report.converged);
    EXPECT_LE((res.field.values.array() - 3.5).abs().maxCoeff(), 1e-12);
    EXPECT_NEAR(res.report.energy, 0.0, 1e-20);
    EXPECT_NEAR(res.report.U1, 3.5, 1e-12);
}

TEST(Solver, DofMapShape) {
    const auto cfg = gap_config(NormModel::euclidean(2));
    const Mesh mesh = build_mesh(MeshDomain::from_config(cfg), coarse());
    const auto tied = make_dofmap(mesh, vertical(2), InclusionMode::Tied);
    const auto merged = make_dofmap(mesh, vertical(2), InclusionMode::Merged);
    const auto fixed = make_dofmap(mesh, vertical(2), InclusionMode::Fixed, {1.0, -1.0});
    EXPECT_EQ(tied.num_tied, 2);
    EXPECT_EQ(merged.num_tied, 1);
    EXPECT_EQ(fixed.num_tied, 0);
    EXPECT_EQ(tied.num_free, fixed.num_free);
    EXPECT_THROW(make_dofmap(mesh, vertical(2), InclusionMode::Fixed, {1.0}), PreconditionError);
    EXPECT_THROW(make_dofmap(mesh, vertical(3), InclusionMode::Tied), PreconditionError);
    const Vec u = vertex_values(Vec::Zero(fixed.num_dofs()), fixed);
    for (long v = 0; v < mesh.num_vertices(); ++v) {
        if (mesh.vertex_tags[v] == BoundaryTag::Inclusion2) EXPECT_EQ(u(v), -1.0);
        if (mesh.vertex_tags[v] == BoundaryTag::Outer) EXPECT_DOUBLE_EQ(u(v), mesh.vertices(1, v));
    }
}

TEST(Solver, GradientAndHessianMatchFiniteDifferences) {
    const NormModel n = NormModel::perturbed_ellipse(diag({1.0, 2.0}), 0.05, 2);
    const auto cfg = gap_config(n, 0.2);
    const Mesh mesh = build_mesh(MeshDomain::from_config(cfg), coarse());
    const DofMap map = make_dofmap(mesh, vertical(2), InclusionMode::Tied);
    const Vec x = random_dofs(map.num_dofs(), 3);
    const Assembly a = assemble(x, mesh, map, n);
    AssemblyOptions eo;
    eo.hessian = false;
    const double h = 1e-6;
    for (int k : {0, 7, map.num_free - 1, map.num_free, map.num_free + 1}) {
        Vec xp = x, xm = x;
        xp(k) += h;
        xm(k) -= h;
        const auto ap = assemble(xp, mesh, map, n, eo), am = assemble(xm, mesh, map, n, eo);
        EXPECT_NEAR((ap.energy - am.energy) / (2 * h), a.gradient(k), 1e-6 * (1 + std::abs(a.gradient(k))));
        const Vec col = (ap.gradient - am.gradient) / (2 * h);
        const Vec hcol = a.hessian.col(k);
        EXPECT_LE((col - hcol).cwiseAbs().maxCoeff(), 1e-5 * (1 + hcol.cwiseAbs().maxCoeff()));
    }
}

TEST(Solver, HessianIsSymmetricPositiveDefinite) {
    const auto cfg = gap_config(NormModel::ellipse(diag({2.0, 0.5})));
    const Mesh mesh = build_mesh(MeshDomain::from_config(cfg), coarse());
    const DofMap map = make_dofmap(mesh, vertical(2), InclusionMode::Tied);
    const Assembly a = assemble(Vec::Zero(map.num_dofs()), mesh, map, cfg.norm);
    const Eigen::SparseMatrix<double> asym = a.hessian - Eigen::SparseMatrix<double>(a.hessian.transpose());
    EXPECT_LE(asym.norm(), 1e-14 * a.hessian.norm());
    Eigen::SimplicialLLT<Eigen::SparseMatrix<double>> llt(a.hessian);
    EXPECT_EQ(llt.info(), Eigen::Success);
}

TEST(Solver, QuadraticFastPathMatchesGeneralPath) {
    const auto cfg = gap_config(NormModel::ellipse(diag({3.0, 1.0})));
    const Mesh mesh = build_mesh(MeshDomain::from_config(cfg), coarse());
    const DofMap map = make_dofmap(mesh, vertical(2), InclusionMode::Tied);
    const Vec x = random_dofs(map.num_dofs(), 5);
    AssemblyOptions g;
    g.general_path = true;
    const auto a = assemble(x, mesh, map, cfg.norm), b = assemble(x, mesh, map, cfg.norm, g);
    EXPECT_NEAR(a.energy, b.energy, 1e-12 * a.energy);
    EXPECT_LE((a.gradient - b.gradient).cwiseAbs().maxCoeff(), 1e-11);
    EXPECT_LE((a.hessian - b.hessian).norm(), 1e-11 * a.hessian.norm());
}

TEST(Solver, AnnulusConvergesToRadialSolution) {
    for (const NormModel& n : {NormModel::euclidean(2), NormModel::ellipse(diag({1.0, 4.0}))}) {
        AnnulusSpec spec{n, 1.0, 2.0, 1.0, 0.0, Vec::Zero(2)};
        double prev = 0.0;
        for (double hmax : {0.2, 0.1}) {
            MeshParams p;
            p.h_max = hmax;
            p.theta = 1.0;
            const Mesh mesh = build_mesh(MeshDomain::annulus(n, Vec::Zero(2), 1.0, 2.0), p);
            const DofMap map = make_dofmap(mesh, AffineData::constant(2, 0.0), InclusionMode::Fixed, {1.0});
            const auto res = solve(mesh, map, n);
            double err = 0.0;
            for (long v = 0; v < mesh.num_vertices(); ++v)
                err = std::max(err, std::abs(res.field.values(v) - annulus_solution(spec, mesh.vertices.col(v))));
            EXPECT_LT(err, 5e-3);
            if (prev > 0.0) EXPECT_LT(err, 0.5 * prev);
            prev = err;
        }
    }
}

TEST(Solver, SolutionIsOneHomogeneousInTheData) {
    const NormModel n = NormModel::perturbed_ellipse(diag({1.0, 1.5}), 0.05, 2);
    const auto cfg = gap_config(n, 0.2);
    const Mesh mesh = build_mesh(MeshDomain::from_config(cfg), coarse());
    const AffineData phi{Vec::Ones(2), 0.3};
    const auto a = solve(mesh, make_dofmap(mesh, phi, InclusionMode::Tied), n);
    const auto b = solve(mesh, make_dofmap(mesh, phi.scaled(-2.5), InclusionMode::Tied), n);
    EXPECT_LE((b.field.values + 2.5 * a.field.values).cwiseAbs().maxCoeff(), 1e-8 * a.field.values.cwiseAbs().maxCoeff());
    EXPECT_NEAR(b.report.energy, 6.25 * a.report.energy, 1e-9 * b.report.energy);
}

TEST(Solver, EllipseSolveEqualsEuclideanSolveInMeshingFrame) {
    const NormModel n = NormModel::ellipse(diag({4.0, 1.0}));
    const auto cfg = gap_config(n, 0.1);
    const Mesh mesh = build_mesh(MeshDomain::from_config(cfg), coarse());
    Mesh ym = mesh;
    const Mat Tinv = mesh.T.inverse();
    for (long v = 0; v < mesh.num_vertices(); ++v) ym.vertices.col(v) = Tinv * (mesh.vertices.col(v) - mesh.origin);
    const AffineData phi{Vec::Ones(2), 0.5};
    const AffineData phi_y{mesh.T.transpose() * phi.a, phi.a.dot(mesh.origin) + phi.b};
    SolveOptions o;
    o.general_path = true;
    const auto a = solve(mesh, make_dofmap(mesh, phi, InclusionMode::Tied), n, o);
    const auto b = solve(ym, make_dofmap(ym, phi_y, InclusionMode::Tied), NormModel::euclidean(2));
    EXPECT_LE((a.field.values - b.field.values).cwiseAbs().maxCoeff(), 1e-9);
    EXPECT_NEAR(a.report.energy, b.report.energy * std::abs(mesh.T.determinant()), 1e-9 * a.report.energy);
}

TEST(Solver, FluxesBalance) {
    const NormModel n = NormModel::perturbed_ellipse(diag({1.0, 2.0}), 0.05, 2);
    const auto cfg = gap_config(n, 0.1);
    const Mesh mesh = build_mesh(MeshDomain::from_config(cfg), coarse());
    const auto tied = solve(mesh, make_dofmap(mesh, vertical(2), InclusionMode::Tied), n);
    const double scale = std::abs(tied.report.outer_flux) + 1.0;
    EXPECT_LE(std::abs(tied.report.flux1), 1e-8 * scale);
    EXPECT_LE(std::abs(tied.report.flux2), 1e-8 * scale);
    EXPECT_LE(tied.report.divergence_defect, 1e-8 * scale);
    EXPECT_GT(tied.report.U1, tied.report.U2);

    const auto merged = solve(mesh, make_dofmap(mesh, vertical(2), InclusionMode::Merged), n);
    EXPECT_NEAR(merged.report.U1, merged.report.U2, 1e-14);
    EXPECT_GT(std::abs(merged.report.flux1), 0.1);
    EXPECT_NEAR(merged.report.flux1, -merged.report.flux2, 1e-8 * std::abs(merged.report.flux1));
    EXPECT_LE(merged.report.divergence_defect, 1e-8 * std::abs(merged.report.flux1));
}

TEST(Solver, QuadratureFluxApproachesVariationalFlux) {
    const auto cfg = gap_config(NormModel::ellipse(diag({2.0, 1.0})), 0.2);
    Mesh mesh = build_mesh(MeshDomain::from_config(cfg), coarse());
    double prev = 0.0;
    for (int level = 0; level < 3; ++level) {
        const auto r = solve(mesh, make_dofmap(mesh, vertical(2), InclusionMode::Merged), cfg.norm).report;
        const double gap = std::abs(r.flux1_quadrature - r.flux1) / std::abs(r.flux1);
        if (level > 0) EXPECT_LT(gap, 0.75 * prev);
        prev = gap;
        mesh = refine_uniform(mesh);
    }
    EXPECT_LT(prev, 0.05);
}

TEST(Solver, RandomStartsAgree) {
    const NormModel n = NormModel::perturbed_ellipse(diag({1.0, 2.0}), 0.05, 2);
    const auto cfg = gap_config(n, 0.2);
    const Mesh mesh = build_mesh(MeshDomain::from_config(cfg), coarse());
    const DofMap map = make_dofmap(mesh, vertical(2), InclusionMode::Tied);
    EXPECT_LT(uniqueness_probe(mesh, map, n), 1e-8);
}

TEST(Solver, ThreadCountDoesNotChangeResult) {
    const NormModel n = NormModel::perturbed_ellipse(diag({1.0, 2.0}), 0.05, 2);
    const auto cfg = gap_config(n, 0.05);
    MeshParams p = coarse();
    p.h_max = 0.2;
    const Mesh mesh = build_mesh(MeshDomain::from_config(cfg), p);
    const DofMap map = make_dofmap(mesh, vertical(2), InclusionMode::Tied);
    SolveOptions one, four;
    one.threads = 1;
    four.threads = 4;
    const auto a = solve(mesh, map, n, one), b = solve(mesh, map, n, four);
    EXPECT_EQ(a.report.iterations, b.report.iterations);
    EXPECT_EQ(a.report.energy, b.report.energy);
    EXPECT_TRUE(a.field.dofs == b.field.dofs);
}

TEST(Solver, DiscreteMaximumPrinciple) {
    const auto cfg = gap_config(NormModel::ellipse(diag({2.0, 1.0})), 0.05);
    const Mesh mesh = build_mesh(MeshDomain::from_config(cfg), coarse());
    const DofMap map = make_dofmap(mesh, AffineData{Vec::Ones(2), 0.0}, InclusionMode::Tied);
    const auto res = solve(mesh, map, cfg.norm);
    const auto mp = verify_max_principles(res.field, mesh, map, cfg.norm);
    EXPECT_LE(mp.u_excess, 1e-10);
    EXPECT_TRUE(mp.inclusion_strictly_inside);
    EXPECT_GT(mp.grad_interior_max, 0.0);
}

TEST(Solver, ThreeDimensionalGap) {
    const auto cfg = make_wulff_config(NormModel::ellipse(diag({1.0, 1.0, 2.0})), 1.0, 1.0, 0.2, 3.0);
    MeshParams p = coarse();
    p.sectors = 8;
    const Mesh mesh = build_mesh(MeshDomain::from_config(cfg), p);
    const auto res = solve(mesh, make_dofmap(mesh, vertical(3), InclusionMode::Tied), cfg.norm);
    EXPECT_TRUE(res.report.converged);
    EXPECT_GT(res.report.U1, res.report.U2);
    EXPECT_NEAR(res.report.U1, -res.report.U2, 1e-2 * res.report.U1);
    EXPECT_GT(res.report.max_grad, 0.0);
}

TEST(Solver, MaxGradRestrictedToNeck) {
    const auto cfg = gap_config(NormModel::euclidean(2), 0.05);
    const Mesh mesh = build_mesh(MeshDomain::from_config(cfg), coarse());
    SolveOptions o;
    o.neck = std::make_pair(cfg, NeckSpec{0.3, 1.0});
    const auto res = solve(mesh, make_dofmap(mesh, vertical(2), InclusionMode::Tied), cfg.norm, o);
    EXPECT_GT(res.report.max_grad_neck, 0.0);
    EXPECT_LE(res.report.max_grad_neck, res.report.max_grad);
    const auto m = max_grad_H(res.field, mesh, cfg.norm, o.neck);
    EXPECT_TRUE(neck_membership(m.location, cfg, o.neck->second));
}

TEST(Solver, MergedFluxExtrapolation) {
    const auto cfg = gap_config(NormModel::euclidean(2), 0.1);
    const auto r = compute_R0(cfg, vertical(2), coarse());
    EXPECT_DOUBLE_EQ(r.delta_ref, 1e-3);
    EXPECT_GT(std::abs(r.R0), 0.1);
    EXPECT_NEAR(r.R0, 2 * r.flux_half - r.flux_ref, 1e-12 * std::abs(r.R0));
    EXPECT_LT(r.relative_change, 0.05);
    EXPECT_FALSE(r.warning);
}
