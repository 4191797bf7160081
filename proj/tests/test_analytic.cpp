#include "fgap/analytic.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

using namespace fgap;

namespace {

Vec v2(double a, double b) {
    Vec v(2);
    v << a, b;
    return v;
}

Mat diag2(double a, double b) {
    Mat M = Mat::Zero(2, 2);
    M(0, 0) = a;
    M(1, 1) = b;
    return M;
}

AnnulusSpec annulus(const NormModel& n, double r, double R, double Cr, double CR) {
    return AnnulusSpec{n, r, R, Cr, CR, Vec::Zero(n.dim())};
}

// point at H0-radius rho in direction u
Vec at_radius(const NormModel& n, const Vec& u, double rho) { return rho / eval_dual(n, u) * u; }

constexpr double kPi = std::numbers::pi;

} // namespace

TEST(Annulus, Examples) {
    const auto e2 = NormModel::euclidean(2);
    auto s = annulus(e2, 1.0, 2.0, 1.0, 0.0);
    EXPECT_NEAR(annulus_solution(s, v2(std::sqrt(2.0), 0)), 0.5, 1e-15);
    EXPECT_NEAR(annulus_solution(s, v2(0, 1)), 1.0, 1e-15);
    EXPECT_NEAR(annulus_solution(s, v2(0, -2)), 0.0, 1e-15);
    auto s3 = annulus(NormModel::euclidean(3), 1.0, 2.0, 1.0, 0.0);
    Vec x = Vec::Zero(3);
    x(2) = 1.5;
    EXPECT_NEAR(annulus_solution(s3, x), 1.0 / 3.0, 1e-15);
    EXPECT_THROW(annulus_solution(s, v2(3, 0)), DomainError);
    EXPECT_THROW(annulus_solution(s, v2(0.5, 0)), DomainError);
}

TEST(Annulus, MidvalueRadius) {
    Mat M(2, 2);
    M << 2.0, 0.3, 0.3, 1.0;
    const auto n = NormModel::ellipse(M);
    auto s = annulus(n, 0.5, 2.0, 3.0, -1.0);
    const Vec p = at_radius(n, v2(0.3, 1.0), annulus_midvalue_radius(2, 0.5, 2.0));
    EXPECT_NEAR(annulus_solution(s, p), 1.0, 1e-14);
    Mat M3 = Mat::Identity(3, 3);
    M3(0, 0) = 2.0;
    const auto n3 = NormModel::ellipse(M3);
    auto s3 = annulus(n3, 0.5, 2.0, 3.0, -1.0);
    Vec u = Vec::Ones(3);
    EXPECT_NEAR(annulus_solution(s3, at_radius(n3, u, annulus_midvalue_radius(3, 0.5, 2.0))), 1.0, 1e-14);
}

TEST(Annulus, GradientBounds) {
    auto b = annulus_gradient_bounds(annulus(NormModel::euclidean(2), 1.0, std::exp(1.0), 1.0, 0.0));
    EXPECT_NEAR(b.lower, std::exp(-1.0), 1e-15);
    EXPECT_NEAR(b.upper, 1.0, 1e-15);
    auto z = annulus_gradient_bounds(annulus(NormModel::euclidean(2), 1.0, 2.0, 0.7, 0.7));
    EXPECT_EQ(z.lower, 0.0);
    EXPECT_EQ(z.upper, 0.0);

    Mat M(2, 2);
    M << 2.0, 0.3, 0.3, 1.0;
    Mat M3 = Mat::Identity(3, 3);
    M3(1, 1) = 3.0;
    for (const auto& n : {NormModel::ellipse(M), NormModel::perturbed_ellipse(M, 0.02, 4), NormModel::ellipse(M3)}) {
        auto s = annulus(n, 0.7, 2.5, -1.0, 2.0);
        auto bb = annulus_gradient_bounds(s);
        std::mt19937_64 rng(1);
        std::normal_distribution<double> g;
        for (int i = 0; i < 200; ++i) {
            Vec u(n.dim());
            for (int d = 0; d < n.dim(); ++d) u(d) = g(rng);
            const double rho = 0.7 + (2.5 - 0.7) * i / 199.0;
            const Vec x = at_radius(n, u, rho);
            const double h = n.value(annulus_gradient(s, x));
            EXPECT_GE(h, bb.lower * (1 - 1e-10));
            EXPECT_LE(h, bb.upper * (1 + 1e-10));
        }
    }
}

TEST(Annulus, GradientMatchesFiniteDifferences) {
    Mat M(2, 2);
    M << 2.0, 0.3, 0.3, 1.0;
    const auto n = NormModel::perturbed_ellipse(M, 0.02, 4);
    auto s = annulus(n, 0.5, 2.0, 1.0, 0.0);
    const Vec x = at_radius(n, v2(0.4, -0.9), 1.1);
    const Vec g = annulus_gradient(s, x);
    const double h = 1e-6;
    for (int i = 0; i < 2; ++i) {
        Vec e = Vec::Zero(2);
        e(i) = h;
        EXPECT_NEAR((annulus_solution(s, x + e) - annulus_solution(s, x - e)) / (2 * h), g(i), 1e-7);
    }
}

TEST(Rates, Examples) {
    EXPECT_NEAR(phi_N(1e-4, 2), 100.0, 1e-10);
    EXPECT_NEAR(psi_N(1e-4, 2), 0.01, 1e-16);
    EXPECT_EQ(psi_N(0.3, 4), 1.0);
    EXPECT_NEAR(phi_N(std::exp(-10.0), 3), std::exp(10.0) / 10.0, 1e-9);
    EXPECT_THROW(phi_N(1.5, 3), DomainError);
    EXPECT_THROW(psi_N(0.0, 2), DomainError);
}

TEST(Rates, Monotone) {
    double prev_phi2 = 1e300, prev_phi3 = 1e300, prev_psi2 = 0, prev_psi3 = 0;
    for (int i = 1; i <= 200; ++i) {
        const double d = std::exp(-1.0) * i / 201.0;
        EXPECT_LT(phi_N(d, 2), prev_phi2);
        EXPECT_LT(phi_N(d, 3), prev_phi3);
        EXPECT_GT(psi_N(d, 2), prev_psi2);
        EXPECT_GT(psi_N(d, 3), prev_psi3);
        prev_phi2 = phi_N(d, 2);
        prev_phi3 = phi_N(d, 3);
        prev_psi2 = psi_N(d, 2);
        prev_psi3 = psi_N(d, 3);
    }
}

TEST(QuadratureConstant, KnownValues) {
    EXPECT_NEAR(quadrature_constant(2), kPi, 1e-10);
    EXPECT_NEAR(quadrature_constant(3), kPi, 1e-8);
    EXPECT_NEAR(quadrature_constant(4), 4.0 * kPi, 1e-5);
    EXPECT_NEAR(quadrature_constant(5), 2.0 * kPi * kPi / 2.0, 1e-4);
}

TEST(NeckIntegral, FlatGraphArctan) {
    auto cfg = make_wulff_config(NormModel::euclidean(2), 1.0, 1.0, 1e-4);
    const double c = 1.0, w = 0.25;
    const double closed = 2.0 / std::sqrt(c * 1e-4) * std::atan(w * std::sqrt(c / 1e-4));
    NeckIntegralOptions flat;
    flat.flat = true;
    EXPECT_NEAR(neck_integral(cfg, c, w, flat) / closed, 1.0, 1e-8);
    // with curvature the graph factor is 1 + O(x'^2)
    EXPECT_NEAR(neck_integral(cfg, c, w) / closed, 1.0, 1e-2);
}

TEST(NeckIntegral, HalvesUnderFourfoldDelta) {
    auto cfg = make_wulff_config(NormModel::euclidean(2), 1.0, 1.0, 1e-6);
    auto cfg4 = with_delta(cfg, 4e-6);
    EXPECT_NEAR(neck_integral(cfg4, 1.0, 0.2) / neck_integral(cfg, 1.0, 0.2), 0.5, 5e-3);
}

TEST(NeckIntegral, AsymptoteRatio) {
    Mat M(2, 2);
    M << 2.0, 0.3, 0.3, 1.0;
    for (const auto& n : {NormModel::euclidean(2), NormModel::ellipse(diag2(4, 1)), NormModel::ellipse(M)}) {
        for (double delta : {1e-4, 1e-5}) {
            auto cfg = make_wulff_config(n, 1.0, 1.5, delta);
            const double c = geometric_coefficient(cfg);
            const double ratio = neck_integral(cfg, c, 0.25) / neck_integral_asymptote(cfg, c);
            EXPECT_GT(ratio, 0.95);
            EXPECT_LT(ratio, 1.05);
        }
    }
}

TEST(NeckIntegral, ThreeDimensional) {
    auto cfg = make_wulff_config(NormModel::euclidean(3), 1.0, 1.0, 1e-6);
    NeckIntegralOptions flat;
    flat.flat = true;
    // flat: 2 pi / (2c) ln((delta + c w^2) / delta)
    const double c = 1.0, w = 0.2;
    EXPECT_NEAR(neck_integral(cfg, c, w, flat), kPi / c * std::log((1e-6 + c * w * w) / 1e-6), 1e-7);
    const double ratio = neck_integral(cfg, c, w) / neck_integral_asymptote(cfg, c);
    // the log-rate converges slowly: ratio = 1 + ln(c w^2) / |ln delta| + ...
    EXPECT_NEAR(ratio, 1.0 + std::log(c * w * w) / std::log(1.0 / 1e-6), 5e-3);
}

TEST(Barriers, Examples) {
    auto cfg = make_wulff_config(NormModel::euclidean(2), 1.0, 1.0, 1e-3);
    EXPECT_DOUBLE_EQ(barrier_upper(cfg, cfg.P0, 0.25, 0.3, 0.3, 0.5), 0.5);
    EXPECT_DOUBLE_EQ(barrier_lower(cfg, cfg.P0, 0.25, 0.3, 0.3, 0.5), -0.5);
    EXPECT_NEAR(barrier_upper(cfg, cfg.P0, 0.25, 1.0, 0.0), -1.0 / 1e-3, 1e-9);
    EXPECT_NEAR(barrier_lower(cfg, cfg.P0, 0.25, 1.0, 0.0), -1.0 / 1e-3, 1e-9);
    Vec q(1);
    q << 0.03;
    const Vec P = lower_cap_point(cfg, q);
    EXPECT_LT(barrier_lower(cfg, P, 0.25, 1.0, 0.0), barrier_upper(cfg, P, 0.25, 1.0, 0.0));
}

TEST(Prediction, Examples) {
    auto cfg = make_wulff_config(NormModel::euclidean(2), 1.0, 1.0, 1e-3);
    auto p = make_prediction(cfg, 2.0, 0.25);
    EXPECT_NEAR(p.geometric_factor, 1.0, 1e-15);
    EXPECT_NEAR(p.detQ, 1.0, 1e-14);
    auto cfg2 = make_wulff_config(NormModel::euclidean(2), 1.0, 2.0, 1e-3);
    EXPECT_NEAR(make_prediction(cfg2, 2.0, 0.25).geometric_factor, std::sqrt(0.75), 1e-15);

    // zero flux collapses the band; doubling R0 doubles it; N = 2 band scales as sqrt(delta)
    auto z = deltaU_band(make_prediction(cfg, 0.0, 0.25), 1e-3);
    EXPECT_EQ(z.lower, 0.0);
    EXPECT_EQ(z.upper, 0.0);
    auto b1 = deltaU_band(p, 1e-3);
    auto b2 = deltaU_band(make_prediction(cfg, 4.0, 0.25), 1e-3);
    EXPECT_NEAR(b2.upper / b1.upper, 2.0, 1e-14);
    EXPECT_NEAR(deltaU_band(p, 4e-3).upper / b1.upper, 2.0, 1e-14);
    EXPECT_LT(b1.lower, b1.upper);

    // Ellipse diag(4,1) has Q = 1/4 and unit axis slope
    auto ce = make_wulff_config(NormModel::ellipse(diag2(4, 1)), 1.0, 1.0, 1e-3);
    EXPECT_NEAR(ce.Q(0, 0), 0.25, 1e-14);
    EXPECT_NEAR(ce.axis_slope, 1.0, 1e-14);
    EXPECT_NEAR(make_prediction(ce, 2.0, 0.25).prefactor / p.prefactor, 0.5, 1e-12);
}

TEST(Prediction, MatchesNeckIntegral) {
    // dU = |R0| / (H(nu) I_hat) at leading order
    Mat M(2, 2);
    M << 2.0, 0.3, 0.3, 1.0;
    auto cfg = make_wulff_config(NormModel::ellipse(M), 1.0, 1.5, 1e-8);
    auto p = make_prediction(cfg, 1.0, 0.25);
    const Vec g = eval_dual_jet(cfg.norm, cfg.P0 - cfg.shape1.center).gradient;
    const double H_nu = cfg.norm.value(g / g.norm());
    const double dU = 1.0 / (H_nu * neck_integral_asymptote(cfg, geometric_coefficient(cfg)));
    EXPECT_NEAR(dU / (p.prefactor * p.psi(1e-8)), 1.0, 1e-10);
}

TEST(Cutoff, ProfileAndBounds) {
    const Mat Q = diag2(1.0, 1.0).topLeftCorner(1, 1) * 0.25;
    const double w = 0.2;
    auto spec = make_cutoff(Q, w, 20000);
    // rho = |Q^{1/2} x'| = x' / 2
    EXPECT_EQ(cutoff_f(v2(2 * w / 4, 0.3), spec).value, 0.0);
    EXPECT_EQ(cutoff_f(v2(2 * 2 * w, 0.3), spec).value, 1.0);
    EXPECT_EQ(cutoff_f(v2(2 * w, 0.0), spec).value, 1.0);
    EXPECT_EQ(cutoff_f(v2(2 * w / 2, 0.0), spec).value, 0.0);
    // max |f''| of the smoothstep in rho is 60 * 0.0962250 * (2/w)^2, scaled by Q = 1/4
    EXPECT_NEAR(spec.hessian_constant, 1.01 * 23.094 * 0.25, 0.02);
    EXPECT_GT(spec.gradient_constant, 0.0);
    // scale invariance: the constants do not depend on w
    auto spec2 = make_cutoff(Q, w / 10, 20000);
    EXPECT_NEAR(spec2.hessian_constant / spec.hessian_constant, 1.0, 1e-2);
    EXPECT_NEAR(spec2.gradient_constant / spec.gradient_constant, 1.0, 1e-2);
}

TEST(Cutoff, DerivativesMatchFiniteDifferences) {
    Mat Q(2, 2);
    Q << 1.0, 0.2, 0.2, 0.5;
    auto spec = make_cutoff(Q, 0.3, 1000);
    Vec x(3);
    x << 0.15, 0.2, -0.1;
    auto v = cutoff_f(x, spec);
    ASSERT_GT(v.value, 0.0);
    ASSERT_LT(v.value, 1.0);
    const double h = 1e-6;
    for (int i = 0; i < 3; ++i) {
        Vec e = Vec::Zero(3);
        e(i) = h;
        EXPECT_NEAR((cutoff_f(x + e, spec).value - cutoff_f(x - e, spec).value) / (2 * h), v.gradient(i), 1e-6);
        const Vec gfd = (cutoff_f(x + e, spec).gradient - cutoff_f(x - e, spec).gradient) / (2 * h);
        EXPECT_LT((gfd - v.hessian.col(i)).norm(), 1e-4);
    }
}

TEST(PFunction, Reductions) {
    auto a = p_function(0.0, 3.0, 2.0, 1.5, 1.0);
    EXPECT_DOUBLE_EQ(a.value, 1.5 * 4.0);
    EXPECT_FALSE(a.below_lambda0);
    EXPECT_DOUBLE_EQ(p_function(1.0, 3.0, 2.0, 0.0, 0.0).value, 9.0);
    EXPECT_TRUE(p_function(1.0, 3.0, 2.0, 0.5, 1.0).below_lambda0);
    EXPECT_DOUBLE_EQ(lambda0(0.5, 2.0), 8.0);
}
