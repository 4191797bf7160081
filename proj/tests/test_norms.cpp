#include "fgap/norms.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

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

std::vector<NormModel> families() {
    Mat M(2, 2);
    M << 2.0, 0.3, 0.3, 1.0;
    Mat M3(3, 3);
    M3 << 2.0, 0.2, 0.0, 0.2, 1.5, 0.1, 0.0, 0.1, 1.0;
    return {NormModel::euclidean(2), NormModel::euclidean(3), NormModel::ellipse(M),
            NormModel::ellipse(M3), NormModel::perturbed_ellipse(M, 0.02, 4),
            NormModel::perturbed_ellipse(diag2(1, 4), 0.005, 6)};
}

Vec random_vec(std::mt19937_64& rng, int n) {
    std::normal_distribution<double> g;
    Vec v(n);
    for (int i = 0; i < n; ++i) v(i) = g(rng);
    return v;
}

} // namespace

TEST(EvalJet, EuclideanOracle) {
    auto j = eval_jet(NormModel::euclidean(2), v2(3, 4));
    EXPECT_DOUBLE_EQ(j.value, 5.0);
    EXPECT_NEAR(j.gradient(0), 0.6, 1e-15);
    EXPECT_NEAR(j.gradient(1), 0.8, 1e-15);
}

TEST(EvalJet, EllipseOracle) {
    auto j = eval_jet(NormModel::ellipse(diag2(1, 4)), v2(1, 0));
    EXPECT_DOUBLE_EQ(j.value, 1.0);
    EXPECT_NEAR(j.gradient(0), 1.0, 1e-15);
    EXPECT_NEAR(j.gradient(1), 0.0, 1e-15);
}

TEST(EvalJet, OriginIsDegenerate) {
    EXPECT_THROW(eval_jet(NormModel::euclidean(2), v2(0, 0)), DegeneratePointError);
    EXPECT_THROW(energy_hessian(NormModel::euclidean(2), v2(0, 0)), DegeneratePointError);
}

TEST(EvalJet, GradientZeroHomogeneous) {
    for (const auto& n : families()) {
        std::mt19937_64 rng(3);
        Vec xi = random_vec(rng, n.dim());
        auto a = eval_jet(n, xi);
        auto b = eval_jet(n, 2.0 * xi);
        auto c = eval_jet(n, -0.5 * xi);
        EXPECT_LT((a.gradient - b.gradient).norm(), 1e-13);
        EXPECT_LT((a.gradient + c.gradient).norm(), 1e-13);
        EXPECT_LT((a.hessian - 2.0 * b.hessian).norm(), 1e-12 * a.hessian.norm());
    }
}

TEST(EvalJet, FiniteDifferences) {
    const double h = 1e-5;
    for (const auto& n : families()) {
        std::mt19937_64 rng(11);
        for (int s = 0; s < 50; ++s) {
            Vec xi = random_vec(rng, n.dim()).normalized();
            auto j = eval_jet(n, xi);
            for (int i = 0; i < n.dim(); ++i) {
                Vec e = Vec::Zero(n.dim());
                e(i) = h;
                const double fd = (n.value(xi + e) - n.value(xi - e)) / (2 * h);
                EXPECT_NEAR(fd, j.gradient(i), 1e-6 * std::max(1.0, std::abs(j.gradient(i))));
                const Vec gfd = (eval_jet(n, xi + e).gradient - eval_jet(n, xi - e).gradient) / (2 * h);
                EXPECT_LT((gfd - j.hessian.col(i)).norm(), 1e-6 * std::max(1.0, j.hessian.norm()));
            }
        }
    }
}

TEST(EvalJet, EulerAndAnnihilation) {
    for (const auto& n : families()) {
        std::mt19937_64 rng(5);
        for (int s = 0; s < 200; ++s) {
            Vec xi = random_vec(rng, n.dim()) * std::exp(random_vec(rng, 1)(0));
            auto j = eval_jet(n, xi);
            EXPECT_LE(std::abs(j.gradient.dot(xi) - j.value), 1e-10 * j.value);
            EXPECT_LE((j.hessian * xi).norm(), 1e-10 * j.hessian.norm() * xi.norm());
        }
    }
}

TEST(EvalJet, CentralSymmetryExact) {
    for (const auto& n : families()) {
        std::mt19937_64 rng(8);
        for (int s = 0; s < 100; ++s) {
            Vec xi = random_vec(rng, n.dim());
            EXPECT_EQ(n.value(xi), n.value(-xi));
        }
    }
}

TEST(EvalDual, Oracles) {
    EXPECT_NEAR(eval_dual(NormModel::euclidean(2), v2(1, 1)), std::sqrt(2.0), 1e-15);
    EXPECT_NEAR(eval_dual(NormModel::ellipse(diag2(1, 4)), v2(0, 1)), 0.5, 1e-15);
    EXPECT_EQ(eval_dual(NormModel::euclidean(3), Vec::Zero(3)), 0.0);
}

TEST(EvalDual, DenseSupSampling) {
    // sup over 10^6 directions of x.xi/H(xi)
    for (const auto& n : families()) {
        if (n.dim() != 2) continue;
        const Vec x = v2(0.7, -1.3);
        double sup = 0.0;
        const int m = 1000000;
        for (int i = 0; i < m; ++i) {
            const double a = 2.0 * M_PI * i / m;
            Vec u = v2(std::cos(a), std::sin(a));
            sup = std::max(sup, x.dot(u) / n.value(u));
        }
        EXPECT_NEAR(eval_dual(n, x), sup, 1e-10);
    }
}

TEST(EvalDual, Homogeneous) {
    for (const auto& n : families()) {
        std::mt19937_64 rng(2);
        Vec x = random_vec(rng, n.dim());
        EXPECT_NEAR(eval_dual(n, 2.0 * x), 2.0 * eval_dual(n, x), 1e-12);
        EXPECT_NEAR(eval_dual(n, -x), eval_dual(n, x), 1e-12);
    }
}

TEST(DualMap, OraclesAndZero) {
    Vec d = dual_map(NormModel::euclidean(2), v2(0, 2));
    EXPECT_NEAR((d - v2(0, 2)).norm(), 0.0, 1e-15);
    Mat M(2, 2);
    M << 2.0, 0.3, 0.3, 1.0;
    Vec xi = v2(0.4, -1.1);
    EXPECT_LT((dual_map(NormModel::ellipse(M), xi) - M * xi).norm(), 1e-14);
    EXPECT_EQ(dual_map(NormModel::euclidean(2), v2(0, 0)).norm(), 0.0);
}

TEST(DualMap, RoundTripAndDualIdentities) {
    for (const auto& n : families()) {
        std::mt19937_64 rng(21);
        for (int s = 0; s < 100; ++s) {
            Vec xi = random_vec(rng, n.dim());
            const Vec x = dual_map(n, xi);
            EXPECT_LE((inverse_dual_map(n, x) - xi).norm(), 1e-8 * xi.norm());
            EXPECT_NEAR(eval_dual(n, eval_jet(n, xi).gradient), 1.0, 1e-8);
            const Vec y = random_vec(rng, n.dim());
            EXPECT_NEAR(n.value(eval_dual_jet(n, y).gradient), 1.0, 1e-8);
        }
    }
}

TEST(InverseDualMap, Oracles) {
    Mat M(2, 2);
    M << 2.0, 0.3, 0.3, 1.0;
    const Vec x = v2(1.0, 2.0);
    EXPECT_LT((inverse_dual_map(NormModel::ellipse(M), x) - M.inverse() * x).norm(), 1e-14);
    EXPECT_LT((inverse_dual_map(NormModel::euclidean(2), v2(1, 0)) - v2(1, 0)).norm(), 1e-15);
    EXPECT_THROW(inverse_dual_map(NormModel::euclidean(2), v2(0, 0)), DegeneratePointError);
}

TEST(DualJet, MatchesFiniteDifferences) {
    const double h = 1e-5;
    for (const auto& n : families()) {
        std::mt19937_64 rng(4);
        for (int s = 0; s < 10; ++s) {
            Vec x = random_vec(rng, n.dim()).normalized();
            auto j = eval_dual_jet(n, x);
            EXPECT_NEAR(j.value, eval_dual(n, x), 1e-12);
            for (int i = 0; i < n.dim(); ++i) {
                Vec e = Vec::Zero(n.dim());
                e(i) = h;
                EXPECT_NEAR((eval_dual(n, x + e) - eval_dual(n, x - e)) / (2 * h), j.gradient(i), 1e-6);
                const Vec gfd = (eval_dual_jet(n, x + e).gradient - eval_dual_jet(n, x - e).gradient) / (2 * h);
                EXPECT_LT((gfd - j.hessian.col(i)).norm(), 1e-6 * std::max(1.0, j.hessian.norm()));
            }
        }
    }
}

TEST(EnergyHessian, OraclesAndInvariants) {
    auto e = energy_hessian(NormModel::euclidean(3), Vec::Ones(3));
    EXPECT_LT((e.A - Mat::Identity(3, 3)).norm(), 1e-14);
    Mat M(2, 2);
    M << 2.0, 0.3, 0.3, 1.0;
    EXPECT_LT((energy_hessian(NormModel::ellipse(M), v2(1, 5)).A - M).norm(), 1e-14);
    for (const auto& n : families()) {
        std::mt19937_64 rng(9);
        for (int s = 0; s < 1000; ++s) {
            Vec xi = random_vec(rng, n.dim());
            auto a = energy_hessian(n, xi);
            const double h = n.value(xi);
            EXPECT_LE(std::abs(xi.dot(a.A * xi) - h * h), 1e-10 * h * h);
            EXPECT_GT(a.mu_min, 0.0);
            EXPECT_LT((energy_hessian(n, -3.0 * xi).A - a.A).norm(), 1e-12 * a.A.norm());
        }
    }
}

TEST(Ellipticity, Oracles) {
    auto e = ellipticity_probe(NormModel::euclidean(2), 64);
    EXPECT_NEAR(e.lambda_lower, 1.0, 1e-14);
    EXPECT_NEAR(e.lambda_upper, 1.0, 1e-14);
    auto el = ellipticity_probe(NormModel::ellipse(diag2(1, 4)), 720);
    EXPECT_GT(el.lambda_lower, 0.0);
    EXPECT_LT(el.lambda_lower, el.lambda_upper);
    // Hessian of sqrt(xi^T M xi) restricted to v^perp: det(M) / H(v)^3 at unit v.
    double lo = 1e300, hi = 0;
    for (int i = 0; i < 720; ++i) {
        const double a = 2 * M_PI * (i + 0.5) / 720;
        const double h = std::sqrt(std::pow(std::cos(a), 2) + 4 * std::pow(std::sin(a), 2));
        lo = std::min(lo, 4.0 / (h * h * h));
        hi = std::max(hi, 4.0 / (h * h * h));
    }
    EXPECT_NEAR(el.lambda_lower, lo, 1e-12);
    EXPECT_NEAR(el.lambda_upper, hi, 1e-12);
    auto pe = ellipticity_probe(NormModel::perturbed_ellipse(diag2(1, 4), 0.0, 4), 720);
    EXPECT_NEAR(pe.lambda_lower, el.lambda_lower, 1e-12);
    EXPECT_NEAR(pe.lambda_upper, el.lambda_upper, 1e-12);
}

TEST(Ellipticity, RejectsLargePerturbation) {
    EXPECT_THROW(NormModel::perturbed_ellipse(Mat::Identity(2, 2), 0.5, 8), NonEllipticNormError);
    EXPECT_THROW(NormModel::perturbed_ellipse(Mat::Identity(2, 2), 0.01, 3), ConfigError);
    EXPECT_THROW(NormModel::perturbed_ellipse(Mat::Identity(3, 3), 0.01, 4), ConfigError);
    EXPECT_THROW(NormModel::ellipse(diag2(1, -1)), ConfigError);
}

TEST(Rotation, ValuesTransformConsistently) {
    Mat M(2, 2);
    M << 2.0, 0.3, 0.3, 1.0;
    const double a = 0.7;
    Mat R(2, 2);
    R << std::cos(a), -std::sin(a), std::sin(a), std::cos(a);
    for (const auto& n : {NormModel::ellipse(M), NormModel::perturbed_ellipse(M, 0.02, 4)}) {
        auto r = n.rotated(R);
        std::mt19937_64 rng(1);
        for (int s = 0; s < 20; ++s) {
            Vec xi = random_vec(rng, 2);
            EXPECT_NEAR(r.value(R * xi), n.value(xi), 1e-13);
            EXPECT_NEAR(eval_dual(r, R * xi), eval_dual(n, xi), 1e-11);
        }
    }
}
