#include "fgap/analytic.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/trapezoidal.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

namespace fgap {

namespace {

constexpr double kPi = std::numbers::pi;

using GK = boost::math::quadrature::gauss_kronrod<double, 31>;

double annulus_radius_checked(const AnnulusSpec& spec, const Vec& x) {
    if (!(spec.r > 0.0 && spec.r < spec.R)) throw DomainError("annulus: need 0 < r < R");
    const double rho = eval_dual(spec.norm, x - spec.center);
    const double slack = 1e-12 * spec.R;
    if (rho < spec.r - slack || rho > spec.R + slack) {
        throw DomainError("annulus: point outside the closed annulus (H0 = " + std::to_string(rho) + ")");
    }
    return std::clamp(rho, spec.r, spec.R);
}

// d v / d rho of the radial profile
double annulus_slope(const AnnulusSpec& spec, double rho) {
    const int N = spec.norm.dim();
    const double d = spec.C_r - spec.C_R;
    if (N == 2) return d / (rho * std::log(spec.r / spec.R));
    const double p = 2.0 - N;
    return d * p * std::pow(rho, p - 1.0) / (std::pow(spec.r, p) - std::pow(spec.R, p));
}

double sphere_area(int dim) {
    // |S^{dim}|
    const double k = 0.5 * (dim + 1);
    return 2.0 * std::pow(kPi, k) / boost::math::tgamma(k);
}

// int_0^X rho^{m} / (1 + rho^2) d rho, split at 1 with rho = e^s above.
double radial_integral(int m, double X) {
    auto lo = [m](double r) { return std::pow(r, m) / (1.0 + r * r); };
    auto hi = [m](double s) {
        const double e = std::exp(s);
        return std::pow(e, m + 1) / (1.0 + e * e);
    };
    const double a = GK::integrate(lo, 0.0, std::min(1.0, X), 15, 1e-14);
    if (X <= 1.0) return a;
    return a + GK::integrate(hi, 0.0, std::log(X), 15, 1e-14);
}

double area_factor_at(const WulffConfig& cfg, const Vec& X) {
    const Vec g = eval_dual_jet(cfg.norm, X - cfg.shape1.center).gradient;
    return g.norm() / std::abs(g(cfg.dim - 1));
}

Mat sym_sqrt_inv(const Mat& Q) {
    Eigen::SelfAdjointEigenSolver<Mat> es(Q);
    return es.eigenvectors() * es.eigenvalues().cwiseInverse().cwiseSqrt().asDiagonal() * es.eigenvectors().transpose();
}

double smoothstep(double u) { return u * u * u * (10.0 + u * (-15.0 + 6.0 * u)); }
double smoothstep_d1(double u) { return 30.0 * u * u * (1.0 - u) * (1.0 - u); }
double smoothstep_d2(double u) { return 60.0 * u * (1.0 - u) * (1.0 - 2.0 * u); }

} // namespace

double annulus_solution(const AnnulusSpec& spec, const Vec& x) {
    const double rho = annulus_radius_checked(spec, x);
    const int N = spec.norm.dim();
    const double d = spec.C_r - spec.C_R;
    if (N == 2) return d * std::log(rho / spec.R) / std::log(spec.r / spec.R) + spec.C_R;
    const double p = 2.0 - N;
    return d * (std::pow(rho, p) - std::pow(spec.R, p)) / (std::pow(spec.r, p) - std::pow(spec.R, p)) + spec.C_R;
}

Vec annulus_gradient(const AnnulusSpec& spec, const Vec& x) {
    const double rho = annulus_radius_checked(spec, x);
    return annulus_slope(spec, rho) * eval_dual_jet(spec.norm, x - spec.center).gradient;
}

Bounds annulus_gradient_bounds(const AnnulusSpec& spec) {
    if (!(spec.r > 0.0 && spec.r < spec.R)) throw DomainError("annulus: need 0 < r < R");
    const int N = spec.norm.dim();
    const double d = std::abs(spec.C_r - spec.C_R);
    if (N == 2) {
        const double l = std::log(spec.R / spec.r);
        return {d / (spec.R * l), d / (spec.r * l)};
    }
    // |v'| is attained at rho = R (lower) and rho = r (upper)
    const double q = std::pow(spec.r / spec.R, N - 2.0);
    return {(N - 2) * d * q / ((1.0 - q) * spec.R), (N - 2) * d / ((1.0 - q) * spec.r)};
}

double annulus_midvalue_radius(int dim, double r, double R) {
    if (dim == 2) return std::sqrt(r * R);
    if (dim == 3) return 2.0 * r * R / (r + R);
    const double p = 2.0 - dim;
    return std::pow(0.5 * (std::pow(r, p) + std::pow(R, p)), 1.0 / p);
}

double phi_N(double delta, int N) {
    if (!(delta > 0.0)) throw DomainError("phi_N: delta must be positive");
    if (N < 2) throw DomainError("phi_N: N must be >= 2");
    if (N == 2) return 1.0 / std::sqrt(delta);
    if (N == 3) {
        if (delta >= 1.0) throw DomainError("phi_N: N = 3 needs delta < 1");
        return 1.0 / (delta * std::abs(std::log(delta)));
    }
    return 1.0 / delta;
}

double psi_N(double delta, int N) {
    if (!(delta > 0.0)) throw DomainError("psi_N: delta must be positive");
    if (N < 2) throw DomainError("psi_N: N must be >= 2");
    if (N == 2) return std::sqrt(delta);
    if (N == 3) {
        if (delta >= 1.0) throw DomainError("psi_N: N = 3 needs delta < 1");
        return 1.0 / std::log(1.0 / delta);
    }
    return 1.0;
}

double quadrature_constant(int N) {
    if (N < 2) throw DomainError("quadrature_constant: N must be >= 2");
    if (N == 2) {
        auto f = [](double z) { return 1.0 / (1.0 + z * z); };
        return GK::integrate(f, -std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity(), 15,
                             1e-14);
    }
    // I_delta = |S^{N-2}| int_0^{delta^{-1/2}} rho^{N-2} / (1 + rho^2); the limit of
    // I / psi is taken as a difference quotient so that the additive constant drops out.
    const double area = sphere_area(N - 2);
    auto I = [&](double delta) { return area * radial_integral(N - 2, 1.0 / std::sqrt(delta)); };
    auto psi = [N](double delta) {
        return N == 3 ? -std::log(delta) : std::pow(delta, -0.5 * (N - 3));
    };
    const double d1 = 1e-10, d2 = 1e-12;
    return (I(d2) - I(d1)) / (psi(d2) - psi(d1));
}

double geometric_coefficient(const WulffConfig& cfg) { return (cfg.R1 + cfg.R2) / (2.0 * cfg.R1 * cfg.R2); }

double graph_area_factor(const WulffConfig& cfg) { return area_factor_at(cfg, cfg.P0); }

double neck_integral(const WulffConfig& cfg, double c, double w, const NeckIntegralOptions& opts) {
    const int N = cfg.dim;
    const double delta = cfg.delta;
    if (!(delta > 0.0)) throw DomainError("neck_integral: delta must be positive");
    if (!(c > 0.0) || !(w > 0.0)) throw DomainError("neck_integral: c and w must be positive");
    auto G = [&](const Vec& xp) { return opts.flat ? 1.0 : area_factor_at(cfg, lower_cap_point(cfg, xp)); };
    const double tol = opts.rel_tol;
    if (N == 2) {
        const double q = cfg.Q(0, 0);
        const double scale = std::sqrt(delta / (c * q));
        const double theta_max = std::atan(w * std::sqrt(c / delta));
        auto f = [&](double th) {
            Vec xp(1);
            xp << scale * std::tan(th);
            return G(xp);
        };
        return GK::integrate(f, -theta_max, theta_max, 20, tol) / std::sqrt(c * q * delta);
    }
    if (N == 3) {
        // y = Q^{1/2} x' in polar form, s = ln(delta + c rho^2)
        const Mat Qmh = sym_sqrt_inv(cfg.Q);
        const double detQ = cfg.Q.determinant();
        auto ring = [&](double s) {
            const double rho = std::sqrt(std::max(0.0, (std::exp(s) - delta) / c));
            auto g = [&](double a) {
                Vec y(2);
                y << rho * std::cos(a), rho * std::sin(a);
                return G(Qmh * y);
            };
            if (opts.flat) return 2.0 * kPi;
            return boost::math::quadrature::trapezoidal(g, 0.0, 2.0 * kPi, 1e-11);
        };
        const double s0 = std::log(delta), s1 = std::log(delta + c * w * w);
        return GK::integrate(ring, s0, s1, 15, tol) / (2.0 * c * std::sqrt(detQ));
    }
    throw DomainError("neck_integral: only N = 2 and N = 3 are supported");
}

double neck_integral_asymptote(const WulffConfig& cfg, double c) {
    const int N = cfg.dim;
    const double detQ = cfg.Q.determinant();
    return graph_area_factor(cfg) * std::pow(c, -0.5 * (N - 1)) / std::sqrt(detQ) * quadrature_constant(N) /
           psi_N(cfg.delta, N);
}

namespace {

double barrier_core(const WulffConfig& cfg, const Vec& P, double factor, double U1, double U2) {
    const Vec xp = perp(P);
    const Vec g = eval_dual_jet(cfg.norm, P - cfg.shape1.center).gradient;
    const double H_nu = cfg.norm.value(g / g.norm());
    return -H_nu * (U1 - U2) / (cfg.delta + factor * geometric_coefficient(cfg) * xp.dot(cfg.Q * xp));
}

} // namespace

double barrier_upper(const WulffConfig& cfg, const Vec& P, double tau, double U1, double U2, double C) {
    return barrier_core(cfg, P, 1.0 + tau, U1, U2) + C;
}

double barrier_lower(const WulffConfig& cfg, const Vec& P, double tau, double U1, double U2, double C) {
    return barrier_core(cfg, P, 1.0 - tau, U1, U2) - C;
}

BlowupPrediction make_prediction(const WulffConfig& cfg, double R0, double tau) {
    if (!(tau > 0.0 && tau <= 0.5)) throw ConfigError("tau must lie in (0, 1/2]");
    BlowupPrediction p;
    p.N = cfg.dim;
    p.detQ = cfg.Q.determinant();
    p.geometric_factor = std::pow(geometric_coefficient(cfg), 0.5 * (p.N - 1));
    p.axis_slope = cfg.axis_slope;
    p.R0 = R0;
    p.tau = tau;
    p.C_N = quadrature_constant(p.N);
    p.prefactor = p.geometric_factor * std::sqrt(p.detQ) * std::abs(R0) * p.axis_slope / p.C_N;
    return p;
}

Bounds deltaU_band(const BlowupPrediction& pred, double delta) {
    const double centre = pred.prefactor * pred.psi(delta);
    return {(1.0 - pred.tau) * centre, (1.0 + pred.tau) * centre};
}

Bounds gradient_band(const BlowupPrediction& pred, double delta) {
    const double centre = pred.prefactor * pred.phi(delta);
    return {(1.0 - pred.tau) * centre, (1.0 + pred.tau) * centre};
}

CutoffValue cutoff_f(const Vec& x, const CutoffSpec& spec) {
    const int n = static_cast<int>(x.size());
    CutoffValue out;
    out.gradient = Vec::Zero(n);
    out.hessian = Mat::Zero(n, n);
    const Vec xp = x.head(n - 1);
    const Vec Qx = spec.Q * xp;
    const double rho = std::sqrt(std::max(0.0, xp.dot(Qx)));
    const double half = 0.5 * spec.w;
    if (rho <= half) return out;
    if (rho >= spec.w) {
        out.value = 1.0;
        return out;
    }
    const double u = (rho - half) / half;
    out.value = smoothstep(u);
    const double d1 = smoothstep_d1(u) / half;
    const double d2 = smoothstep_d2(u) / (half * half);
    const Vec grad_rho = Qx / rho;
    out.gradient.head(n - 1) = d1 * grad_rho;
    out.hessian.topLeftCorner(n - 1, n - 1) =
        d2 * grad_rho * grad_rho.transpose() + d1 * (spec.Q - grad_rho * grad_rho.transpose()) / rho;
    return out;
}

CutoffSpec make_cutoff(const Mat& Q, double w, int samples) {
    if (!(w > 0.0)) throw PreconditionError("cutoff width must be positive");
    const int m = static_cast<int>(Q.rows());
    CutoffSpec spec;
    spec.w = w;
    spec.Q = Q;
    const Mat Qmh = sym_sqrt_inv(Q);
    std::mt19937_64 rng(2024);
    std::normal_distribution<double> gauss;
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    auto sample = [&](double rho_lo, double rho_hi) {
        Vec d(m);
        for (int i = 0; i < m; ++i) d(i) = gauss(rng);
        d.normalize();
        Vec x = Vec::Zero(m + 1);
        x.head(m) = Qmh * (d * (rho_lo + (rho_hi - rho_lo) * unif(rng)));
        x(m) = gauss(rng) * w;
        return x;
    };
    auto measure = [&](const Vec& x, double& cg, double& ch) {
        const CutoffValue v = cutoff_f(x, spec);
        if (v.value > 0.0) cg = std::max(cg, v.gradient.squaredNorm() * w * w / v.value);
        Eigen::SelfAdjointEigenSolver<Mat> es(v.hessian, Eigen::EigenvaluesOnly);
        ch = std::max(ch, es.eigenvalues().cwiseAbs().maxCoeff() * w * w);
    };
    double cg = 0.0, ch = 0.0;
    for (int i = 0; i < samples; ++i) measure(sample(0.5 * w, w), cg, ch);
    spec.gradient_constant = 1.01 * cg;
    spec.hessian_constant = 1.01 * ch;
    double vg = 0.0, vh = 0.0;
    for (int i = 0; i < samples; ++i) measure(sample(0.0, 1.5 * w), vg, vh);
    if (vg > spec.gradient_constant || vh > spec.hessian_constant) {
        throw PreconditionError("cutoff bounds violated on verification samples");
    }
    return spec;
}

double lambda0(double w, double kappa) { return kappa / (w * w); }

PValue p_function(double f, double grad_H, double u, double lambda, double lambda_0) {
    return {f * grad_H * grad_H + lambda * u * u, lambda < lambda_0};
}

} // namespace fgap
