#include "fgap/norms.hpp"

#include <boost/math/tools/minima.hpp>

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdio>
#include <limits>
#include <numbers>
#include <random>

namespace fgap {

namespace {

constexpr double kPi = std::numbers::pi;

void require_spd(const Mat& M, const char* who) {
    if (M.rows() != M.cols() || M.rows() < 2) {
        throw ConfigError(std::string(who) + ": matrix must be square with dimension >= 2");
    }
    if (!M.isApprox(M.transpose(), 1e-12)) {
        throw ConfigError(std::string(who) + ": matrix must be symmetric");
    }
    Eigen::SelfAdjointEigenSolver<Mat> es(M);
    if (es.eigenvalues()(0) <= 0.0) {
        throw ConfigError(std::string(who) + ": matrix must be positive definite");
    }
}

// cos(k theta), sin(k theta) of the angle of (x, y), computed from (x + iy)^k so
// that the pair is bitwise invariant under (x, y) -> (-x, -y) for even k.
std::pair<double, double> angular_harmonic(double x, double y, int k) {
    const std::complex<double> z(x, y);
    const std::complex<double> w = z * z;
    std::complex<double> p(1.0, 0.0);
    for (int i = 0; i < k / 2; ++i) p *= w;
    const double r2 = x * x + y * y;
    const double rk = std::pow(r2, 0.5 * k);
    return {p.real() / rk, p.imag() / rk};
}

// Jet of sqrt(eta^T M eta) (1 + beta cos(k theta)) in the base frame.
NormJet perturbed_base_jet(const Mat& M, double beta, int k, const Vec& eta) {
    const double s = std::sqrt(eta.dot(M * eta));
    const Vec ds = M * eta / s;
    const Mat d2s = (M - ds * ds.transpose()) / s;

    const double r2 = eta.squaredNorm();
    Vec t(2);
    t << -eta(1) / r2, eta(0) / r2;
    Mat dt(2, 2);
    dt(0, 0) = 2.0 * eta(0) * eta(1) / (r2 * r2);
    dt(1, 1) = -dt(0, 0);
    dt(0, 1) = (eta(1) * eta(1) - eta(0) * eta(0)) / (r2 * r2);
    dt(1, 0) = dt(0, 1);

    const auto [c, sn] = angular_harmonic(eta(0), eta(1), k);
    const double g = 1.0 + beta * c;
    const double g1 = -beta * k * sn;
    const double g2 = -beta * k * k * c;
    const Vec dg = g1 * t;
    const Mat d2g = g2 * t * t.transpose() + g1 * dt;

    NormJet jet;
    jet.value = s * g;
    jet.gradient = g * ds + s * dg;
    jet.hessian = g * d2s + ds * dg.transpose() + dg * ds.transpose() + s * d2g;
    return jet;
}

double perturbed_base_value(const Mat& M, double beta, int k, const Vec& eta) {
    const double s = std::sqrt(eta.dot(M * eta));
    if (s == 0.0) return 0.0;
    const auto [c, sn] = angular_harmonic(eta(0), eta(1), k);
    (void)sn;
    return s * (1.0 + beta * c);
}

Mat tangent_basis(const Vec& v) {
    const int n = static_cast<int>(v.size());
    // Householder reflection taking e_0 to v/|v|; its remaining columns span v^perp.
    Vec u = v.normalized();
    Vec e = Vec::Zero(n);
    e(0) = 1.0;
    Vec w = u - e;
    Mat P = Mat::Identity(n, n);
    if (w.norm() > 1e-14) {
        w.normalize();
        P -= 2.0 * w * w.transpose();
    }
    return P.rightCols(n - 1);
}

} // namespace

const char* to_string(NormFamily family) {
    switch (family) {
    case NormFamily::Euclidean: return "euclidean";
    case NormFamily::Ellipse: return "ellipse";
    case NormFamily::PerturbedEllipse: return "perturbed_ellipse";
    }
    return "unknown";
}

NormFamily norm_family_from_string(const std::string& name) {
    if (name == "euclidean") return NormFamily::Euclidean;
    if (name == "ellipse") return NormFamily::Ellipse;
    if (name == "perturbed_ellipse") return NormFamily::PerturbedEllipse;
    throw ConfigError("unknown norm family '" + name + "'");
}

NormModel NormModel::euclidean(int dim) {
    if (dim < 2) throw ConfigError("norm dimension must be >= 2");
    NormModel n;
    n.family_ = NormFamily::Euclidean;
    n.dim_ = dim;
    n.M_ = Mat::Identity(dim, dim);
    n.M_inv_ = n.M_;
    n.frame_ = Mat::Identity(dim, dim);
    n.energy_floor_ = 1.0;
    return n;
}

NormModel NormModel::ellipse(const Mat& M) {
    require_spd(M, "ellipse norm");
    NormModel n;
    n.family_ = NormFamily::Ellipse;
    n.dim_ = static_cast<int>(M.rows());
    n.M_ = 0.5 * (M + M.transpose());
    n.M_inv_ = n.M_.inverse();
    n.frame_ = Mat::Identity(n.dim_, n.dim_);
    n.compute_energy_floor();
    return n;
}

NormModel NormModel::perturbed_ellipse(const Mat& M, double beta, int k) {
    require_spd(M, "perturbed ellipse norm");
    if (M.rows() != 2) throw ConfigError("perturbed ellipse norm is 2-D only");
    if (k < 2 || k % 2 != 0) throw ConfigError("perturbed ellipse frequency k must be even and >= 2");
    if (!(std::abs(beta) < 1.0)) throw ConfigError("perturbed ellipse amplitude must satisfy |beta| < 1");
    NormModel n;
    n.family_ = NormFamily::PerturbedEllipse;
    n.dim_ = 2;
    n.M_ = 0.5 * (M + M.transpose());
    n.M_inv_ = n.M_.inverse();
    n.frame_ = Mat::Identity(2, 2);
    n.beta_ = beta;
    n.k_ = k;
    ellipticity_probe(n, 720); // throws when the norm is not uniformly elliptic
    n.compute_energy_floor();
    return n;
}

NormModel NormModel::rotated(const Mat& R) const {
    if (R.rows() != dim_ || R.cols() != dim_) throw ConfigError("rotation has wrong dimension");
    if (!(R.transpose() * R).isApprox(Mat::Identity(dim_, dim_), 1e-12)) {
        throw ConfigError("rotation must be orthogonal");
    }
    // H'(eta) = H(R^T eta).
    NormModel n = *this;
    if (is_quadratic()) {
        n.M_ = R * M_ * R.transpose();
        n.M_ = 0.5 * (n.M_ + n.M_.transpose());
        n.M_inv_ = n.M_.inverse();
        if (family_ == NormFamily::Euclidean) {
            n.M_ = Mat::Identity(dim_, dim_);
            n.M_inv_ = n.M_;
        }
    } else {
        n.frame_ = frame_ * R.transpose();
    }
    return n;
}

void NormModel::compute_energy_floor() {
    if (is_quadratic()) {
        Eigen::SelfAdjointEigenSolver<Mat> es(M_);
        energy_floor_ = es.eigenvalues()(0);
        return;
    }
    double lo = std::numeric_limits<double>::infinity();
    for (int i = 0; i < 720; ++i) {
        const double a = 2.0 * kPi * i / 720.0;
        Vec xi(2);
        xi << std::cos(a), std::sin(a);
        lo = std::min(lo, energy_hessian(*this, xi).mu_min);
    }
    energy_floor_ = lo;
}

double NormModel::value(const Vec& xi) const {
    switch (family_) {
    case NormFamily::Euclidean: return xi.norm();
    case NormFamily::Ellipse: return std::sqrt(std::max(0.0, xi.dot(M_ * xi)));
    case NormFamily::PerturbedEllipse: return perturbed_base_value(M_, beta_, k_, frame_ * xi);
    }
    return 0.0;
}

NormJet eval_jet(const NormModel& norm, const Vec& xi) {
    if (xi.size() != norm.dim_) throw PreconditionError("eval_jet: dimension mismatch");
    if (xi.squaredNorm() == 0.0) {
        throw DegeneratePointError("eval_jet: H is not differentiable at the origin");
    }
    NormJet jet;
    switch (norm.family_) {
    case NormFamily::Euclidean: {
        const double r = xi.norm();
        jet.value = r;
        jet.gradient = xi / r;
        jet.hessian = (Mat::Identity(norm.dim_, norm.dim_) - jet.gradient * jet.gradient.transpose()) / r;
        break;
    }
    case NormFamily::Ellipse: {
        const Vec Mxi = norm.M_ * xi;
        const double s = std::sqrt(xi.dot(Mxi));
        jet.value = s;
        jet.gradient = Mxi / s;
        jet.hessian = (norm.M_ - jet.gradient * jet.gradient.transpose()) / s;
        break;
    }
    case NormFamily::PerturbedEllipse: {
        const Mat& F = norm.frame_;
        NormJet b = perturbed_base_jet(norm.M_, norm.beta_, norm.k_, F * xi);
        jet.value = b.value;
        jet.gradient = F.transpose() * b.gradient;
        jet.hessian = F.transpose() * b.hessian * F;
        break;
    }
    }
    return jet;
}

double eval_dual(const NormModel& norm, const Vec& x) {
    if (x.size() != norm.dim_) throw PreconditionError("eval_dual: dimension mismatch");
    if (x.squaredNorm() == 0.0) return 0.0;
    switch (norm.family_) {
    case NormFamily::Euclidean: return x.norm();
    case NormFamily::Ellipse: return std::sqrt(x.dot(norm.M_inv_ * x));
    case NormFamily::PerturbedEllipse: break;
    }
    // sup over unit directions of x.u / H(u): eight equispaced seeds, each polished
    // by Brent's method inside its own sector.
    auto ratio = [&](double a) {
        Vec u(2);
        u << std::cos(a), std::sin(a);
        return x.dot(u) / norm.value(u);
    };
    constexpr int kSeeds = 8;
    constexpr double half = kPi / kSeeds;
    const int bits = std::numeric_limits<double>::digits / 2;
    double best = -std::numeric_limits<double>::infinity();
    for (int s = 0; s < kSeeds; ++s) {
        const double centre = 2.0 * kPi * s / kSeeds;
        auto [arg, val] = boost::math::tools::brent_find_minima(
            [&](double a) { return -ratio(a); }, centre - half, centre + half, bits);
        (void)arg;
        best = std::max(best, -val);
    }
    return best;
}

Vec dual_map(const NormModel& norm, const Vec& xi) {
    if (xi.squaredNorm() == 0.0) return Vec::Zero(xi.size());
    if (norm.is_quadratic()) return norm.matrix() * xi;
    const NormJet j = eval_jet(norm, xi);
    return j.value * j.gradient;
}

EnergyHessian energy_hessian(const NormModel& norm, const Vec& xi) {
    if (xi.squaredNorm() == 0.0) {
        throw DegeneratePointError("energy_hessian: A is undefined at the origin");
    }
    EnergyHessian eh;
    if (norm.is_quadratic()) {
        eh.A = norm.matrix();
    } else {
        const NormJet j = eval_jet(norm, xi);
        eh.A = j.gradient * j.gradient.transpose() + j.value * j.hessian;
        eh.A = 0.5 * (eh.A + eh.A.transpose());
    }
    Eigen::SelfAdjointEigenSolver<Mat> es(eh.A, Eigen::EigenvaluesOnly);
    eh.mu_min = es.eigenvalues()(0);
    eh.mu_max = es.eigenvalues()(eh.A.rows() - 1);
    return eh;
}

Vec inverse_dual_map(const NormModel& norm, const Vec& x) { return inverse_dual_map(norm, x, x); }

Vec inverse_dual_map(const NormModel& norm, const Vec& x, const Vec& seed) {
    const double scale = x.norm();
    if (scale == 0.0) throw DegeneratePointError("inverse_dual_map: x must be nonzero");
    if (norm.is_quadratic()) return norm.matrix().ldlt().solve(x);

    // Minimise f(xi) = H(xi)^2 / 2 - x.xi, whose gradient is dual_map(xi) - x and
    // whose Hessian is A(xi).
    auto objective = [&](const Vec& xi) {
        const double h = norm.value(xi);
        return 0.5 * h * h - x.dot(xi);
    };
    Vec xi = seed.squaredNorm() > 0.0 ? seed : x;
    double residual = std::numeric_limits<double>::infinity();
    constexpr int kMaxIter = 100;
    for (int it = 0; it < kMaxIter; ++it) {
        const Vec r = dual_map(norm, xi) - x;
        residual = r.norm();
        if (residual <= 1e-12 * scale) return xi;
        const Mat A = energy_hessian(norm, xi).A;
        const Vec step = -A.ldlt().solve(r);
        const double f0 = objective(xi);
        const double slope = r.dot(step);
        double t = 1.0;
        Vec trial = xi + step;
        auto accepted = [&](const Vec& y) {
            return objective(y) <= f0 + 1e-4 * t * slope || (dual_map(norm, y) - x).norm() < residual;
        };
        while (!accepted(trial) && t > 1e-10) {
            t *= 0.5;
            trial = xi + t * step;
        }
        xi = trial;
    }
    const Vec r = dual_map(norm, xi) - x;
    if (r.norm() <= 1e-11 * scale) return xi;
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.3e", r.norm());
    throw NumericError(std::string("inverse_dual_map: Newton did not converge, residual ") + buf);
}

EllipticityBounds ellipticity_probe(const NormModel& norm, int samples) {
    if (samples < 1) throw PreconditionError("ellipticity_probe: samples must be >= 1");
    const int n = norm.dim();
    EllipticityBounds b{std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
    std::mt19937_64 rng(0x5eed);
    std::normal_distribution<double> gauss;
    for (int i = 0; i < samples; ++i) {
        Vec v(n);
        if (n == 2) {
            const double a = 2.0 * kPi * (i + 0.5) / samples;
            v << std::cos(a), std::sin(a);
        } else {
            for (int d = 0; d < n; ++d) v(d) = gauss(rng);
            v.normalize();
        }
        // On the unit sphere the bound reads lambda_* |tau|^2 <= <Hess H(v) tau, tau> for tau
        // orthogonal to v, so the constants are the extreme tangent eigenvalues.
        const Mat B = tangent_basis(v);
        const Mat T = B.transpose() * eval_jet(norm, v).hessian * B;
        Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (T + T.transpose()), Eigen::EigenvaluesOnly);
        b.lambda_lower = std::min(b.lambda_lower, es.eigenvalues()(0));
        b.lambda_upper = std::max(b.lambda_upper, es.eigenvalues()(n - 2));
    }
    if (b.lambda_lower <= 0.0) {
        throw NonEllipticNormError("norm is not uniformly elliptic: sampled lambda_* = " +
                                   std::to_string(b.lambda_lower));
    }
    return b;
}

NormJet eval_dual_jet(const NormModel& norm, const Vec& x) {
    if (x.squaredNorm() == 0.0) {
        throw DegeneratePointError("eval_dual_jet: H0 is not differentiable at the origin");
    }
    NormJet jet;
    if (norm.is_quadratic()) {
        const Mat& Minv = norm.family() == NormFamily::Euclidean ? norm.matrix() : Mat(norm.matrix().inverse());
        const Vec Mx = Minv * x;
        const double s = std::sqrt(x.dot(Mx));
        jet.value = s;
        jet.gradient = Mx / s;
        jet.hessian = (Minv - jet.gradient * jet.gradient.transpose()) / s;
        return jet;
    }
    // xi = H0(x) grad H0(x); H(xi) = H0(x) and grad H0 = xi / H0.
    const Vec xi = inverse_dual_map(norm, x);
    const double value = norm.value(xi);
    jet.value = value;
    jet.gradient = xi / value;
    const Mat A = energy_hessian(norm, xi).A;
    const Mat hess_half_sq = A.inverse();
    jet.hessian = (hess_half_sq - jet.gradient * jet.gradient.transpose()) / value;
    jet.hessian = 0.5 * (jet.hessian + jet.hessian.transpose());
    return jet;
}

IdentityReport identity_suite(const NormModel& norm, int samples, unsigned seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g;
    std::uniform_real_distribution<double> logr(-3.0, 3.0);
    IdentityReport r;
    r.samples = samples;
    for (int s = 0; s < samples; ++s) {
        Vec xi(norm.dim());
        for (int i = 0; i < xi.size(); ++i) xi(i) = g(rng);
        if (xi.norm() == 0.0) continue;
        xi *= std::pow(10.0, logr(rng)) / xi.norm();
        const NormJet jet = eval_jet(norm, xi);
        const double H = jet.value;
        r.euler = std::max(r.euler, std::abs(jet.gradient.dot(xi) - H) / H);
        r.dual_of_gradient = std::max(r.dual_of_gradient, std::abs(eval_dual(norm, jet.gradient) - 1.0));
        const Vec x = dual_map(norm, xi);
        r.round_trip = std::max(r.round_trip, (inverse_dual_map(norm, x) - xi).norm() / xi.norm());
        const Mat A = energy_hessian(norm, xi).A;
        r.hessian_quadratic = std::max(r.hessian_quadratic, std::abs(xi.dot(A * xi) - H * H) / (H * H));
    }
    return r;
}

} // namespace fgap
