#include "fgap/geometry.hpp"

#include <boost/math/tools/minima.hpp>
#include <boost/math/tools/roots.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

namespace fgap {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr int kBrentBits = std::numeric_limits<double>::digits / 2;

Vec unit_axis(int dim) {
    Vec e = Vec::Zero(dim);
    e(dim - 1) = 1.0;
    return e;
}

// Proper rotation taking the unit vector d to e_N.
Mat rotation_to_axis(const Vec& d) {
    const int n = static_cast<int>(d.size());
    const Vec e = unit_axis(n);
    Mat R = Mat::Identity(n, n);
    Vec w = d - e;
    if (w.norm() > 1e-15) {
        w.normalize();
        R -= 2.0 * w * w.transpose();
        // a reflection; flip a transverse row to make it a rotation
        R.row(0) *= -1.0;
    }
    return R;
}

Vec tangent_chart(const Vec& u0, const Mat& B, const Vec& s) { return (u0 + B * s).normalized(); }

Mat tangent_basis(const Vec& u) {
    const int n = static_cast<int>(u.size());
    Eigen::HouseholderQR<Mat> qr(u);
    Mat Qm = qr.householderQ() * Mat::Identity(n, n);
    return Qm.rightCols(n - 1);
}

// Minimum of H0(x - y) over x on the boundary of `shape`.
double boundary_distance(const WulffShape& shape, const NormModel& norm, const Vec& y) {
    const int n = norm.dim();
    auto f_dir = [&](const Vec& u) { return eval_dual(norm, boundary_point(shape, norm, u) - y); };
    double best = std::numeric_limits<double>::infinity();
    constexpr int kStarts = 16;
    if (n == 2) {
        const double half = kPi / kStarts;
        for (int s = 0; s < kStarts; ++s) {
            const double c = 2.0 * kPi * s / kStarts;
            auto f = [&](double a) {
                Vec u(2);
                u << std::cos(a), std::sin(a);
                return f_dir(u);
            };
            auto r = boost::math::tools::brent_find_minima(f, c - half, c + half, kBrentBits);
            best = std::min(best, r.second);
        }
        return best;
    }
    // Chart Newton from 16 starts about the direction of y.
    Vec toward = y - shape.center;
    if (toward.norm() < 1e-14) toward = unit_axis(n);
    toward.normalize();
    std::mt19937_64 rng(17);
    std::normal_distribution<double> gauss;
    for (int s = 0; s < kStarts; ++s) {
        Vec u0 = toward;
        if (s > 0) {
            Vec g(n);
            for (int i = 0; i < n; ++i) g(i) = gauss(rng);
            u0 = (toward + 0.5 * g).normalized();
        }
        const Mat B = tangent_basis(u0);
        Vec p = Vec::Zero(n - 1);
        auto f = [&](const Vec& q) { return f_dir(tangent_chart(u0, B, q)); };
        double fp = f(p);
        for (int it = 0; it < 60; ++it) {
            const double hg = 1e-6, hh = 1e-4;
            Vec g(n - 1);
            Mat Hm(n - 1, n - 1);
            for (int i = 0; i < n - 1; ++i) {
                Vec ei = Vec::Zero(n - 1);
                ei(i) = 1.0;
                g(i) = (f(p + hg * ei) - f(p - hg * ei)) / (2 * hg);
                for (int j = 0; j <= i; ++j) {
                    Vec ej = Vec::Zero(n - 1);
                    ej(j) = 1.0;
                    Hm(i, j) = (f(p + hh * ei + hh * ej) - f(p + hh * ei - hh * ej) - f(p - hh * ei + hh * ej) +
                                f(p - hh * ei - hh * ej)) /
                               (4 * hh * hh);
                    Hm(j, i) = Hm(i, j);
                }
            }
            Eigen::SelfAdjointEigenSolver<Mat> es(Hm);
            Vec step;
            if (es.eigenvalues()(0) > 1e-12) {
                step = -Hm.ldlt().solve(g);
            } else {
                step = -g;
            }
            double t = 1.0;
            double ft = f(p + step);
            while (ft > fp && t > 1e-12) {
                t *= 0.5;
                ft = f(p + t * step);
            }
            if (ft > fp) break;
            p += t * step;
            const double drop = fp - ft;
            fp = ft;
            if ((t * step).norm() < 1e-12 || drop <= 1e-16 * std::abs(fp)) break;
        }
        best = std::min(best, fp);
    }
    return best;
}

void require_on_boundary(const WulffShape& shape, const NormModel& norm, const Vec& x, double tol) {
    const double h = eval_dual(norm, x - shape.center);
    if (std::abs(h - shape.radius) > tol * shape.radius) {
        throw PreconditionError("point is not on the Wulff boundary: H0(x - c) = " + std::to_string(h) +
                                ", radius " + std::to_string(shape.radius));
    }
}

void fill_axis_data(WulffConfig& cfg) {
    const int n = cfg.dim;
    const Vec e = unit_axis(n);
    const double he = eval_dual(cfg.norm, e);
    cfg.shape1.center = (cfg.R1 + 0.5 * cfg.delta) / he * e;
    cfg.shape1.radius = cfg.R1;
    cfg.shape2.center = -(cfg.R2 + 0.5 * cfg.delta) / he * e;
    cfg.shape2.radius = cfg.R2;
    cfg.P0 = cfg.shape1.center - cfg.R1 / he * e;
    const AxisCurvature ac = matrix_Q(cfg.norm);
    cfg.P_hat = ac.P_hat;
    cfg.Q = ac.Q;
    cfg.axis_slope = std::abs(eval_dual_jet(cfg.norm, cfg.P0 - cfg.shape1.center).gradient(n - 1));
    if (cfg.outer_radius <= 0.0) cfg.outer_radius = 4.0 * (cfg.R1 + cfg.R2);
}

} // namespace

double dist_H0(const Vec& a, const Vec& b, const NormModel& norm) { return eval_dual(norm, b - a); }

double dist_H0(const WulffShape& a, const WulffShape& b, const NormModel& norm) {
    return eval_dual(norm, b.center - a.center) - a.radius - b.radius;
}

Vec tangency_point(const WulffShape& s1, const WulffShape& s2, const NormModel& norm, double tol) {
    const Vec d = s2.center - s1.center;
    const double h = eval_dual(norm, d);
    const double scale = s1.radius + s2.radius;
    if (std::abs(h - scale) > tol * scale) {
        throw GeometryError("shapes are not tangent: center distance " + std::to_string(h) +
                            " vs radii sum " + std::to_string(scale));
    }
    const Vec x = s1.center + s1.radius * d / h;
    const Vec g1 = eval_dual_jet(norm, x - s1.center).gradient;
    const Vec g2 = eval_dual_jet(norm, s2.center - x).gradient;
    if ((g1.normalized() - g2.normalized()).norm() > 1e-6) {
        throw GeometryError("tangency normals are not parallel");
    }
    return x;
}

AxisCurvature matrix_Q(const NormModel& norm) {
    const int n = norm.dim();
    const Vec e = unit_axis(n);
    // H0(t e_N) = 1 has a bracketed root on (0, inf); homogeneity puts it at 1 / H0(e_N).
    auto f = [&](double t) { return eval_dual(norm, t * e) - 1.0; };
    double lo = 1e-3, hi = 1.0;
    while (f(lo) > 0.0) lo *= 0.5;
    while (f(hi) < 0.0) hi *= 2.0;
    std::uintmax_t iters = 200;
    auto [a, b] = boost::math::tools::toms748_solve(f, lo, hi, boost::math::tools::eps_tolerance<double>(52),
                                                    iters);
    if (iters >= 200) throw NumericError("matrix_Q: root finding for P_hat did not converge");
    const double t0 = 0.5 * (a + b);
    AxisCurvature ac;
    ac.P_hat = t0 * e;
    const Mat Hs = eval_dual_jet(norm, ac.P_hat).hessian;
    ac.Q = 0.5 * (Hs.topLeftCorner(n - 1, n - 1) + Hs.topLeftCorner(n - 1, n - 1).transpose());
    return ac;
}

WulffConfig make_wulff_config(const NormModel& norm, double R1, double R2, double delta, double outer_radius) {
    if (!(R1 > 0.0) || !(R2 > 0.0)) throw ConfigError("inclusion radii must be positive");
    if (!(delta >= 0.0)) throw ConfigError("separation must be nonnegative");
    WulffConfig cfg{.norm = norm};
    cfg.dim = norm.dim();
    cfg.R1 = R1;
    cfg.R2 = R2;
    cfg.delta = delta;
    cfg.outer_radius = outer_radius;
    cfg.rotation = Mat::Identity(cfg.dim, cfg.dim);
    cfg.origin = Vec::Zero(cfg.dim);
    fill_axis_data(cfg);
    if (cfg.outer_radius <= eval_dual(norm, cfg.shape1.center) + R1 ||
        cfg.outer_radius <= eval_dual(norm, cfg.shape2.center) + R2) {
        throw ConfigError("outer radius must enclose both inclusions");
    }
    return cfg;
}

WulffConfig canonicalize(const NormModel& norm, const Vec& c1, double R1, const Vec& c2, double R2,
                         double outer_radius) {
    const Vec d = c1 - c2;
    if (d.norm() == 0.0) throw GeometryError("inclusion centers coincide");
    const double h = eval_dual(norm, d);
    const double delta = h - R1 - R2;
    if (delta < 0.0) throw GeometryError("inclusions overlap");
    const Mat R = rotation_to_axis(d.normalized());
    WulffConfig cfg = make_wulff_config(norm.rotated(R), R1, R2, delta, outer_radius);
    cfg.rotation = R;
    cfg.origin = c1 - (R1 + 0.5 * delta) / h * d;
    return cfg;
}

Vec to_canonical(const WulffConfig& cfg, const Vec& x_user) { return cfg.rotation * (x_user - cfg.origin); }

Vec from_canonical(const WulffConfig& cfg, const Vec& x) { return cfg.rotation.transpose() * x + cfg.origin; }

WulffConfig with_delta(const WulffConfig& cfg, double delta) {
    WulffConfig out = cfg;
    out.delta = delta;
    fill_axis_data(out);
    return out;
}

Vec boundary_point(const WulffShape& shape, const NormModel& norm, const Vec& u) {
    return shape.center + shape.radius / eval_dual(norm, u) * u;
}

Vec lower_cap_point(const WulffConfig& cfg, const Vec& x_perp) {
    const int n = cfg.dim;
    if (x_perp.size() != n - 1) throw PreconditionError("lower_cap_point: x' has wrong dimension");
    const Vec e = unit_axis(n);
    const double reach = 4.0 * cfg.R1 / eval_dual(cfg.norm, e);
    auto g = [&](double s) {
        Vec y(n);
        y.head(n - 1) = x_perp;
        y(n - 1) = -s;
        return eval_dual(cfg.norm, y) - cfg.R1;
    };
    auto mn = boost::math::tools::brent_find_minima(g, -reach, reach, kBrentBits);
    if (mn.second >= 0.0) throw GeometryError("x' lies outside the projection of D1");
    double lo = mn.first, hi = reach;
    while (g(hi) < 0.0) hi *= 2.0;
    std::uintmax_t iters = 200;
    auto [a, b] = boost::math::tools::toms748_solve(g, lo, hi, boost::math::tools::eps_tolerance<double>(52),
                                                    iters);
    if (iters >= 200) throw GeometryError("graph solve for the lower cap did not converge");
    Vec x(n);
    x.head(n - 1) = x_perp;
    x(n - 1) = cfg.shape1.center(n - 1) - 0.5 * (a + b);
    return x;
}

Vec anisotropic_normal(const WulffShape& shape, const NormModel& norm, const Vec& x, double tol) {
    require_on_boundary(shape, norm, x, tol);
    const Vec g = eval_dual_jet(norm, x - shape.center).gradient;
    return eval_jet(norm, g / g.norm()).gradient;
}

Vec perp(const Vec& x) { return x.head(x.size() - 1); }

double neck_coordinate(const WulffConfig& cfg, const Vec& x) {
    const Vec xp = perp(x);
    return std::sqrt(std::max(0.0, xp.dot(cfg.Q * xp)));
}

bool in_domain(const Vec& x, const WulffConfig& cfg) {
    return eval_dual(cfg.norm, x - cfg.shape1.center) > cfg.R1 && eval_dual(cfg.norm, x - cfg.shape2.center) > cfg.R2 &&
           eval_dual(cfg.norm, x) < cfg.outer_radius;
}

bool neck_membership(const Vec& x, const WulffConfig& cfg, const NeckSpec& spec) {
    return in_domain(x, cfg) && neck_coordinate(cfg, x) < spec.w && eval_dual(cfg.norm, x) < spec.r;
}

RadiiPair touching_radii_inner(const WulffConfig& cfg, const Vec& P, double t) {
    if (!(t > 0.0 && t <= 1.0)) throw DomainError("touching_radii_inner: t must lie in (0, 1]");
    const Vec nu = anisotropic_normal(cfg.shape1, cfg.norm, P);
    RadiiPair rp;
    rp.inner = t * cfg.R1;
    rp.center = P - rp.inner * nu;
    rp.outer = boundary_distance(cfg.shape2, cfg.norm, rp.center);
    return rp;
}

RadiiPair touching_radii_outer(const WulffConfig& cfg, const Vec& P, double t) {
    if (!(t > 0.0) || !(t * cfg.R1 < cfg.R2)) throw DomainError("touching_radii_outer: need 0 < t R1 < R2");
    const Vec nu = anisotropic_normal(cfg.shape1, cfg.norm, P);
    RadiiPair rp;
    rp.outer = t * cfg.R1;
    rp.center = P + rp.outer * nu;
    if (eval_dual(cfg.norm, rp.center - cfg.shape2.center) >= cfg.R2) {
        throw GeometryError("touching_radii_outer: exterior ball center is not inside D2");
    }
    rp.inner = boundary_distance(cfg.shape2, cfg.norm, rp.center);
    return rp;
}

double radii_difference_inner_exact(const WulffConfig& cfg, const Vec& P, double t) {
    const Vec nu = anisotropic_normal(cfg.shape1, cfg.norm, P);
    const Vec y0 = P - t * cfg.R1 * nu;
    return eval_dual(cfg.norm, y0 - cfg.shape2.center) - cfg.R2 - t * cfg.R1;
}

double radii_difference_outer_exact(const WulffConfig& cfg, const Vec& P, double t) {
    const Vec nu = anisotropic_normal(cfg.shape1, cfg.norm, P);
    const Vec y = P + t * cfg.R1 * nu;
    return t * cfg.R1 - (cfg.R2 - eval_dual(cfg.norm, y - cfg.shape2.center));
}

double inner_coefficient(const WulffConfig& cfg, double t) {
    return (1.0 - t) * (cfg.R1 + cfg.R2) / (2.0 * cfg.R1 * (t * cfg.R1 + cfg.R2));
}

double outer_coefficient(const WulffConfig& cfg, double t) {
    if (!(t * cfg.R1 < cfg.R2)) throw DomainError("outer_coefficient: need t R1 < R2");
    return (1.0 + t) * (cfg.R1 + cfg.R2) / (2.0 * cfg.R1 * (cfg.R2 - t * cfg.R1));
}

double radii_expansion_inner(const WulffConfig& cfg, const Vec& P, double t) {
    const Vec xp = perp(P);
    return cfg.delta + inner_coefficient(cfg, t) * xp.dot(cfg.Q * xp);
}

double radii_expansion_outer(const WulffConfig& cfg, const Vec& P, double t) {
    const Vec xp = perp(P);
    return cfg.delta + outer_coefficient(cfg, t) * xp.dot(cfg.Q * xp);
}

} // namespace fgap
