#pragma once

// Wulff-shape geometry for two nearly touching inclusions.
//
// The canonical frame puts both centers on the x_N axis with D1 above D2 and the
// origin at the midpoint of the gap, so that the touching direction is e_N.

#include "fgap/norms.hpp"

namespace fgap {

/// {x : H0(x - center) < radius}
struct WulffShape {
    Vec center;
    double radius = 1.0;
};

struct NeckSpec {
    double w = 0.1;
    double r = 1.0;
};

struct WulffConfig {
    NormModel norm;           // expressed in the canonical frame
    int dim = 2;
    double R1 = 1.0;
    double R2 = 1.0;
    double delta = 0.0;
    double outer_radius = 8.0; // concentric Wulff ball about the origin
    WulffShape shape1{};       // upper
    WulffShape shape2{};       // lower
    Vec P0{};                  // closest point of D1 to D2
    Vec P_hat{};               // (0, ..., 0, t0) with H0(P_hat) = 1
    Mat Q{};                   // leading (N-1) block of Hess H0(P_hat)
    double axis_slope = 1.0;   // |d H0 / d x_N| at P0 - c1

    // canonical x = rotation * (x_user - origin)
    Mat rotation{};
    Vec origin{};
};

double dist_H0(const Vec& a, const Vec& b, const NormModel& norm);

/// Closest-approach distance between two Wulff balls (negative when they overlap).
double dist_H0(const WulffShape& a, const WulffShape& b, const NormModel& norm);

/// Touching point of two externally tangent shapes. Throws GeometryError when the
/// shapes are not tangent within tol * (r1 + r2).
Vec tangency_point(const WulffShape& s1, const WulffShape& s2, const NormModel& norm, double tol = 1e-10);

struct AxisCurvature {
    Vec P_hat;
    Mat Q;
};

/// P_hat on the positive x_N axis with H0(P_hat) = 1 and Q = leading block of Hess H0(P_hat).
AxisCurvature matrix_Q(const NormModel& norm);

/// Canonical configuration for a norm already aligned with the touching axis.
WulffConfig make_wulff_config(const NormModel& norm, double R1, double R2, double delta,
                              double outer_radius = 0.0);

/// Canonicalizes two Wulff balls given in arbitrary position. The norm is rotated so that
/// the center line becomes the x_N axis; the transform is stored in the result.
WulffConfig canonicalize(const NormModel& norm, const Vec& c1, double R1, const Vec& c2, double R2,
                         double outer_radius = 0.0);

Vec to_canonical(const WulffConfig& cfg, const Vec& x_user);
Vec from_canonical(const WulffConfig& cfg, const Vec& x);

/// The same configuration at a different separation.
WulffConfig with_delta(const WulffConfig& cfg, double delta);

/// Boundary point center + radius * u / H0(u) in direction u.
Vec boundary_point(const WulffShape& shape, const NormModel& norm, const Vec& u);

/// Point of the lower cap of D1 (facing D2) with transverse coordinates x'.
/// Throws GeometryError when x' lies outside the projection of D1.
Vec lower_cap_point(const WulffConfig& cfg, const Vec& x_perp);

/// grad H(nu(x)), nu the Euclidean outer normal; equals (x - center) / radius.
Vec anisotropic_normal(const WulffShape& shape, const NormModel& norm, const Vec& x, double tol = 1e-8);

bool neck_membership(const Vec& x, const WulffConfig& cfg, const NeckSpec& spec);

/// |Q^{1/2} x'| for a canonical point x.
double neck_coordinate(const WulffConfig& cfg, const Vec& x);

bool in_domain(const Vec& x, const WulffConfig& cfg);

struct RadiiPair {
    double inner = 0.0; // r1 (or rho1 for the outer construction)
    double outer = 0.0; // r2 (or rho2)
    Vec center;         // y0 (or y_bar)
};

/// Ball of radius t R1 inside D1 touching at P, and its H0-distance r2 to D2, found by
/// multi-start minimization over a chart of the boundary of D2.
RadiiPair touching_radii_inner(const WulffConfig& cfg, const Vec& P, double t);

/// Ball of radius rho2 = t R1 outside D1 touching at P and the largest concentric ball
/// inside D2, of radius rho1. Requires t R1 < R2.
RadiiPair touching_radii_outer(const WulffConfig& cfg, const Vec& P, double t);

/// Closed forms of the same quantities (norm balls make both exact).
double radii_difference_inner_exact(const WulffConfig& cfg, const Vec& P, double t);
double radii_difference_outer_exact(const WulffConfig& cfg, const Vec& P, double t);

double inner_coefficient(const WulffConfig& cfg, double t);
double outer_coefficient(const WulffConfig& cfg, double t);

/// delta + c(t) Q P_perp . P_perp for the inner and outer constructions.
double radii_expansion_inner(const WulffConfig& cfg, const Vec& P, double t);
double radii_expansion_outer(const WulffConfig& cfg, const Vec& P, double t);

/// Transverse coordinates x' of a canonical point.
Vec perp(const Vec& x);

} // namespace fgap
