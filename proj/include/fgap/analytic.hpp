#pragma once

// Closed-form and asymptotic formulas: annulus solutions, barriers, the cutoff and
// P-function, the rates Phi_N / Psi_N, the neck integral and the blow-up prediction.

#include "fgap/geometry.hpp"

namespace fgap {

struct AnnulusSpec {
    NormModel norm;
    double r = 1.0;
    double R = 2.0;
    double C_r = 1.0;
    double C_R = 0.0;
    Vec center;
};

/// Radial Finsler-harmonic function of H0(x - center). Throws DomainError outside the
/// closed annulus (with a relative slack of 1e-12).
double annulus_solution(const AnnulusSpec& spec, const Vec& x);
Vec annulus_gradient(const AnnulusSpec& spec, const Vec& x);

struct Bounds {
    double lower = 0.0;
    double upper = 0.0;
};

/// Explicit bounds on H(grad v) over the closed annulus.
Bounds annulus_gradient_bounds(const AnnulusSpec& spec);

/// Point of the annulus where v = (C_r + C_R) / 2 along direction u: geometric mean of the
/// radii in 2-D, 2 r R / (r + R) for N >= 3.
double annulus_midvalue_radius(int dim, double r, double R);

double phi_N(double delta, int N);
double psi_N(double delta, int N);

/// lim I_delta / psi_N(delta) with I_delta = int_{|z| < delta^{-1/2}} dz / (1 + |z|^2), z in R^{N-1}.
double quadrature_constant(int N);

struct NeckIntegralOptions {
    double rel_tol = 1e-8;
    bool flat = false; // drop the graph area factor (flat-graph limit)
};

/// int over the lower cap of D1 with |Q^{1/2} x'| < w of dsigma / (delta + c Q x'.x').
double neck_integral(const WulffConfig& cfg, double c, double w, const NeckIntegralOptions& opts = {});

/// Leading term G0 (c^{N-1} det Q)^{-1/2} C_N / Psi_N(delta) of neck_integral, G0 the graph
/// area factor at P0.
double neck_integral_asymptote(const WulffConfig& cfg, double c);

/// sqrt(1 + |grad phi|^2) of the lower cap at P0.
double graph_area_factor(const WulffConfig& cfg);

/// (R1 + R2) / (2 R1 R2)
double geometric_coefficient(const WulffConfig& cfg);

/// Flux-density barriers at P on the lower cap of D1:
///   upper = -H(nu) dU / (delta + (1 + tau) c0 Q P'.P') + C
///   lower = -H(nu) dU / (delta + (1 - tau) c0 Q P'.P') - C
/// with dU = U1 - U2 >= 0 and c0 = (R1 + R2) / (2 R1 R2).
double barrier_upper(const WulffConfig& cfg, const Vec& P, double tau, double U1, double U2, double C = 0.0);
double barrier_lower(const WulffConfig& cfg, const Vec& P, double tau, double U1, double U2, double C = 0.0);

struct BlowupPrediction {
    int N = 2;
    double detQ = 1.0;
    double geometric_factor = 1.0; // ((R1+R2)/(2R1R2))^{(N-1)/2}
    double axis_slope = 1.0;       // |d_N H0(P0)|
    double R0 = 0.0;
    double tau = 0.25;
    double C_N = 0.0;
    double prefactor = 0.0;        // C_* with max H(grad u) ~ C_* Phi_N(delta)

    double phi(double delta) const { return phi_N(delta, N); }
    double psi(double delta) const { return psi_N(delta, N); }
};

BlowupPrediction make_prediction(const WulffConfig& cfg, double R0, double tau);

/// (1 -/+ tau) band for U1 - U2 at separation delta.
Bounds deltaU_band(const BlowupPrediction& pred, double delta);

/// (1 -/+ tau) band for max H(grad u) at separation delta.
Bounds gradient_band(const BlowupPrediction& pred, double delta);

struct CutoffSpec {
    double w = 0.1;
    Mat Q;                        // transverse metric
    double gradient_constant = 0; // sup |grad f|^2 w^2 / f
    double hessian_constant = 0;  // sup |Hess f| w^2
};

struct CutoffValue {
    double value = 0.0;
    Vec gradient;
    Mat hessian;
};

/// Builds the cutoff f(rho), rho = |Q^{1/2} x'|, f = 0 for rho <= w/2, f = 1 for rho >= w,
/// quintic smoothstep in between. Calibrates the two scale-free constants by sampling and
/// verifies them on a fresh sample set; throws PreconditionError on violation.
CutoffSpec make_cutoff(const Mat& Q, double w, int samples = 100000);

CutoffValue cutoff_f(const Vec& x, const CutoffSpec& spec);

struct PValue {
    double value = 0.0;
    bool below_lambda0 = false;
};

/// lambda_0 = kappa / w^2
double lambda0(double w, double kappa);

/// P = f H(grad u)^2 + lambda u^2 at a point where f, H(grad u) and u are known.
PValue p_function(double f, double grad_H, double u, double lambda, double lambda_0);

} // namespace fgap
