#pragma once

#include "fgap/sweep.hpp"

#include <optional>
#include <string>
#include <vector>

namespace fgap {

/// One-parameter model max_grad = C g(delta), fitted in log space.
struct ModelFit {
    std::string name; // "delta^-1/2", "delta^-1", "1/(delta|ln delta|)"
    double prefactor = 0.0;
    double rms_residual = 0.0; // RMS of log residuals
};

struct FitReport {
    int N = 2;
    double tau = 0.25;
    int rows_used = 0;
    double slope = 0.0;
    double intercept = 0.0;   // log prefactor of the free power law
    double prefactor = 0.0;   // exp(intercept)
    double slope_stderr = 0.0;
    double slope_lo = 0.0;    // 95% Student-t band
    double slope_hi = 0.0;
    std::optional<double> target_slope; // -1/2 for N = 2, -1 for N >= 4
    std::vector<double> deltas;
    std::vector<double> max_grad;
    std::vector<double> prefactors; // max_grad / Phi_N(delta), raw
    double prefactor_spread = 0.0;  // max/min - 1 over the last half-decade of delta
    std::vector<ModelFit> models;
    std::string best_model;
    // predicted (1 -/+ tau) band of max_grad, when a prediction is attached
    std::optional<double> predicted_prefactor;
    std::vector<double> band_lo, band_hi;
    int rows_in_band = 0;
    bool slope_ok = false;
    bool spread_ok = false;
    bool band_ok = false;
};

struct FitOptions {
    double slope_tolerance = 0.07;
    double spread_tolerance = 0.25;
};

/// Needs at least 5 successful rows spanning 1.5 decades of delta (PreconditionError).
/// Failed rows are ignored.
FitReport fit_rate(const std::vector<SweepRow>& rows, int N, double tau,
                   const std::optional<BlowupPrediction>& prediction = std::nullopt, const FitOptions& opts = {});

std::string fit_to_json(const FitReport& fit);
FitReport fit_from_json(const std::string& text);

/// Prediction report (JSON) for a config: detQ, geometric factor, axis slope, R0, C_N,
/// prefactor, Phi/Psi table and the Delta U and gradient bands at each delta.
std::string prediction_json(const ScenarioConfig& cfg, const BlowupPrediction& pred);

/// R0 from the config, computing it with compute_R0 when no value is given.
double resolve_R0(const ScenarioConfig& cfg);

} // namespace fgap
