#include "fgap/fit.hpp"

#include <boost/math/distributions/students_t.hpp>
#include <fmt/format.h>
#include <json.hpp>

#include <algorithm>
#include <cmath>

namespace fgap {

namespace {

using json = nlohmann::ordered_json;

// least squares y = a + b x
struct Line {
    double a = 0.0, b = 0.0, stderr_b = 0.0;
};

Line regress(const std::vector<double>& x, const std::vector<double>& y) {
    const double n = static_cast<double>(x.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    Line l;
    l.b = sxy / sxx;
    l.a = my - l.b * mx;
    double sse = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) sse += std::pow(y[i] - l.a - l.b * x[i], 2);
    l.stderr_b = x.size() > 2 ? std::sqrt(sse / (n - 2) / sxx) : 0.0;
    return l;
}

ModelFit fit_model(const std::string& name, const std::vector<double>& d, const std::vector<double>& y,
                   double (*g)(double)) {
    double c = 0.0;
    for (std::size_t i = 0; i < d.size(); ++i) c += std::log(y[i]) - std::log(g(d[i]));
    c /= static_cast<double>(d.size());
    double ss = 0.0;
    for (std::size_t i = 0; i < d.size(); ++i) ss += std::pow(std::log(y[i]) - std::log(g(d[i])) - c, 2);
    return {name, std::exp(c), std::sqrt(ss / static_cast<double>(d.size()))};
}

json vec_json(const std::vector<double>& v) { return json(v); }

} // namespace

FitReport fit_rate(const std::vector<SweepRow>& rows, int N, double tau, const std::optional<BlowupPrediction>& prediction,
                   const FitOptions& opts) {
    FitReport f;
    f.N = N;
    f.tau = tau;
    std::vector<SweepRow> ok;
    for (const auto& r : rows)
        if (r.ok && r.max_grad > 0.0 && r.delta > 0.0) ok.push_back(r);
    std::sort(ok.begin(), ok.end(), [](const SweepRow& a, const SweepRow& b) { return a.delta > b.delta; });
    if (ok.size() < 5) throw PreconditionError(fmt::format("fit_rate: need >= 5 successful rows, have {}", ok.size()));
    const double decades = std::log10(ok.front().delta / ok.back().delta);
    if (decades < 1.5 - 1e-9)
        throw PreconditionError(fmt::format("fit_rate: rows span {:.2f} decades of delta, need >= 1.5", decades));
    f.rows_used = static_cast<int>(ok.size());

    std::vector<double> lx, ly;
    for (const auto& r : ok) {
        f.deltas.push_back(r.delta);
        f.max_grad.push_back(r.max_grad);
        f.prefactors.push_back(r.max_grad / phi_N(r.delta, N));
        lx.push_back(std::log(r.delta));
        ly.push_back(std::log(r.max_grad));
    }
    const Line l = regress(lx, ly);
    f.slope = l.b;
    f.intercept = l.a;
    f.prefactor = std::exp(l.a);
    f.slope_stderr = l.stderr_b;
    const double q = boost::math::quantile(boost::math::students_t(static_cast<double>(ok.size() - 2)), 0.975);
    f.slope_lo = f.slope - q * f.slope_stderr;
    f.slope_hi = f.slope + q * f.slope_stderr;
    if (N == 2) f.target_slope = -0.5;
    if (N >= 4) f.target_slope = -1.0;
    f.slope_ok = f.target_slope ? std::abs(f.slope - *f.target_slope) <= opts.slope_tolerance : false;

    const double cut = f.deltas.back() * std::sqrt(10.0);
    double pmin = 1e300, pmax = 0.0;
    for (std::size_t i = 0; i < f.deltas.size(); ++i)
        if (f.deltas[i] <= cut * (1 + 1e-12)) {
            pmin = std::min(pmin, f.prefactors[i]);
            pmax = std::max(pmax, f.prefactors[i]);
        }
    f.prefactor_spread = pmax / pmin - 1.0;
    f.spread_ok = f.prefactor_spread <= opts.spread_tolerance;

    f.models.push_back(fit_model("delta^-1/2", f.deltas, f.max_grad, [](double d) { return 1.0 / std::sqrt(d); }));
    f.models.push_back(fit_model("delta^-1", f.deltas, f.max_grad, [](double d) { return 1.0 / d; }));
    f.models.push_back(
        fit_model("1/(delta|ln delta|)", f.deltas, f.max_grad, [](double d) { return 1.0 / (d * std::abs(std::log(d))); }));
    f.best_model = std::min_element(f.models.begin(), f.models.end(), [](const ModelFit& a, const ModelFit& b) {
                       return a.rms_residual < b.rms_residual;
                   })->name;

    if (prediction) {
        f.predicted_prefactor = prediction->prefactor;
        for (double d : f.deltas) {
            const Bounds b = gradient_band(*prediction, d);
            f.band_lo.push_back(b.lower);
            f.band_hi.push_back(b.upper);
        }
        for (std::size_t i = 0; i < f.deltas.size(); ++i)
            if (f.max_grad[i] >= f.band_lo[i] && f.max_grad[i] <= f.band_hi[i]) ++f.rows_in_band;
        f.band_ok = f.rows_in_band > 0;
    }
    return f;
}

std::string fit_to_json(const FitReport& f) {
    json j;
    j["N"] = f.N;
    j["tau"] = f.tau;
    j["rows_used"] = f.rows_used;
    j["slope"] = f.slope;
    j["intercept"] = f.intercept;
    j["prefactor"] = f.prefactor;
    j["slope_stderr"] = f.slope_stderr;
    j["slope_ci95"] = {f.slope_lo, f.slope_hi};
    j["target_slope"] = f.target_slope ? json(*f.target_slope) : json(nullptr);
    j["deltas"] = vec_json(f.deltas);
    j["max_grad"] = vec_json(f.max_grad);
    j["prefactors"] = vec_json(f.prefactors);
    j["prefactor_spread"] = f.prefactor_spread;
    auto models = json::array();
    for (const auto& m : f.models) models.push_back({{"name", m.name}, {"prefactor", m.prefactor}, {"rms_residual", m.rms_residual}});
    j["models"] = models;
    j["best_model"] = f.best_model;
    j["predicted_prefactor"] = f.predicted_prefactor ? json(*f.predicted_prefactor) : json(nullptr);
    j["band_lo"] = vec_json(f.band_lo);
    j["band_hi"] = vec_json(f.band_hi);
    j["rows_in_band"] = f.rows_in_band;
    j["verdict"] = {{"slope_ok", f.slope_ok}, {"spread_ok", f.spread_ok}, {"band_ok", f.band_ok}};
    return j.dump(2);
}

FitReport fit_from_json(const std::string& text) {
    FitReport f;
    try {
        const auto j = json::parse(text);
        f.N = j.at("N");
        f.tau = j.at("tau");
        f.rows_used = j.at("rows_used");
        f.slope = j.at("slope");
        f.intercept = j.at("intercept");
        f.prefactor = j.at("prefactor");
        f.slope_stderr = j.at("slope_stderr");
        f.slope_lo = j.at("slope_ci95").at(0);
        f.slope_hi = j.at("slope_ci95").at(1);
        if (!j.at("target_slope").is_null()) f.target_slope = j.at("target_slope").get<double>();
        f.deltas = j.at("deltas").get<std::vector<double>>();
        f.max_grad = j.at("max_grad").get<std::vector<double>>();
        f.prefactors = j.at("prefactors").get<std::vector<double>>();
        f.prefactor_spread = j.at("prefactor_spread");
        for (const auto& m : j.at("models")) f.models.push_back({m.at("name"), m.at("prefactor"), m.at("rms_residual")});
        f.best_model = j.at("best_model");
        if (!j.at("predicted_prefactor").is_null()) f.predicted_prefactor = j.at("predicted_prefactor").get<double>();
        f.band_lo = j.at("band_lo").get<std::vector<double>>();
        f.band_hi = j.at("band_hi").get<std::vector<double>>();
        f.rows_in_band = j.at("rows_in_band");
        f.slope_ok = j.at("verdict").at("slope_ok");
        f.spread_ok = j.at("verdict").at("spread_ok");
        f.band_ok = j.at("verdict").at("band_ok");
    } catch (const json::exception& e) {
        throw ConfigError(fmt::format("fit: malformed fit report: {}", e.what()));
    }
    return f;
}

double resolve_R0(const ScenarioConfig& cfg) {
    if (cfg.R0) return *cfg.R0;
    const WulffConfig wc = cfg.wulff(cfg.deltas.front());
    return compute_R0(wc, cfg.phi, cfg.mesh, cfg.solve_options(), cfg.delta_ref).R0;
}

std::string prediction_json(const ScenarioConfig& cfg, const BlowupPrediction& p) {
    json j;
    j["N"] = p.N;
    j["detQ"] = p.detQ;
    j["geometric_factor"] = p.geometric_factor;
    j["axis_slope"] = p.axis_slope;
    j["R0"] = p.R0;
    j["tau"] = p.tau;
    j["C_N"] = p.C_N;
    j["C_N_note"] = "quadrature constant lim I_delta / Psi_N(delta); defined by this tool, not by a closed form";
    j["prefactor"] = p.prefactor;
    auto table = json::array();
    for (double d : cfg.deltas) {
        const Bounds du = deltaU_band(p, d), g = gradient_band(p, d);
        table.push_back({{"delta", d},
                         {"Phi_N", p.phi(d)},
                         {"Psi_N", p.psi(d)},
                         {"deltaU_lo", du.lower},
                         {"deltaU_hi", du.upper},
                         {"max_grad_lo", g.lower},
                         {"max_grad_hi", g.upper}});
    }
    j["table"] = table;
    return j.dump(2);
}

} // namespace fgap
