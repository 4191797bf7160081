// fgap: command-line front end.
//
// Exit codes: 0 success, 2 configuration or input error, 3 numeric failure,
// 4 acceptance-check failure. FGAP_WORKERS sets the number of concurrent sweep rows.

#include "fgap/plot.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

using namespace fgap;

namespace {

enum Exit { kOk = 0, kConfig = 2, kNumeric = 3, kCheck = 4 };

std::string slurp(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError(fmt::format("cannot read '{}'", path));
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void print_report(const SolveReport& r, const Mesh& mesh, double delta) {
    std::cout << fmt::format("delta = {:.17g}\n", delta)
              << fmt::format("elements = {}\nvertices = {}\n", mesh.num_elements(), mesh.num_vertices())
              << fmt::format("converged = {}\niterations = {}\ngradient_steps = {}\n", r.converged, r.iterations, r.gradient_steps)
              << fmt::format("energy = {:.17g}\nresidual = {:.3e}\ntolerance = {:.3e}\n", r.energy, r.residual, r.tolerance)
              << fmt::format("U1 = {:.17g}\nU2 = {:.17g}\n", r.U1, r.U2)
              << fmt::format("flux1 = {:.6e}\nflux2 = {:.6e}\n", r.flux1, r.flux2)
              << fmt::format("outer_flux = {:.17g}\ndivergence_defect = {:.3e}\n", r.outer_flux, r.divergence_defect)
              << fmt::format("max_grad = {:.17g}\nmax_grad_neck = {:.17g}\n", r.max_grad, r.max_grad_neck)
              << fmt::format("degenerate_elements = {}\nwall_time = {:.3f}\n", r.degenerate_elements, r.wall_time);
}

int cmd_check_norm(const std::string& path, int samples) {
    const auto cfg = load_config(path);
    const NormModel n = cfg.norm.build();
    const auto r = identity_suite(n, samples);
    const auto e = ellipticity_probe(n, 2000);
    std::cout << fmt::format("family = {}\ndim = {}\nsamples = {}\n", cfg.norm.family, n.dim(), r.samples)
              << fmt::format("euler = {:.3e}\ndual_of_gradient = {:.3e}\n", r.euler, r.dual_of_gradient)
              << fmt::format("round_trip = {:.3e}\nhessian_quadratic = {:.3e}\n", r.round_trip, r.hessian_quadratic)
              << fmt::format("lambda_lower = {:.6g}\nlambda_upper = {:.6g}\n", e.lambda_lower, e.lambda_upper)
              << "status = " << (r.ok() ? "PASS" : "FAIL") << "\n";
    return r.ok() ? kOk : kCheck;
}

int cmd_mesh(const std::string& path, double delta, const std::string& out) {
    const auto cfg = load_config(path);
    const Mesh mesh = build_mesh(MeshDomain::from_config(cfg.wulff(delta)), cfg.mesh);
    const auto rep = validate_mesh(mesh, cfg.mesh.k_gap);
    if (out.empty() || out == "-") {
        write_mesh(std::cout, mesh);
    } else {
        std::ofstream f(out);
        write_mesh(f, mesh);
    }
    std::cerr << fmt::format("elements {} vertices {} gap_layers {} min_angle {:.2f} valid {}\n", mesh.num_elements(),
                             mesh.num_vertices(), rep.gap_layers, rep.quality.min_angle_deg, rep.ok());
    return rep.ok() ? kOk : kNumeric;
}

int cmd_solve(const std::string& path, double delta) {
    const auto cfg = load_config(path);
    const WulffConfig wc = cfg.wulff(delta);
    const Mesh mesh = build_mesh(MeshDomain::from_config(wc), cfg.mesh);
    const DofMap map = make_dofmap(mesh, cfg.phi, InclusionMode::Tied);
    SolveOptions o = cfg.solve_options();
    o.neck = std::make_pair(wc, NeckSpec{cfg.neck_width(delta), cfg.neck_r});
    const auto res = solve(mesh, map, wc.norm, o);
    print_report(res.report, mesh, delta);
    return kOk;
}

int cmd_sweep(const std::string& path, const std::string& out_dir) {
    auto cfg = load_config(path);
    if (!out_dir.empty()) cfg.output_dir = out_dir;
    const auto res = run_sweep(cfg);
    persist_sweep(cfg, res);
    for (const auto& r : res.rows) {
        if (r.ok)
            std::cout << fmt::format("delta {:.6e}  max_grad {:.6e}  neck {:.6e}  U1-U2 {:.6e}  iters {}  elements {}\n", r.delta,
                                     r.max_grad, r.max_grad_neck, r.U1 - r.U2, r.iterations, r.elements);
        else
            std::cout << fmt::format("delta {:.6e}  FAILED: {}\n", r.delta, r.error);
    }
    std::cout << fmt::format("wrote {}/rows.csv and {}/manifest.json\n", cfg.output_dir, cfg.output_dir);
    return res.failures ? kNumeric : kOk;
}

int cmd_fit(const std::string& rows_path, std::optional<int> dim, double tau, const std::string& config,
            const std::string& out, bool check) {
    std::ifstream in(rows_path);
    if (!in) throw ConfigError(fmt::format("cannot read '{}'", rows_path));
    int file_dim = 2;
    const auto rows = read_rows_csv(in, &file_dim);
    const int N = dim.value_or(file_dim);
    std::optional<BlowupPrediction> pred;
    if (!config.empty()) {
        const auto cfg = load_config(config);
        pred = make_prediction(cfg.wulff(cfg.deltas.front()), resolve_R0(cfg), tau);
    }
    const auto fit = fit_rate(rows, N, tau, pred);
    const std::string js = fit_to_json(fit);
    const std::string path = out.empty() ? (std::filesystem::path(rows_path).parent_path() / "fit.json").string() : out;
    std::ofstream(path) << js << "\n";
    std::cout << fmt::format("slope = {:.6f}  95% [{:.6f}, {:.6f}]\n", fit.slope, fit.slope_lo, fit.slope_hi)
              << fmt::format("prefactor = {:.6g}\nprefactor_spread = {:.4f}\nbest_model = {}\n", fit.prefactor,
                             fit.prefactor_spread, fit.best_model);
    if (fit.target_slope) std::cout << fmt::format("target_slope = {}  slope_ok = {}\n", *fit.target_slope, fit.slope_ok);
    std::cout << fmt::format("spread_ok = {}\nwrote {}\n", fit.spread_ok, path);
    if (check) {
        const bool ok = (fit.target_slope ? fit.slope_ok : true) && fit.spread_ok;
        return ok ? kOk : kCheck;
    }
    return kOk;
}

int cmd_predict(const std::string& path, std::optional<double> R0) {
    auto cfg = load_config(path);
    if (R0) cfg.R0 = R0;
    const auto pred = make_prediction(cfg.wulff(cfg.deltas.front()), resolve_R0(cfg), cfg.tau);
    std::cout << prediction_json(cfg, pred) << "\n";
    return kOk;
}

int cmd_plot(const std::string& rows_path, const std::string& fit_path, const std::string& out_dir) {
    const auto fit = fit_from_json(slurp(fit_path));
    const std::string base = std::filesystem::path(rows_path).parent_path().string();
    const std::string dir = out_dir.empty() ? (base.empty() ? "." : base) : out_dir;
    const auto snap = read_snapshot(base.empty() ? "." : base);
    for (const auto& p : emit_plots(dir, fit, snap)) std::cout << "wrote " << p << "\n";
    return kOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Finsler perfect-conductivity gap laboratory"};
    app.set_version_flag("--version", tool_version());
    app.require_subcommand(1);

    std::string config, rows, fit_file, out;
    double delta = 0.0, tau = 0.25;
    int samples = 1000;
    std::optional<int> dim;
    std::optional<double> R0;
    bool check = false;

    auto* c_norm = app.add_subcommand("check-norm", "norm identity suite");
    c_norm->add_option("config", config)->required();
    c_norm->add_option("--samples", samples);

    auto* c_mesh = app.add_subcommand("mesh", "emit a mesh");
    c_mesh->add_option("config", config)->required();
    c_mesh->add_option("--delta", delta)->required();
    c_mesh->add_option("-o,--out", out, "output file (default stdout)");

    auto* c_solve = app.add_subcommand("solve", "single solve and report");
    c_solve->add_option("config", config)->required();
    c_solve->add_option("--delta", delta)->required();

    auto* c_sweep = app.add_subcommand("sweep", "full delta sweep");
    c_sweep->add_option("config", config)->required();
    c_sweep->add_option("-o,--out", out, "output directory (overrides output.dir)");

    auto* c_fit = app.add_subcommand("fit", "rate fit of a rows file");
    c_fit->add_option("rows", rows)->required();
    c_fit->add_option("--dim", dim);
    c_fit->add_option("--tau", tau);
    c_fit->add_option("--config", config, "attach the predicted band for this config");
    c_fit->add_option("-o,--out", out, "fit report (default fit.json next to the rows)");
    c_fit->add_flag("--check", check, "exit 4 unless slope and prefactor spread pass");

    auto* c_predict = app.add_subcommand("predict", "prediction report");
    c_predict->add_option("config", config)->required();
    c_predict->add_option("--R0", R0);

    auto* c_plot = app.add_subcommand("plot", "SVG plots");
    c_plot->add_option("rows", rows)->required();
    c_plot->add_option("fit", fit_file)->required();
    c_plot->add_option("-o,--out", out);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kOk : kConfig;
    }

    try {
        if (*c_norm) return cmd_check_norm(config, samples);
        if (*c_mesh) return cmd_mesh(config, delta, out);
        if (*c_solve) return cmd_solve(config, delta);
        if (*c_sweep) return cmd_sweep(config, out);
        if (*c_fit) return cmd_fit(rows, dim, tau, config, out, check);
        if (*c_predict) return cmd_predict(config, R0);
        if (*c_plot) return cmd_plot(rows, fit_file, out);
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kConfig;
    } catch (const PreconditionError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kConfig;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kNumeric;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kConfig;
    }
    return kOk;
}
