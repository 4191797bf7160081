#include "fgap/sweep.hpp"

#include <fmt/format.h>
#include <json.hpp>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <future>
#include <istream>
#include <mutex>
#include <ostream>
#include <sstream>

namespace fgap {

namespace {

const char* kColumns =
    "delta,w,max_grad,max_grad_neck,U1,U2,flux1,flux2,outer_flux,divergence_defect,energy,residual,tolerance,"
    "iterations,elements,vertices,wall_time,ok,argmax_x,argmax_y,argmax_z,error";

std::string g17(double x) { return fmt::format("{:.17g}", x); }

double parse_double(const std::string& s) {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw ConfigError(fmt::format("rows: bad number '{}'", s));
    return v;
}

std::string sanitize(std::string s) {
    std::replace(s.begin(), s.end(), ',', ';');
    std::replace(s.begin(), s.end(), '\n', ' ');
    return s;
}

} // namespace

std::string tool_version() {
#ifdef FGAP_VERSION
    return FGAP_VERSION;
#else
    return "dev";
#endif
}

int workers_from_env() {
    const char* v = std::getenv("FGAP_WORKERS");
    if (!v || !*v) return 1;
    try {
        return std::max(1, std::stoi(v));
    } catch (const std::exception&) {
        throw ConfigError(fmt::format("FGAP_WORKERS must be a positive integer, got '{}'", v));
    }
}

SweepRow run_row(const ScenarioConfig& cfg, double delta, FieldSnapshot* snapshot) {
    SweepRow row;
    row.delta = delta;
    row.w = cfg.neck_width(delta);
    try {
        const WulffConfig wc = cfg.wulff(delta);
        const Mesh mesh = build_mesh(MeshDomain::from_config(wc), cfg.mesh);
        row.elements = mesh.num_elements();
        row.vertices = mesh.num_vertices();
        const DofMap map = make_dofmap(mesh, cfg.phi, InclusionMode::Tied);
        SolveOptions o = cfg.solve_options();
        o.neck = std::make_pair(wc, NeckSpec{row.w, cfg.neck_r});
        const SolveResult res = solve(mesh, map, wc.norm, o);
        const SolveReport& r = res.report;
        row.max_grad = r.max_grad;
        row.max_grad_neck = r.max_grad_neck;
        row.U1 = r.U1;
        row.U2 = r.U2;
        row.flux1 = r.flux1;
        row.flux2 = r.flux2;
        row.outer_flux = r.outer_flux;
        row.divergence_defect = r.divergence_defect;
        row.energy = r.energy;
        row.residual = r.residual;
        row.tolerance = r.tolerance;
        row.iterations = r.iterations;
        row.wall_time = r.wall_time;
        const MaxGrad mg = max_grad_H(res.field, mesh, wc.norm);
        if (mg.element >= 0) {
            row.argmax_x = mg.location(0);
            row.argmax_y = mg.location(1);
            if (mesh.dim > 2) row.argmax_z = mg.location(2);
        }
        row.ok = true;
        if (snapshot && mesh.dim == 2) {
            snapshot->delta = delta;
            snapshot->mesh = mesh;
            snapshot->values.resize(mesh.num_elements());
            for (long e = 0; e < mesh.num_elements(); ++e) snapshot->values[e] = wc.norm.value(res.field.gradients.col(e));
        }
    } catch (const Error& e) {
        row.ok = false;
        row.error = e.what();
    }
    return row;
}

SweepResult run_sweep(const ScenarioConfig& cfg, int workers) {
    if (workers <= 0) workers = workers_from_env();
    const std::size_t n = cfg.deltas.size();
    SweepResult out;
    out.rows.resize(n);
    std::vector<FieldSnapshot> snaps(n);
    std::vector<std::future<void>> running;
    std::size_t next = 0;
    auto launch = [&](std::size_t i) {
        return std::async(std::launch::async, [&, i] { out.rows[i] = run_row(cfg, cfg.deltas[i], &snaps[i]); });
    };
    while (next < n || !running.empty()) {
        while (next < n && static_cast<int>(running.size()) < workers) running.push_back(launch(next++));
        running.front().get();
        running.erase(running.begin());
    }
    for (std::size_t i = n; i-- > 0;)
        if (out.rows[i].ok && !snaps[i].values.empty()) {
            out.snapshot = std::move(snaps[i]);
            break;
        }
    for (const auto& r : out.rows) out.failures += r.ok ? 0 : 1;
    return out;
}

void write_rows_csv(std::ostream& out, const std::vector<SweepRow>& rows, int dim) {
    out << "# finsler-gap rows v1 dim=" << dim << "\n" << kColumns << "\n";
    for (const auto& r : rows) {
        out << fmt::format("{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n", g17(r.delta), g17(r.w),
                           g17(r.max_grad), g17(r.max_grad_neck), g17(r.U1), g17(r.U2), g17(r.flux1), g17(r.flux2),
                           g17(r.outer_flux), g17(r.divergence_defect), g17(r.energy), g17(r.residual),
                           g17(r.tolerance), r.iterations, r.elements, r.vertices, g17(r.wall_time), r.ok ? 1 : 0,
                           g17(r.argmax_x), g17(r.argmax_y), g17(r.argmax_z), sanitize(r.error));
    }
}

std::vector<SweepRow> read_rows_csv(std::istream& in, int* dim) {
    std::string line;
    if (!std::getline(in, line) || line.rfind("# finsler-gap rows v1", 0) != 0)
        throw ConfigError("rows: missing '# finsler-gap rows v1' header");
    const auto p = line.find("dim=");
    if (dim) *dim = p == std::string::npos ? 2 : std::stoi(line.substr(p + 4));
    if (!std::getline(in, line) || line != kColumns) throw ConfigError("rows: unexpected column header");
    std::vector<SweepRow> rows;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<std::string> f;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) f.push_back(cell);
        if (!line.empty() && line.back() == ',') f.emplace_back();
        if (f.size() != 22) throw ConfigError(fmt::format("rows: expected 22 fields, got {}", f.size()));
        try {
            SweepRow r;
            double* d[] = {&r.delta, &r.w, &r.max_grad, &r.max_grad_neck, &r.U1, &r.U2, &r.flux1,
                           &r.flux2, &r.outer_flux, &r.divergence_defect, &r.energy, &r.residual, &r.tolerance};
            for (int i = 0; i < 13; ++i) *d[i] = parse_double(f[i]);
            r.iterations = std::stoi(f[13]);
            r.elements = std::stol(f[14]);
            r.vertices = std::stol(f[15]);
            r.wall_time = parse_double(f[16]);
            r.ok = f[17] == "1";
            r.argmax_x = parse_double(f[18]);
            r.argmax_y = parse_double(f[19]);
            r.argmax_z = parse_double(f[20]);
            r.error = f[21];
            rows.push_back(r);
        } catch (const std::logic_error&) {
            throw ConfigError(fmt::format("rows: malformed line '{}'", line));
        }
    }
    return rows;
}

std::string manifest_json(const ScenarioConfig& cfg, const SweepResult& result) {
    nlohmann::ordered_json j;
    j["schema"] = kSchema;
    j["tool"] = "fgap";
    j["tool_version"] = tool_version();
    j["config_sha256"] = config_hash(cfg);
    j["config"] = canonical_yaml(cfg);
    j["dim"] = cfg.norm.dim;
    j["failures"] = result.failures;
    auto rows = nlohmann::ordered_json::array();
    for (const auto& r : result.rows) {
        nlohmann::ordered_json o;
        o["delta"] = r.delta;
        o["ok"] = r.ok;
        o["iterations"] = r.iterations;
        o["elements"] = r.elements;
        o["residual"] = r.residual;
        o["tolerance"] = r.tolerance;
        o["divergence_defect"] = r.divergence_defect;
        o["wall_time"] = r.wall_time;
        if (!r.ok) o["error"] = r.error;
        rows.push_back(o);
    }
    j["rows"] = rows;
    return j.dump(2);
}

void write_snapshot(const std::string& dir, const FieldSnapshot& snap) {
    std::ofstream m(dir + "/heatmap.mesh");
    write_mesh(m, snap.mesh);
    std::ofstream v(dir + "/heatmap.csv");
    v << "# delta=" << g17(snap.delta) << "\n";
    for (double x : snap.values) v << g17(x) << "\n";
}

std::optional<FieldSnapshot> read_snapshot(const std::string& dir) {
    std::ifstream m(dir + "/heatmap.mesh"), v(dir + "/heatmap.csv");
    if (!m || !v) return std::nullopt;
    FieldSnapshot s;
    s.mesh = read_mesh(m);
    std::string line;
    std::getline(v, line);
    if (line.rfind("# delta=", 0) == 0) s.delta = parse_double(line.substr(8));
    while (std::getline(v, line))
        if (!line.empty()) s.values.push_back(parse_double(line));
    if (static_cast<long>(s.values.size()) != s.mesh.num_elements())
        throw ConfigError("heatmap: value count does not match the mesh");
    return s;
}

void persist_sweep(const ScenarioConfig& cfg, const SweepResult& result) {
    std::filesystem::create_directories(cfg.output_dir);
    {
        std::ofstream out(cfg.output_dir + "/rows.csv");
        write_rows_csv(out, result.rows, cfg.norm.dim);
    }
    {
        std::ofstream out(cfg.output_dir + "/manifest.json");
        out << manifest_json(cfg, result) << "\n";
    }
    if (result.snapshot) write_snapshot(cfg.output_dir, *result.snapshot);
}

} // namespace fgap
