#pragma once

#include "fgap/config.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace fgap {

struct SweepRow {
    double delta = 0.0;
    double w = 0.0;
    double max_grad = 0.0;
    double max_grad_neck = 0.0;
    double U1 = 0.0;
    double U2 = 0.0;
    double flux1 = 0.0;
    double flux2 = 0.0;
    double outer_flux = 0.0;
    double divergence_defect = 0.0;
    double energy = 0.0;
    double residual = 0.0;
    double tolerance = 0.0;
    int iterations = 0;
    long elements = 0;
    long vertices = 0;
    double wall_time = 0.0;
    bool ok = false;
    std::string error; // empty for successful rows
    // location of max_grad
    double argmax_x = 0.0;
    double argmax_y = 0.0;
    double argmax_z = 0.0;
};

/// Field snapshot for the heatmap: a 2-D mesh and one value of H(grad u) per element.
struct FieldSnapshot {
    double delta = 0.0;
    Mesh mesh;
    std::vector<double> values;
};

struct SweepResult {
    std::vector<SweepRow> rows; // in config order (decreasing delta)
    std::optional<FieldSnapshot> snapshot; // smallest successful delta, N = 2 only
    int failures = 0;
};

/// One mesh, solve and measurement for a single delta. Never throws for solver errors;
/// they are recorded in the row.
SweepRow run_row(const ScenarioConfig& cfg, double delta, FieldSnapshot* snapshot = nullptr);

/// All rows, up to `workers` at a time (0: FGAP_WORKERS or 1).
SweepResult run_sweep(const ScenarioConfig& cfg, int workers = 0);

int workers_from_env();

/// CSV with a comment header line `# finsler-gap rows v1 dim=<N>`; every double with
/// 17 significant digits.
void write_rows_csv(std::ostream& out, const std::vector<SweepRow>& rows, int dim);
std::vector<SweepRow> read_rows_csv(std::istream& in, int* dim = nullptr);

/// Run manifest: schema, tool version, config hash, canonical config, per-row diagnostics.
std::string manifest_json(const ScenarioConfig& cfg, const SweepResult& result);

void write_snapshot(const std::string& dir, const FieldSnapshot& snap);
std::optional<FieldSnapshot> read_snapshot(const std::string& dir);

/// Writes rows.csv, manifest.json and the heatmap snapshot under cfg.output_dir.
void persist_sweep(const ScenarioConfig& cfg, const SweepResult& result);

std::string tool_version();

} // namespace fgap
