#pragma once

// Scenario configuration files (YAML). The first key must be `schema: finsler-gap/1`.
//
//   schema: finsler-gap/1
//   norm:
//     family: ellipse            # euclidean | ellipse | perturbed_ellipse
//     dim: 2
//     matrix: [4, 0, 0, 1]       # row-major, ellipse and perturbed_ellipse
//     beta: 0.05                 # perturbed_ellipse
//     k: 2                       # perturbed_ellipse, even
//   inclusions:
//     R1: 1
//     R2: 1
//     outer_radius: 0            # 0: 4 (R1 + R2)
//     delta: [0.1, 0.05]         # or delta_range: {max: 0.1, min: 1e-3, count: 8}
//   phi: {a: [0, 1], b: 0}
//   mesh: {h_max: 0.25, h_min: 0, theta: 0.25, k_gap: 8, sectors: 16, max_elements: 3000000}
//   solver: {rel_tol: 1e-10, max_iter: 60, threads: 0}
//   neck: {w: sqrt, r: 1}        # w: sqrt (w = delta^1/2) or a fixed number
//   fit: {tau: 0.25}
//   R0: {value: 1.5}             # or {delta_ref: 1e-3}; computed when no value is given
//   output: {dir: out}
//
// The touching axis is e_N; the norm is used as given, in the canonical frame.

#include "fgap/solver.hpp"

#include <optional>
#include <string>
#include <vector>

namespace fgap {

inline constexpr const char* kSchema = "finsler-gap/1";

struct NormSpec {
    std::string family = "euclidean";
    int dim = 2;
    std::vector<double> matrix; // row-major; empty for euclidean
    double beta = 0.0;
    int k = 2;

    NormModel build() const;
};

struct ScenarioConfig {
    NormSpec norm;
    double R1 = 1.0;
    double R2 = 1.0;
    double outer_radius = 0.0;
    std::vector<double> deltas; // strictly decreasing
    AffineData phi;
    MeshParams mesh;
    double rel_tol = 1e-10;
    int max_iter = 60;
    int threads = 0;
    bool w_sqrt = true;
    double w_fixed = 0.25;
    double neck_r = 1.0;
    double tau = 0.25;
    std::optional<double> R0;
    double delta_ref = 0.0; // 0: 1e-3 R1
    std::string output_dir = "out";

    double neck_width(double delta) const;
    WulffConfig wulff(double delta) const;
    SolveOptions solve_options() const;
};

/// Throws ConfigError with the offending key on any schema or invariant violation.
ScenarioConfig parse_config(const std::string& text);
ScenarioConfig load_config(const std::string& path);

/// Canonical YAML rendering (every field, fixed key order, 17 significant digits).
std::string canonical_yaml(const ScenarioConfig& cfg);

/// SHA-256 (hex) of canonical_yaml.
std::string config_hash(const ScenarioConfig& cfg);

std::string sha256_hex(const std::string& data);

} // namespace fgap
