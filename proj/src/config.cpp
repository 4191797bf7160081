#include "fgap/config.hpp"

#include <fmt/format.h>
#include <openssl/evp.h>
#include <yaml-cpp/yaml.h>

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace fgap {

namespace {

template <class T>
T get(const YAML::Node& node, const std::string& key, const T& fallback, const std::string& path) {
    const YAML::Node v = node[key];
    if (!v) return fallback;
    try {
        return v.as<T>();
    } catch (const YAML::Exception&) {
        throw ConfigError(fmt::format("config: {}.{} has the wrong type", path, key));
    }
}

void check_keys(const YAML::Node& node, const std::string& path, std::initializer_list<const char*> allowed) {
    if (!node) return;
    if (!node.IsMap()) throw ConfigError(fmt::format("config: {} must be a mapping", path));
    std::set<std::string> ok(allowed.begin(), allowed.end());
    for (const auto& kv : node) {
        const auto key = kv.first.as<std::string>();
        if (!ok.count(key)) throw ConfigError(fmt::format("config: unknown key {}.{}", path, key));
    }
}

std::string num(double x) { return fmt::format("{:.17g}", x); }

std::string list(const std::vector<double>& v) {
    std::string s = "[";
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + num(v[i]);
    return s + "]";
}

std::vector<double> vec_of(const Vec& v) { return {v.data(), v.data() + v.size()}; }

} // namespace

NormModel NormSpec::build() const {
    if (dim < 2) throw ConfigError("config: norm.dim must be >= 2");
    if (family == "euclidean") return NormModel::euclidean(dim);
    if (static_cast<int>(matrix.size()) != dim * dim)
        throw ConfigError(fmt::format("config: norm.matrix needs {} entries", dim * dim));
    Mat M(dim, dim);
    for (int i = 0; i < dim; ++i)
        for (int j = 0; j < dim; ++j) M(i, j) = matrix[i * dim + j];
    try {
        if (family == "ellipse") return NormModel::ellipse(M);
        if (family == "perturbed_ellipse") return NormModel::perturbed_ellipse(M, beta, k);
    } catch (const ConfigError&) {
        throw;
    } catch (const Error& e) {
        throw ConfigError(fmt::format("config: norm: {}", e.what()));
    }
    throw ConfigError(fmt::format("config: unknown norm.family '{}'", family));
}

double ScenarioConfig::neck_width(double delta) const { return w_sqrt ? std::sqrt(delta) : w_fixed; }

WulffConfig ScenarioConfig::wulff(double delta) const {
    return make_wulff_config(norm.build(), R1, R2, delta, outer_radius);
}

SolveOptions ScenarioConfig::solve_options() const {
    SolveOptions o;
    o.rel_tol = rel_tol;
    o.max_iter = max_iter;
    o.threads = threads;
    return o;
}

ScenarioConfig parse_config(const std::string& text) {
    YAML::Node root;
    try {
        root = YAML::Load(text);
    } catch (const YAML::Exception& e) {
        throw ConfigError(fmt::format("config: YAML parse error: {}", e.what()));
    }
    if (!root.IsMap()) throw ConfigError("config: top level must be a mapping");
    if (!root["schema"] || root["schema"].as<std::string>() != kSchema)
        throw ConfigError(fmt::format("config: missing or unsupported schema (expected '{}')", kSchema));
    check_keys(root, "", {"schema", "norm", "inclusions", "phi", "mesh", "solver", "neck", "fit", "R0", "output"});

    ScenarioConfig c;
    const auto n = root["norm"];
    check_keys(n, "norm", {"family", "dim", "matrix", "beta", "k"});
    if (n) {
        c.norm.family = get<std::string>(n, "family", c.norm.family, "norm");
        c.norm.dim = get<int>(n, "dim", c.norm.dim, "norm");
        c.norm.matrix = get<std::vector<double>>(n, "matrix", {}, "norm");
        c.norm.beta = get<double>(n, "beta", 0.0, "norm");
        c.norm.k = get<int>(n, "k", 2, "norm");
    }
    const int N = c.norm.dim;

    const auto inc = root["inclusions"];
    if (!inc) throw ConfigError("config: missing inclusions block");
    check_keys(inc, "inclusions", {"R1", "R2", "outer_radius", "delta", "delta_range"});
    c.R1 = get<double>(inc, "R1", 1.0, "inclusions");
    c.R2 = get<double>(inc, "R2", 1.0, "inclusions");
    c.outer_radius = get<double>(inc, "outer_radius", 0.0, "inclusions");
    if (!(c.R1 > 0.0 && c.R2 > 0.0)) throw ConfigError("config: inclusions.R1 and R2 must be positive");
    if (inc["delta"] && inc["delta_range"]) throw ConfigError("config: give inclusions.delta or delta_range, not both");
    if (inc["delta"]) {
        c.deltas = inc["delta"].IsSequence() ? get<std::vector<double>>(inc, "delta", {}, "inclusions")
                                             : std::vector<double>{get<double>(inc, "delta", 0.0, "inclusions")};
    } else if (inc["delta_range"]) {
        const auto r = inc["delta_range"];
        check_keys(r, "inclusions.delta_range", {"max", "min", "count"});
        const double hi = get<double>(r, "max", 0.0, "inclusions.delta_range");
        const double lo = get<double>(r, "min", 0.0, "inclusions.delta_range");
        const int cnt = get<int>(r, "count", 0, "inclusions.delta_range");
        if (!(hi > lo && lo > 0.0 && cnt >= 2)) throw ConfigError("config: delta_range needs max > min > 0 and count >= 2");
        for (int i = 0; i < cnt; ++i) c.deltas.push_back(hi * std::pow(lo / hi, static_cast<double>(i) / (cnt - 1)));
    }
    if (c.deltas.empty()) throw ConfigError("config: inclusions.delta is required");
    for (std::size_t i = 0; i < c.deltas.size(); ++i) {
        if (!(c.deltas[i] > 0.0)) throw ConfigError("config: delta values must be positive");
        if (i && !(c.deltas[i] < c.deltas[i - 1])) throw ConfigError("config: delta values must be strictly decreasing");
    }

    const auto phi = root["phi"];
    check_keys(phi, "phi", {"a", "b"});
    c.phi.a = Vec::Zero(N);
    c.phi.a(N - 1) = 1.0;
    if (phi) {
        if (phi["a"]) {
            const auto a = get<std::vector<double>>(phi, "a", {}, "phi");
            if (static_cast<int>(a.size()) != N) throw ConfigError(fmt::format("config: phi.a needs {} entries", N));
            c.phi.a = Eigen::Map<const Vec>(a.data(), N);
        }
        c.phi.b = get<double>(phi, "b", 0.0, "phi");
    }

    const auto m = root["mesh"];
    check_keys(m, "mesh", {"h_max", "h_min", "theta", "k_gap", "sectors", "max_elements", "jitter", "seed"});
    if (m) {
        c.mesh.h_max = get<double>(m, "h_max", c.mesh.h_max, "mesh");
        c.mesh.h_min = get<double>(m, "h_min", c.mesh.h_min, "mesh");
        c.mesh.theta = get<double>(m, "theta", c.mesh.theta, "mesh");
        c.mesh.k_gap = get<int>(m, "k_gap", c.mesh.k_gap, "mesh");
        c.mesh.sectors = get<int>(m, "sectors", c.mesh.sectors, "mesh");
        c.mesh.max_elements = get<long>(m, "max_elements", c.mesh.max_elements, "mesh");
        c.mesh.jitter = get<double>(m, "jitter", c.mesh.jitter, "mesh");
        c.mesh.seed = get<unsigned>(m, "seed", c.mesh.seed, "mesh");
    }
    if (!(c.mesh.h_max > 0.0 && c.mesh.theta > 0.0 && c.mesh.k_gap >= 1 && c.mesh.h_min >= 0.0))
        throw ConfigError("config: mesh needs h_max > 0, theta > 0, k_gap >= 1, h_min >= 0");

    const auto s = root["solver"];
    check_keys(s, "solver", {"rel_tol", "max_iter", "threads"});
    if (s) {
        c.rel_tol = get<double>(s, "rel_tol", c.rel_tol, "solver");
        c.max_iter = get<int>(s, "max_iter", c.max_iter, "solver");
        c.threads = get<int>(s, "threads", c.threads, "solver");
    }
    if (!(c.rel_tol > 0.0 && c.max_iter > 0)) throw ConfigError("config: solver needs rel_tol > 0 and max_iter > 0");

    const auto neck = root["neck"];
    check_keys(neck, "neck", {"w", "r"});
    c.neck_r = c.R1;
    if (neck) {
        if (neck["w"]) {
            const auto w = neck["w"].as<std::string>();
            if (w == "sqrt") {
                c.w_sqrt = true;
            } else {
                c.w_sqrt = false;
                c.w_fixed = get<double>(neck, "w", 0.0, "neck");
                if (!(c.w_fixed > 0.0)) throw ConfigError("config: neck.w must be 'sqrt' or a positive number");
            }
        }
        c.neck_r = get<double>(neck, "r", c.neck_r, "neck");
    }

    const auto fit = root["fit"];
    check_keys(fit, "fit", {"tau"});
    if (fit) c.tau = get<double>(fit, "tau", c.tau, "fit");
    if (!(c.tau > 0.0 && c.tau <= 0.5)) throw ConfigError("config: fit.tau must lie in (0, 1/2]");

    const auto r0 = root["R0"];
    check_keys(r0, "R0", {"value", "delta_ref"});
    if (r0) {
        if (r0["value"]) c.R0 = get<double>(r0, "value", 0.0, "R0");
        c.delta_ref = get<double>(r0, "delta_ref", 0.0, "R0");
    }

    const auto out = root["output"];
    check_keys(out, "output", {"dir"});
    if (out) c.output_dir = get<std::string>(out, "dir", c.output_dir, "output");

    c.norm.build();
    try {
        c.wulff(c.deltas.front());
    } catch (const Error& e) {
        throw ConfigError(fmt::format("config: inclusions: {}", e.what()));
    }
    return c;
}

ScenarioConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError(fmt::format("config: cannot read '{}'", path));
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

std::string canonical_yaml(const ScenarioConfig& c) {
    std::string s;
    s += fmt::format("schema: {}\n", kSchema);
    s += fmt::format("norm:\n  family: {}\n  dim: {}\n  matrix: {}\n  beta: {}\n  k: {}\n", c.norm.family, c.norm.dim,
                     list(c.norm.matrix), num(c.norm.beta), c.norm.k);
    s += fmt::format("inclusions:\n  R1: {}\n  R2: {}\n  outer_radius: {}\n  delta: {}\n", num(c.R1), num(c.R2),
                     num(c.outer_radius), list(c.deltas));
    s += fmt::format("phi:\n  a: {}\n  b: {}\n", list(vec_of(c.phi.a)), num(c.phi.b));
    s += fmt::format("mesh:\n  h_max: {}\n  h_min: {}\n  theta: {}\n  k_gap: {}\n  sectors: {}\n  max_elements: {}\n"
                     "  jitter: {}\n  seed: {}\n",
                     num(c.mesh.h_max), num(c.mesh.h_min), num(c.mesh.theta), c.mesh.k_gap, c.mesh.sectors,
                     c.mesh.max_elements, num(c.mesh.jitter), c.mesh.seed);
    s += fmt::format("solver:\n  rel_tol: {}\n  max_iter: {}\n", num(c.rel_tol), c.max_iter);
    s += fmt::format("neck:\n  w: {}\n  r: {}\n", c.w_sqrt ? std::string("sqrt") : num(c.w_fixed), num(c.neck_r));
    s += fmt::format("fit:\n  tau: {}\n", num(c.tau));
    s += "R0:\n";
    if (c.R0) s += fmt::format("  value: {}\n", num(*c.R0));
    s += fmt::format("  delta_ref: {}\n", num(c.delta_ref));
    return s;
}

std::string sha256_hex(const std::string& data) {
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr);
    std::string hex;
    for (unsigned i = 0; i < len; ++i) hex += fmt::format("{:02x}", md[i]);
    return hex;
}

std::string config_hash(const ScenarioConfig& cfg) { return sha256_hex(canonical_yaml(cfg)); }

} // namespace fgap
