#pragma once

// Experiment configuration: a single JSON file with nested tables. Parsing
// collects every field-level problem before failing; hashing runs over the
// canonical serialization (all defaults materialized, keys sorted, numbers as
// typed), so the hash is stable under key reordering of the input file.

#include <cstdint>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "rwi/mc_engine.hpp"
#include "rwi/rate_solver.hpp"

namespace rwi {

class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(std::vector<std::string> problems)
        : std::runtime_error(join(problems)), problems_(std::move(problems)) {}
    const std::vector<std::string>& problems() const { return problems_; }

private:
    static std::string join(const std::vector<std::string>& ps) {
        std::string out = "invalid config:";
        for (const auto& p : ps) out += "\n  " + p;
        return out;
    }
    std::vector<std::string> problems_;
};

enum class ExperimentKind { tail_scan, rate_solve, diagnostics, trend_compare };

inline const char* experiment_kind_name(ExperimentKind k) {
    switch (k) {
        case ExperimentKind::tail_scan: return "tail-scan";
        case ExperimentKind::rate_solve: return "rate-solve";
        case ExperimentKind::diagnostics: return "diagnostics";
        default: return "trend-compare";
    }
}

inline ExperimentKind experiment_kind_from(const std::string& s) {
    if (s == "tail-scan") return ExperimentKind::tail_scan;
    if (s == "rate-solve") return ExperimentKind::rate_solve;
    if (s == "diagnostics") return ExperimentKind::diagnostics;
    if (s == "trend-compare") return ExperimentKind::trend_compare;
    throw std::invalid_argument("unknown experiment kind: " + s);
}

struct SolverConfig {
    std::string domain = "plane";  // "plane" or "torus"
    double torus_side = 8.0;
    std::vector<int> grid_ladder = {32, 64};
    int radial_points = 256;
    double radial_extent = 16.0;
    std::vector<double> plane_torus_sides = {8.0, 12.0, 16.0, 24.0, 32.0};

    SolveOptions to_options(double exponent_scale) const {
        SolveOptions opt;
        opt.grid_ladder = grid_ladder;
        opt.radial_points = radial_points;
        opt.radial_extent = radial_extent;
        opt.plane_torus_sides = plane_torus_sides;
        opt.exponent_scale = exponent_scale;
        return opt;
    }
};

struct DiagnosticsConfig {
    double eta = 1.0;
    double box_side = 4.0;
    double epsilon = 0.05;
};

struct ExperimentConfig {
    ExperimentKind kind = ExperimentKind::tail_scan;
    std::string law = "diagonal";
    std::vector<std::uint64_t> n_grid;
    std::vector<double> c_grid;
    std::uint64_t replicas = 10000;
    std::string method = "naive";  // tail estimator: "naive" or "splitting"
    SplittingConfig splitting;
    SolverConfig solver;
    DiagnosticsConfig diagnostics;
    std::uint64_t seed_root = 0;
    std::string output_dir;

    static ExperimentConfig from_json(const nlohmann::json& j);
    static ExperimentConfig load(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw ConfigError({"config file not readable: " + path});
        nlohmann::json j;
        try {
            in >> j;
        } catch (const std::exception& e) {
            throw ConfigError({std::string("config parse error: ") + e.what()});
        }
        return from_json(j);
    }

    nlohmann::json canonical_json() const {
        nlohmann::json j;
        j["kind"] = experiment_kind_name(kind);
        j["law"] = law;
        j["n_grid"] = n_grid;
        j["c_grid"] = c_grid;
        j["replicas"] = replicas;
        j["method"] = method;
        j["splitting"] = {{"level", splitting.level},
                          {"max_stages", splitting.max_stages},
                          {"replicas_per_stage", splitting.replicas_per_stage},
                          {"independent_runs", splitting.independent_runs},
                          {"checkpoints", splitting.checkpoint_times}};
        j["solver"] = {{"domain", solver.domain},
                       {"torus_side", solver.torus_side},
                       {"grid_ladder", solver.grid_ladder},
                       {"radial_points", solver.radial_points},
                       {"radial_extent", solver.radial_extent},
                       {"plane_torus_sides", solver.plane_torus_sides}};
        j["diagnostics"] = {{"eta", diagnostics.eta},
                            {"box_side", diagnostics.box_side},
                            {"epsilon", diagnostics.epsilon}};
        j["seed_root"] = seed_root;
        j["output_dir"] = output_dir;
        return j;
    }

    // FNV-1a 64 over the canonical serialization, as a fixed-width hex tag.
    std::string config_hash() const {
        const std::string dump = canonical_json().dump();
        std::uint64_t h = 0xcbf29ce484222325ull;
        for (unsigned char ch : dump) {
            h ^= ch;
            h *= 0x100000001b3ull;
        }
        char buf[17];
        std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
        return std::string(buf);
    }
};

namespace detail {

template <class T>
bool read_field(const nlohmann::json& j, const char* key, T& out,
                std::vector<std::string>& problems) {
    if (!j.contains(key)) return false;
    try {
        out = j.at(key).get<T>();
        return true;
    } catch (const std::exception&) {
        problems.push_back(std::string(key) + ": wrong type");
        return false;
    }
}

}  // namespace detail

inline ExperimentConfig ExperimentConfig::from_json(const nlohmann::json& j) {
    std::vector<std::string> problems;
    ExperimentConfig cfg;

    std::string kind_str;
    if (detail::read_field(j, "kind", kind_str, problems)) {
        try {
            cfg.kind = experiment_kind_from(kind_str);
        } catch (const std::exception& e) {
            problems.push_back(std::string("kind: ") + e.what());
        }
    } else if (problems.empty()) {
        problems.push_back("kind: missing (tail-scan | rate-solve | diagnostics | trend-compare)");
    }

    detail::read_field(j, "law", cfg.law, problems);
    try {
        IncrementLaw::by_name(cfg.law);
    } catch (const std::exception& e) {
        problems.push_back(std::string("law: ") + e.what());
    }

    detail::read_field(j, "n_grid", cfg.n_grid, problems);
    detail::read_field(j, "c_grid", cfg.c_grid, problems);
    detail::read_field(j, "replicas", cfg.replicas, problems);
    detail::read_field(j, "method", cfg.method, problems);
    if (cfg.method != "naive" && cfg.method != "splitting")
        problems.push_back("method: must be \"naive\" or \"splitting\"");

    if (j.contains("splitting")) {
        const auto& s = j.at("splitting");
        detail::read_field(s, "level", cfg.splitting.level, problems);
        detail::read_field(s, "max_stages", cfg.splitting.max_stages, problems);
        detail::read_field(s, "replicas_per_stage", cfg.splitting.replicas_per_stage, problems);
        detail::read_field(s, "independent_runs", cfg.splitting.independent_runs, problems);
        detail::read_field(s, "checkpoints", cfg.splitting.checkpoint_times, problems);
    }
    if (j.contains("solver")) {
        const auto& s = j.at("solver");
        detail::read_field(s, "domain", cfg.solver.domain, problems);
        detail::read_field(s, "torus_side", cfg.solver.torus_side, problems);
        detail::read_field(s, "grid_ladder", cfg.solver.grid_ladder, problems);
        detail::read_field(s, "radial_points", cfg.solver.radial_points, problems);
        detail::read_field(s, "radial_extent", cfg.solver.radial_extent, problems);
        detail::read_field(s, "plane_torus_sides", cfg.solver.plane_torus_sides, problems);
        if (cfg.solver.domain != "plane" && cfg.solver.domain != "torus")
            problems.push_back("solver.domain: must be \"plane\" or \"torus\"");
    }
    if (j.contains("diagnostics")) {
        const auto& d = j.at("diagnostics");
        detail::read_field(d, "eta", cfg.diagnostics.eta, problems);
        detail::read_field(d, "box_side", cfg.diagnostics.box_side, problems);
        detail::read_field(d, "epsilon", cfg.diagnostics.epsilon, problems);
    }

    if (!j.contains("seed_root"))
        problems.push_back("seed_root: missing (wall-clock seeding is not supported)");
    else
        detail::read_field(j, "seed_root", cfg.seed_root, problems);

    if (!detail::read_field(j, "output_dir", cfg.output_dir, problems) || cfg.output_dir.empty())
        problems.push_back("output_dir: missing or empty");

    const bool needs_n = cfg.kind == ExperimentKind::tail_scan ||
                         cfg.kind == ExperimentKind::diagnostics ||
                         cfg.kind == ExperimentKind::trend_compare;
    const bool needs_c = cfg.kind == ExperimentKind::tail_scan ||
                         cfg.kind == ExperimentKind::rate_solve ||
                         cfg.kind == ExperimentKind::trend_compare;
    if (needs_n && cfg.n_grid.empty()) problems.push_back("n_grid: must be non-empty");
    if (needs_c && cfg.c_grid.empty()) problems.push_back("c_grid: must be non-empty");
    for (std::uint64_t n : cfg.n_grid)
        if (n < 2) {
            problems.push_back("n_grid: entries must be >= 2");
            break;
        }
    for (double c : cfg.c_grid)
        if (c < 0.0) {
            problems.push_back("c_grid: entries must be >= 0");
            break;
        }

    if (!problems.empty()) throw ConfigError(std::move(problems));
    return cfg;
}

}  // namespace rwi
