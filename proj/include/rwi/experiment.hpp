#pragma once

// Experiment orchestration. Units of work (one tail estimate, one rate solve,
// one diagnostics pass) execute sequentially; each unit parallelizes its own
// replica farm across the worker pool, and the single writer appends one
// record per completed unit. Re-runs skip units already persisted under the
// same (config hash, unit key) unless forced.

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "rwi/config.hpp"
#include "rwi/diagnostics.hpp"
#include "rwi/errors.hpp"
#include "rwi/mc_engine.hpp"
#include "rwi/persist.hpp"
#include "rwi/rate_solver.hpp"
#include "rwi/report.hpp"

namespace rwi {

struct RunOverrides {
    unsigned workers = 0;  // 0 = hardware
    bool force = false;
    std::optional<std::uint64_t> seed_root;
};

struct RunSummary {
    int completed = 0;
    int skipped = 0;
    int failed = 0;
    int numerical_failures = 0;
    std::vector<std::string> failures;

    int exit_code() const {
        if (failed == 0) return 0;
        return failed == numerical_failures ? 3 : 2;
    }
};

namespace experiment_detail {

inline std::uint64_t unit_seed(std::uint64_t seed_root, const std::string& unit_key) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char ch : unit_key) {
        h ^= ch;
        h *= 0x100000001b3ull;
    }
    return derive_seed(seed_root, h);
}

struct Unit {
    std::string key;
    std::function<nlohmann::json()> run;
};

inline nlohmann::json tail_payload(const TailEstimate& est) {
    return {{"type", "tail"},
            {"c", est.c},
            {"n", est.n},
            {"p_hat", est.p_hat},
            {"ci_low", est.ci_low},
            {"ci_high", est.ci_high},
            {"replicas", est.replicas},
            {"method", tail_method_name(est.method)},
            {"seed_root", est.seed_root},
            {"resolution_floor", est.flags.resolution_floor},
            {"partial", est.flags.partial}};
}

inline nlohmann::json rate_payload(const RateResult& r) {
    nlohmann::json history = nlohmann::json::array();
    for (const auto& [h, v] : r.grid_history) history.push_back({{"h", h}, {"value", v}});
    return {{"type", "rate"},
            {"c", r.c},
            {"value", r.value},
            {"status", solve_status_name(r.status)},
            {"kkt_residual", r.kkt_residual},
            {"measured_constraint_sup", r.measured_constraint_sup},
            {"cross_check_value", r.cross_check_value},
            {"grid_history", history},
            {"notes", r.notes}};
}

}  // namespace experiment_detail

inline RunSummary run_experiment(const ExperimentConfig& config_in,
                                 const RunOverrides& overrides = {}) {
    ExperimentConfig config = config_in;
    if (overrides.seed_root) config.seed_root = *overrides.seed_root;
    const IncrementLaw& law = IncrementLaw::by_name(config.law);
    const std::string hash = config.config_hash();
    const unsigned workers = overrides.workers;

    std::vector<experiment_detail::Unit> units;
    auto add_tail_unit = [&](std::uint64_t n, double c) {
        std::string key = "tail n=" + std::to_string(n) + " c=" + format_g17(c);
        const std::uint64_t seed = experiment_detail::unit_seed(config.seed_root, key);
        units.push_back({key, [&, n, c, seed]() {
                             TailEstimate est;
                             if (config.method == "splitting") {
                                 SplittingConfig scfg = config.splitting;
                                 if (scfg.checkpoint_times.empty())
                                     scfg.checkpoint_times =
                                         SplittingConfig::geometric_checkpoints(n);
                                 est = estimate_tail_splitting(law, n, c, scfg, seed, workers);
                             } else {
                                 est = estimate_tail_naive(law, n, c, config.replicas, seed,
                                                           workers);
                             }
                             return experiment_detail::tail_payload(est);
                         }});
    };
    auto add_rate_unit = [&](double c) {
        std::string key = "rate c=" + format_g17(c);
        units.push_back({key, [&, c]() {
                             const SolveOptions opt =
                                 config.solver.to_options(law.clt_prefactor_scale());
                             const RateResult r = config.solver.domain == "torus"
                                                      ? solve_rate_torus(config.solver.torus_side,
                                                                         c, opt)
                                                      : solve_rate_plane(c, opt);
                             return experiment_detail::rate_payload(r);
                         }});
    };
    auto add_diag_unit = [&](std::uint64_t n) {
        std::string key = "diag n=" + std::to_string(n);
        const std::uint64_t seed = experiment_detail::unit_seed(config.seed_root, key);
        units.push_back({key, [&, n, seed]() {
                             const Scales sc = scales_for(n);
                             const Path p1 = simulate_path(law, n, derive_seed(seed, 1));
                             const Path p2 = simulate_path(law, n, derive_seed(seed, 2));
                             const CrossingStat c1 =
                                 crossing_count(p1, config.diagnostics.eta, sc);
                             const CrossingStat c2 =
                                 crossing_count(p2, config.diagnostics.eta, sc);
                             const std::array<Path, 2> paths{p1, p2};
                             const bool confined = confinement_check(
                                 std::span<const Path>(paths.data(), paths.size()), sc);
                             const RangeSet r1 = range_of_path(p1, 1);
                             const RangeSet r2 = range_of_path(p2, 2);
                             const BoxOccupancy occ =
                                 box_occupancy(r1, r2, config.diagnostics.box_side,
                                               config.diagnostics.epsilon, sc);
                             const std::uint64_t j_n = intersection_count(r1, r2);
                             return nlohmann::json{
                                 {"type", "diagnostic"},
                                 {"n", n},
                                 {"j_n", j_n},
                                 {"eta", c1.eta},
                                 {"crossings_per_direction",
                                  {c1.count_per_direction[0] + c2.count_per_direction[0],
                                   c1.count_per_direction[1] + c2.count_per_direction[1]}},
                                 {"crossings_total", c1.total + c2.total},
                                 {"confined", confined},
                                 {"boxes_touched", occ.per_box.size()},
                                 {"heavy_boxes", occ.heavy_boxes.size()}};
                         }});
    };

    switch (config.kind) {
        case ExperimentKind::tail_scan:
            for (std::uint64_t n : config.n_grid)
                for (double c : config.c_grid) add_tail_unit(n, c);
            break;
        case ExperimentKind::rate_solve:
            for (double c : config.c_grid) add_rate_unit(c);
            break;
        case ExperimentKind::diagnostics:
            for (std::uint64_t n : config.n_grid) add_diag_unit(n);
            break;
        case ExperimentKind::trend_compare:
            for (double c : config.c_grid) add_rate_unit(c);
            for (std::uint64_t n : config.n_grid)
                for (double c : config.c_grid) add_tail_unit(n, c);
            break;
    }

    RecordStore store(config.output_dir);
    const auto done = overrides.force ? std::set<std::pair<std::string, std::string>>{}
                                      : store.completed_units();

    RunSummary summary;
    for (const auto& unit : units) {
        if (done.count({hash, unit.key})) {
            ++summary.skipped;
            continue;
        }
        try {
            ResultRecord record;
            record.config_hash = hash;
            record.timestamp = iso8601_utc_now();
            record.unit = unit.key;
            record.kind = experiment_kind_name(config.kind);
            record.payload = unit.run();
            store.append(record);
            ++summary.completed;
        } catch (const NumericalError& e) {
            ++summary.failed;
            ++summary.numerical_failures;
            summary.failures.push_back(unit.key + ": " + e.what());
        } catch (const std::exception& e) {
            ++summary.failed;
            summary.failures.push_back(unit.key + ": " + e.what());
        }
    }
    return summary;
}

}  // namespace rwi
