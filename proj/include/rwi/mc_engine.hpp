#pragma once

// Tail probability estimators for P(J_n >= c * t_tau).
//
// Naive: a replica farm; replica r draws pair seed derive_seed(seed_root, r),
// so the estimate is a pure function of (law, n, c, replicas, seed_root) and
// identical for any worker count.
//
// Splitting: adaptive multilevel splitting on the running intersection count
// at geometric step checkpoints. Replicas carry only their stream lineage
// (base seed + forks); every stage replays them from step 0, which keeps
// memory flat and, because the checkpoints are geometric, costs only about
// twice the single-pass work. Survivor selection keeps the top `level`
// quantile by current J (ties broken by replica index), clones re-seed from
// the branch point, and the product of stage fractions times the final
// success fraction is the per-run estimate. The reported estimate is the mean
// over independent runs with a percentile-bootstrap interval.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "rwi/errors.hpp"
#include "rwi/parallel.hpp"
#include "rwi/stats.hpp"
#include "rwi/walk.hpp"

namespace rwi {

enum class TailMethod { naive, splitting };

struct TailFlags {
    bool resolution_floor = false;  // zero successes; p_hat = 0 is a floor, not a value
    bool partial = false;           // splitting hit max_stages before the final checkpoint
};

struct TailEstimate {
    double c = 0.0;
    std::uint64_t n = 0;
    double p_hat = 0.0;
    double ci_low = 0.0;
    double ci_high = 0.0;
    std::uint64_t replicas = 0;
    TailMethod method = TailMethod::naive;
    std::uint64_t seed_root = 0;
    TailFlags flags;
};

inline const char* tail_method_name(TailMethod m) {
    return m == TailMethod::naive ? "naive" : "splitting";
}

// ---------------------------------------------------------------------------
// Naive estimator
// ---------------------------------------------------------------------------

inline TailEstimate estimate_tail_naive(const IncrementLaw& law, std::uint64_t n, double c,
                                        std::uint64_t replicas, std::uint64_t seed_root,
                                        unsigned workers = 0) {
    if (replicas < 100)
        throw std::invalid_argument("estimate_tail_naive: need at least 100 replicas");
    if (c < 0.0) throw std::invalid_argument("estimate_tail_naive: c must be >= 0");
    const Scales sc = scales_for(n);
    const double threshold = c * sc.t_tau;

    if (workers == 0) workers = default_workers();
    std::vector<std::uint64_t> success_per_worker(workers, 0);
    std::vector<PairScratch> scratch(workers);
    parallel_for(replicas, workers, [&](std::uint64_t r, unsigned w) {
        const std::uint64_t j =
            pair_intersections_upto(law, derive_seed(seed_root, r), {}, n, scratch[w]);
        if (static_cast<double>(j) >= threshold) ++success_per_worker[w];
    });
    const std::uint64_t successes =
        std::accumulate(success_per_worker.begin(), success_per_worker.end(), std::uint64_t{0});

    TailEstimate est;
    est.c = c;
    est.n = n;
    est.replicas = replicas;
    est.method = TailMethod::naive;
    est.seed_root = seed_root;
    est.p_hat = static_cast<double>(successes) / static_cast<double>(replicas);
    if (successes == 0) {
        est.ci_low = 0.0;
        est.ci_high = wilson_upper_zero(replicas);
        est.flags.resolution_floor = true;
    } else {
        const Interval ci = wilson_interval(successes, replicas);
        est.ci_low = ci.low;
        est.ci_high = ci.high;
    }
    return est;
}

// ---------------------------------------------------------------------------
// Multilevel splitting
// ---------------------------------------------------------------------------

struct SplittingConfig {
    double level = 0.1;                        // survivor quantile kept per stage
    std::uint32_t max_stages = 64;             // cap on selection stages
    std::uint32_t replicas_per_stage = 512;
    std::uint32_t independent_runs = 8;        // bootstrap sample size
    std::vector<std::uint64_t> checkpoint_times;  // strictly increasing, last = n

    // Geometric checkpoints n * 2^(k - K), k = 1..K, first one >= min_first.
    static std::vector<std::uint64_t> geometric_checkpoints(std::uint64_t n,
                                                            std::uint64_t min_first = 512) {
        std::vector<std::uint64_t> cps;
        std::uint64_t t = n;
        while (t > min_first && cps.size() < 63) {
            cps.push_back(t);
            t /= 2;
        }
        cps.push_back(t);
        std::sort(cps.begin(), cps.end());
        cps.erase(std::unique(cps.begin(), cps.end()), cps.end());
        return cps;
    }

    void validate(std::uint64_t n) const {
        if (!(level > 0.0 && level < 1.0))
            throw std::invalid_argument("SplittingConfig: level must lie in (0, 1)");
        if (replicas_per_stage < 2)
            throw std::invalid_argument("SplittingConfig: degenerate stage (single replica)");
        if (independent_runs < 1)
            throw std::invalid_argument("SplittingConfig: need at least one run");
        if (max_stages < 1) throw std::invalid_argument("SplittingConfig: max_stages must be >= 1");
        if (!checkpoint_times.empty()) {
            for (std::size_t i = 0; i + 1 < checkpoint_times.size(); ++i)
                if (checkpoint_times[i] >= checkpoint_times[i + 1])
                    throw std::invalid_argument(
                        "SplittingConfig: checkpoint_times must be strictly increasing");
            if (checkpoint_times.back() != n)
                throw std::invalid_argument("SplittingConfig: final checkpoint must equal n");
        }
    }
};

namespace detail {

struct Lineage {
    std::uint64_t base_seed = 0;
    std::vector<StreamFork> forks;
};

// One independent splitting run; returns its probability estimate.
inline double splitting_run(const IncrementLaw& law, std::uint64_t n, double threshold,
                            const SplittingConfig& cfg,
                            std::span<const std::uint64_t> checkpoints, std::uint64_t run_seed,
                            unsigned workers, std::vector<PairScratch>& scratch, bool& partial) {
    const std::uint32_t R = cfg.replicas_per_stage;
    std::vector<Lineage> reps(R);
    for (std::uint32_t i = 0; i < R; ++i) reps[i].base_seed = derive_seed(run_seed, i);

    const auto m = std::max<std::uint32_t>(
        1, static_cast<std::uint32_t>(std::ceil(cfg.level * static_cast<double>(R))));
    double log_factor = 0.0;
    bool selecting = true;
    std::uint32_t stages_used = 0;
    std::vector<std::uint64_t> j_vals(R);

    for (std::size_t k = 0; k < checkpoints.size(); ++k) {
        const std::uint64_t t_k = checkpoints[k];
        parallel_for(R, workers, [&](std::uint64_t i, unsigned w) {
            j_vals[i] = pair_intersections_upto(law, reps[i].base_seed, reps[i].forks, t_k,
                                                scratch[w]);
        });

        if (k + 1 == checkpoints.size()) {
            std::uint64_t successes = 0;
            for (std::uint64_t j : j_vals)
                if (static_cast<double>(j) >= threshold) ++successes;
            return std::exp(log_factor) * static_cast<double>(successes) /
                   static_cast<double>(R);
        }
        if (!selecting) continue;

        std::vector<std::uint32_t> order(R);
        std::iota(order.begin(), order.end(), 0);
        std::sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) {
            if (j_vals[a] != j_vals[b]) return j_vals[a] > j_vals[b];
            return a < b;
        });
        const std::uint64_t level_j = j_vals[order[m - 1]];
        if (static_cast<double>(level_j) >= threshold) {
            // The event is no longer rare in the population; stop selecting.
            selecting = false;
            continue;
        }
        if (j_vals[order[0]] == j_vals[order[R - 1]])
            throw NumericalError(
                "estimate_tail_splitting: degenerate stage at step " + std::to_string(t_k) +
                " (all replicas share J = " + std::to_string(level_j) + ")");
        if (stages_used == cfg.max_stages) {
            partial = true;
            selecting = false;
            continue;
        }

        log_factor += std::log(static_cast<double>(m) / static_cast<double>(R));
        std::vector<Lineage> next(R);
        for (std::uint32_t s = 0; s < m; ++s) next[s] = reps[order[s]];
        for (std::uint32_t s = m; s < R; ++s) {
            next[s] = next[s % m];  // clone a survivor round-robin
            next[s].forks.push_back(
                StreamFork{t_k, derive_seed(run_seed, 0xb2a2u + stages_used, s)});
        }
        reps = std::move(next);
        ++stages_used;
    }
    return 0.0;  // unreachable: final checkpoint always returns
}

}  // namespace detail

inline TailEstimate estimate_tail_splitting(const IncrementLaw& law, std::uint64_t n, double c,
                                            const SplittingConfig& cfg, std::uint64_t seed_root,
                                            unsigned workers = 0) {
    if (c < 0.0) throw std::invalid_argument("estimate_tail_splitting: c must be >= 0");
    cfg.validate(n);
    const Scales sc = scales_for(n);
    const double threshold = c * sc.t_tau;
    std::vector<std::uint64_t> checkpoints = cfg.checkpoint_times;
    if (checkpoints.empty()) checkpoints = SplittingConfig::geometric_checkpoints(n);

    if (workers == 0) workers = default_workers();
    std::vector<PairScratch> scratch(workers);

    bool partial = false;
    std::vector<double> run_estimates(cfg.independent_runs);
    for (std::uint32_t r = 0; r < cfg.independent_runs; ++r) {
        const std::uint64_t run_seed = derive_seed(seed_root, 0x5350u, r);
        run_estimates[r] = detail::splitting_run(law, n, threshold, cfg, checkpoints, run_seed,
                                                 workers, scratch, partial);
    }

    TailEstimate est;
    est.c = c;
    est.n = n;
    est.replicas = static_cast<std::uint64_t>(cfg.replicas_per_stage) * cfg.independent_runs;
    est.method = TailMethod::splitting;
    est.seed_root = seed_root;
    est.flags.partial = partial;
    est.p_hat = std::accumulate(run_estimates.begin(), run_estimates.end(), 0.0) /
                static_cast<double>(run_estimates.size());
    if (est.p_hat == 0.0) {
        est.flags.resolution_floor = true;
        est.ci_low = 0.0;
        // Resolution floor of the scheme: all runs returned 0, so p is below
        // roughly level^stages / R at this configuration.
        est.ci_high = std::min(1.0, std::pow(cfg.level, static_cast<double>(cfg.max_stages)) *
                                        wilson_upper_zero(cfg.replicas_per_stage));
    } else {
        const Interval ci =
            bootstrap_mean_interval(run_estimates, derive_seed(seed_root, 0xb001u));
        est.ci_low = std::max(0.0, ci.low);
        est.ci_high = std::min(1.0, ci.high);
    }
    return est;
}

// ---------------------------------------------------------------------------
// Trend regression: -log p_hat against tau
// ---------------------------------------------------------------------------

struct TrendPoint {
    std::uint64_t n = 0;
    double tau = 0.0;
    double p_hat = 0.0;
    double minus_log_p_over_tau = 0.0;
    bool used = false;
};

struct TrendReport {
    double slope = 0.0;
    double slope_ci_low = 0.0;
    double slope_ci_high = 0.0;
    double intercept = 0.0;
    std::vector<TrendPoint> points;
    std::vector<std::string> notes;
};

// Weighted least-squares slope of -log p_hat vs tau. Per-point variances come
// from the reported intervals (interpreted on the log scale); zero estimates
// are excluded and noted.
inline TrendReport rate_trend(std::span<const TailEstimate> estimates) {
    TrendReport report;
    std::vector<double> xs, ys, ws;
    for (const TailEstimate& e : estimates) {
        TrendPoint pt;
        pt.n = e.n;
        pt.tau = scales_for(e.n).tau;
        pt.p_hat = e.p_hat;
        if (e.p_hat > 0.0) {
            pt.used = true;
            pt.minus_log_p_over_tau = -std::log(e.p_hat) / pt.tau;
            double sigma;
            if (e.ci_low > 0.0 && e.ci_high > e.ci_low)
                sigma = (std::log(e.ci_high) - std::log(e.ci_low)) / (2.0 * kZTwoSided95);
            else if (e.ci_high > e.p_hat)
                sigma = (std::log(e.ci_high) - std::log(e.p_hat)) / kZTwoSided95;
            else
                sigma = 1e-12;
            sigma = std::max(sigma, 1e-12);
            xs.push_back(pt.tau);
            ys.push_back(-std::log(e.p_hat));
            ws.push_back(1.0 / (sigma * sigma));
        } else {
            report.notes.push_back("excluded n=" + std::to_string(e.n) +
                                   ": zero estimate (resolution floor)");
        }
        report.points.push_back(pt);
    }
    if (xs.size() < 3)
        throw std::invalid_argument("rate_trend: need at least 3 estimates with p_hat > 0");
    const WlsFit fit = weighted_least_squares(xs, ys, ws);
    report.slope = fit.slope;
    report.intercept = fit.intercept;
    const double half = kZTwoSided95 * std::sqrt(fit.slope_var);
    report.slope_ci_low = fit.slope - half;
    report.slope_ci_high = fit.slope + half;
    return report;
}

}  // namespace rwi
