#pragma once

// Walk generation, range bookkeeping and intersection counting. Ranges index
// from step 1: the origin enters a range only when revisited. Walk pairs are
// driven by disjoint substreams derive_seed(pair_seed, 1) and
// derive_seed(pair_seed, 2), so any re-implementation given the same pair
// seed reproduces the trajectories bit for bit.

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "rwi/increment_law.hpp"
#include "rwi/lattice.hpp"
#include "rwi/rng.hpp"
#include "rwi/scales.hpp"

namespace rwi {

struct RangeSet {
    PointSet sites;
    int walk_id = 0;
    std::uint64_t steps_consumed = 0;
    std::int64_t lattice_period = 0;  // 0 = plane, otherwise torus period in lattice units
};

struct IntersectionStat {
    std::uint64_t j_n = 0;
    std::uint64_t n = 0;
    std::vector<std::pair<std::uint64_t, std::uint64_t>> per_checkpoint;  // (n_k, J_{n_k})
};

struct WalkPair {
    RangeSet range1;
    RangeSet range2;
    IntersectionStat stat;
};

inline Path simulate_path(const IncrementLaw& law, std::uint64_t n, std::uint64_t stream_seed) {
    IncrementSampler sampler(law);
    Xoshiro256pp rng(stream_seed);
    Path path;
    path.reserve(n);
    LatticePoint pos{0, 0};
    for (std::uint64_t j = 0; j < n; ++j) {
        const LatticePoint d = sampler.step(rng);
        pos.x += d.x;
        pos.y += d.y;
        path.push_back(pos);
    }
    return path;
}

inline RangeSet range_of_path(const Path& path, int walk_id, std::int64_t lattice_period = 0) {
    RangeSet r;
    r.walk_id = walk_id;
    r.steps_consumed = path.size();
    r.lattice_period = lattice_period;
    r.sites.reserve(path.size());
    for (const LatticePoint& p : path) r.sites.insert(p);
    return r;
}

inline RangeSet walk_range(const IncrementLaw& law, std::uint64_t n, std::uint64_t stream_seed,
                           int walk_id = 1) {
    IncrementSampler sampler(law);
    Xoshiro256pp rng(stream_seed);
    RangeSet r;
    r.walk_id = walk_id;
    r.steps_consumed = n;
    r.sites.reserve(n);
    LatticePoint pos{0, 0};
    for (std::uint64_t j = 0; j < n; ++j) {
        const LatticePoint d = sampler.step(rng);
        pos.x += d.x;
        pos.y += d.y;
        r.sites.insert(pos);
    }
    return r;
}

inline std::uint64_t intersection_count(const RangeSet& a, const RangeSet& b) {
    if (a.lattice_period != b.lattice_period)
        throw std::domain_error("intersection_count: ranges use different lattice scalings");
    const RangeSet& small = a.sites.size() <= b.sites.size() ? a : b;
    const RangeSet& large = a.sites.size() <= b.sites.size() ? b : a;
    std::uint64_t count = 0;
    small.sites.for_each_packed([&](std::uint64_t key) {
        if (large.sites.contains_packed(key)) ++count;
    });
    return count;
}

// Simulates the two independent walks of one replica and counts common sites.
// Optional checkpoints (strictly increasing step counts <= n) record the
// running intersection count J at those times.
inline WalkPair simulate_pair(const IncrementLaw& law, std::uint64_t n, std::uint64_t pair_seed,
                              std::span<const std::uint64_t> checkpoints = {}) {
    if (n < 1) throw std::invalid_argument("simulate_pair: n must be >= 1");
    IncrementSampler sampler(law);
    Xoshiro256pp rng1(derive_seed(pair_seed, 1));
    Xoshiro256pp rng2(derive_seed(pair_seed, 2));

    WalkPair out;
    out.range1.walk_id = 1;
    out.range2.walk_id = 2;
    out.range1.steps_consumed = n;
    out.range2.steps_consumed = n;
    out.range1.sites.reserve(n);
    out.range2.sites.reserve(n);
    out.stat.n = n;

    PointSet common;
    LatticePoint p1{0, 0}, p2{0, 0};
    std::uint64_t j_count = 0;
    std::size_t next_cp = 0;
    for (std::uint64_t j = 1; j <= n; ++j) {
        LatticePoint d = sampler.step(rng1);
        p1.x += d.x;
        p1.y += d.y;
        out.range1.sites.insert(p1);
        if (out.range2.sites.contains(p1) && common.insert(p1)) ++j_count;

        d = sampler.step(rng2);
        p2.x += d.x;
        p2.y += d.y;
        out.range2.sites.insert(p2);
        if (out.range1.sites.contains(p2) && common.insert(p2)) ++j_count;

        if (next_cp < checkpoints.size() && checkpoints[next_cp] == j) {
            out.stat.per_checkpoint.emplace_back(j, j_count);
            ++next_cp;
        }
    }
    out.stat.j_n = j_count;
    return out;
}

// ---------------------------------------------------------------------------
// Streaming kernels used by the estimators. No paths or full second ranges
// are materialized: walk 1 fills a scratch range set, walk 2 probes it and
// records fresh common sites only.
// ---------------------------------------------------------------------------

// A stream fork: from step `step` (exclusive) onward the walk pair draws from
// the substream seeded by `seed` instead of its previous one. Splitting
// clones diverge from their parent this way.
struct StreamFork {
    std::uint64_t step = 0;
    std::uint64_t seed = 0;
};

struct PairScratch {
    PointSet range1;
    PointSet common;
};

namespace detail {

template <class PerStep>
inline void walk_segments(const IncrementSampler& sampler, std::uint64_t base_seed,
                          std::span<const StreamFork> forks, std::uint64_t n, int walk_id,
                          PerStep&& per_step) {
    LatticePoint pos{0, 0};
    std::uint64_t done = 0;
    std::uint64_t seg_seed = base_seed;
    std::size_t next_fork = 0;
    while (done < n) {
        std::uint64_t seg_end = n;
        if (next_fork < forks.size() && forks[next_fork].step < n)
            seg_end = forks[next_fork].step;
        if (seg_end > done) {
            Xoshiro256pp rng(derive_seed(seg_seed, static_cast<std::uint64_t>(walk_id)));
            for (std::uint64_t j = done; j < seg_end; ++j) {
                const LatticePoint d = sampler.step(rng);
                pos.x += d.x;
                pos.y += d.y;
                per_step(pos);
            }
            done = seg_end;
        }
        if (next_fork < forks.size() && forks[next_fork].step == done) {
            seg_seed = forks[next_fork].seed;
            ++next_fork;
        } else if (done >= n) {
            break;
        }
    }
}

}  // namespace detail

// Number of common sites of the two walks of one replica after n steps,
// replaying the (base seed, forks) stream lineage. Forks must be sorted by
// step. Scratch sets are cleared and reused.
inline std::uint64_t pair_intersections_upto(const IncrementLaw& law, std::uint64_t base_seed,
                                             std::span<const StreamFork> forks, std::uint64_t n,
                                             PairScratch& scratch) {
    IncrementSampler sampler(law);
    scratch.range1.clear();
    scratch.common.clear();
    scratch.range1.reserve(n / 2 + 16);

    detail::walk_segments(sampler, base_seed, forks, n, 1,
                          [&](LatticePoint p) { scratch.range1.insert(p); });
    std::uint64_t count = 0;
    detail::walk_segments(sampler, base_seed, forks, n, 2, [&](LatticePoint p) {
        if (scratch.range1.contains(p) && scratch.common.insert(p)) ++count;
    });
    return count;
}

// First-passage test: does the walk visit `target` within n steps?
inline bool walk_hits_within(const IncrementLaw& law, std::uint64_t n, LatticePoint target,
                             std::uint64_t stream_seed) {
    IncrementSampler sampler(law);
    Xoshiro256pp rng(stream_seed);
    LatticePoint pos{0, 0};
    for (std::uint64_t j = 0; j < n; ++j) {
        const LatticePoint d = sampler.step(rng);
        pos.x += d.x;
        pos.y += d.y;
        if (pos == target) return true;
    }
    return false;
}

// ---------------------------------------------------------------------------
// Torus projection. Lattice coordinates divided by sqrt(t_tau) live on the
// continuum box [-N/2, N/2)^2; in lattice units the period is
// round(N * sqrt(t_tau)). Site identity is preserved, so range and
// intersection counting work on wrapped paths unchanged.
// ---------------------------------------------------------------------------

inline std::int64_t torus_period(double box_side, const Scales& scales) {
    if (box_side <= 0.0) throw std::invalid_argument("torus_period: box side must be > 0");
    const double period = box_side * std::sqrt(scales.t_tau);
    return std::max<std::int64_t>(1, std::llround(period));
}

inline Path project_torus(const Path& path, double box_side, const Scales& scales) {
    const std::int64_t m = torus_period(box_side, scales);
    const std::int64_t half = m / 2;
    auto wrap = [&](std::int64_t v) {
        std::int64_t r = (v + half) % m;
        if (r < 0) r += m;
        return static_cast<std::int32_t>(r - half);
    };
    Path out;
    out.reserve(path.size());
    for (const LatticePoint& p : path) out.push_back({wrap(p.x), wrap(p.y)});
    return out;
}

}  // namespace rwi
