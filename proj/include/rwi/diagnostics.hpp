#pragma once

// Upper-bound diagnostics on simulated paths: slab crossing counts,
// the confinement event, and per-box range/intersection tallies with the
// highly-frequented-box rule. All geometry lives on torus-scaled coordinates
// (lattice divided by sqrt(t_tau)); slab widths eta are continuum units.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <unordered_map>
#include <vector>

#include "rwi/scales.hpp"
#include "rwi/walk.hpp"

namespace rwi {

// ---------------------------------------------------------------------------
// Crossings. Hyperplanes in direction k sit at scaled levels eta*(a + 1/2);
// in lattice units the column for index a is round(eta*sqrt(t_tau)*(a+1/2)).
// A crossing is a visit to a hyperplane different from the previously visited
// one; the first visit counts. Oscillating against one fixed hyperplane
// therefore scores once.
// ---------------------------------------------------------------------------

struct CrossingStat {
    double eta = 0.0;
    std::array<std::uint64_t, 2> count_per_direction{0, 0};
    std::uint64_t total = 0;
};

namespace detail {

// Column of the hyperplane containing lattice coordinate v, or INT64_MIN.
inline std::int64_t hyperplane_column(std::int64_t v, double eta_lattice) {
    const double a = std::round(static_cast<double>(v) / eta_lattice - 0.5);
    const std::int64_t column = std::llround(eta_lattice * (a + 0.5));
    return column == v ? column : std::numeric_limits<std::int64_t>::min();
}

}  // namespace detail

inline CrossingStat crossing_count(const Path& path, double eta, const Scales& scales) {
    if (eta <= 0.0) throw std::invalid_argument("crossing_count: eta must be > 0");
    const double eta_lattice = eta * std::sqrt(scales.t_tau);
    if (eta_lattice < 1.0)
        throw std::invalid_argument("crossing_count: eta below the lattice spacing");

    CrossingStat stat;
    stat.eta = eta;
    constexpr std::int64_t kNone = std::numeric_limits<std::int64_t>::min();
    std::array<std::int64_t, 2> last{kNone, kNone};
    for (const LatticePoint& p : path) {
        const std::array<std::int64_t, 2> coords{p.x, p.y};
        for (int k = 0; k < 2; ++k) {
            const std::int64_t column = detail::hyperplane_column(coords[k], eta_lattice);
            if (column == kNone) continue;
            if (column != last[k]) {
                ++stat.count_per_direction[k];
                last[k] = column;
            }
        }
    }
    stat.total = stat.count_per_direction[0] + stat.count_per_direction[1];
    return stat;
}

// ---------------------------------------------------------------------------
// Confinement: sup over the given walks and all steps of the scaled Euclidean
// norm stays within tau^2.
// ---------------------------------------------------------------------------

inline bool confinement_check(std::span<const Path> paths, const Scales& scales) {
    const double bound2 = scales.tau * scales.tau * scales.tau * scales.tau * scales.t_tau;
    for (const Path& path : paths)
        for (const LatticePoint& p : path) {
            const double r2 =
                static_cast<double>(p.x) * p.x + static_cast<double>(p.y) * p.y;
            if (r2 > bound2) return false;
        }
    return true;
}

// ---------------------------------------------------------------------------
// Box occupancy. The scaled lattice is partitioned into boxes of side N
// centered on N*z, z in Z^2; a box is highly frequented when either walk's
// in-box range exceeds epsilon * t_tau.
// ---------------------------------------------------------------------------

struct BoxTally {
    std::uint64_t range1 = 0;
    std::uint64_t range2 = 0;
    std::uint64_t intersections = 0;
};

struct BoxOccupancy {
    double box_side = 0.0;
    double epsilon = 0.0;
    std::vector<LatticePoint> heavy_boxes;                  // sorted for determinism
    std::unordered_map<std::uint64_t, BoxTally> per_box;    // keyed by pack_point(z)
};

inline BoxOccupancy box_occupancy(const RangeSet& r1, const RangeSet& r2, double box_side,
                                  double epsilon, const Scales& scales) {
    if (box_side <= 0.0) throw std::invalid_argument("box_occupancy: box side must be > 0");
    if (epsilon <= 0.0) throw std::invalid_argument("box_occupancy: epsilon must be > 0");
    const double inv_sqrt_t = 1.0 / std::sqrt(scales.t_tau);
    auto box_of = [&](LatticePoint p) -> LatticePoint {
        const double ux = p.x * inv_sqrt_t;
        const double uy = p.y * inv_sqrt_t;
        return {static_cast<std::int32_t>(std::floor((ux + box_side / 2) / box_side)),
                static_cast<std::int32_t>(std::floor((uy + box_side / 2) / box_side))};
    };

    BoxOccupancy occ;
    occ.box_side = box_side;
    occ.epsilon = epsilon;
    r1.sites.for_each([&](LatticePoint p) {
        BoxTally& t = occ.per_box[pack_point(box_of(p))];
        ++t.range1;
        if (r2.sites.contains(p)) ++t.intersections;
    });
    r2.sites.for_each([&](LatticePoint p) { ++occ.per_box[pack_point(box_of(p))].range2; });

    const double heavy_threshold = epsilon * scales.t_tau;
    for (const auto& [key, tally] : occ.per_box)
        if (static_cast<double>(tally.range1) > heavy_threshold ||
            static_cast<double>(tally.range2) > heavy_threshold)
            occ.heavy_boxes.push_back(unpack_point(key));
    std::sort(occ.heavy_boxes.begin(), occ.heavy_boxes.end(),
              [](LatticePoint a, LatticePoint b) { return a.x != b.x ? a.x < b.x : a.y < b.y; });
    return occ;
}

// ---------------------------------------------------------------------------
// Translated slab copies. Q is the eta/2-neighbourhood of the box faces;
// translating it by eta in each direction gives 2N/eta copies, and every
// point lies in exactly two of them (one per direction). eta is first rounded
// to the nearest divisor of N.
// ---------------------------------------------------------------------------

inline double slab_rounded_eta(double eta, double box_side) {
    if (eta <= 0.0 || box_side <= 0.0)
        throw std::invalid_argument("slab_rounded_eta: eta and box side must be > 0");
    const auto m = std::max<std::int64_t>(1, std::llround(box_side / eta));
    return box_side / static_cast<double>(m);
}

// Index a in [0, N/eta) of the slab copy (in one direction) containing the
// scaled coordinate u. Half-open convention: u belongs to the copy whose face
// level N/2 + a*eta (mod N) satisfies u in [level - eta/2, level + eta/2).
inline int slab_copy_index(double u, double eta, double box_side) {
    const double m = std::round(box_side / eta);
    double r = std::fmod(u - box_side / 2 + eta / 2, box_side);
    if (r < 0) r += box_side;
    int a = static_cast<int>(std::floor(r / eta));
    if (a >= static_cast<int>(m)) a = 0;  // guard the wrap cell against fp round-off
    return a;
}

// Direct membership test: is u within the half-open eta/2-neighbourhood of
// the face levels of copy a (levels N/2 + a*eta modulo N)?
inline bool slab_copy_contains(double u, int a, double eta, double box_side) {
    double d = std::fmod(u - (box_side / 2 + a * eta), box_side);
    if (d < -box_side / 2) d += box_side;
    if (d >= box_side / 2) d -= box_side;
    return d >= -eta / 2 && d < eta / 2;
}

// Number of the 2N/eta slab copies containing the scaled point (ux, uy).
inline int slab_copies_containing(double ux, double uy, double eta, double box_side) {
    const int m = static_cast<int>(std::round(box_side / eta));
    int count = 0;
    const std::array<double, 2> coords{ux, uy};
    for (int k = 0; k < 2; ++k)
        for (int a = 0; a < m; ++a)
            if (slab_copy_contains(coords[k], a, eta, box_side)) ++count;
    return count;
}

}  // namespace rwi
