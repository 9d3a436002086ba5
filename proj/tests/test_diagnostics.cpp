#include <catch2/catch_amalgamated.hpp>

#include <array>
#include <climits>
#include <cmath>
#include <map>

#include "rwi/diagnostics.hpp"

using namespace rwi;

namespace {

// Independent crossing oracle: scan the path, locate boundary columns by
// direct enumeration of hyperplane indices, apply the successive-hit rule.
CrossingStat crossing_oracle(const Path& path, double eta, const Scales& scales) {
    const double eta_lattice = eta * std::sqrt(scales.t_tau);
    CrossingStat stat;
    stat.eta = eta;
    std::array<long long, 2> last{LLONG_MIN, LLONG_MIN};
    for (const LatticePoint& p : path) {
        const std::array<long long, 2> coords{p.x, p.y};
        for (int k = 0; k < 2; ++k) {
            long long column = LLONG_MIN;
            const long long a_max =
                static_cast<long long>(std::abs(coords[k]) / eta_lattice) + 2;
            for (long long a = -a_max; a <= a_max; ++a) {
                if (std::llround(eta_lattice * (a + 0.5)) == coords[k]) {
                    column = std::llround(eta_lattice * (a + 0.5));
                    break;
                }
            }
            if (column == LLONG_MIN) continue;
            if (column != last[k]) {
                ++stat.count_per_direction[k];
                last[k] = column;
            }
        }
    }
    stat.total = stat.count_per_direction[0] + stat.count_per_direction[1];
    return stat;
}

Scales scales_with_unit_lattice() {
    // t_tau = 1 would need n = e; use a real n and express eta in lattice units.
    return scales_for(1000);
}

}  // namespace

TEST_CASE("monotone straight path crosses m hyperplanes in one direction") {
    const Scales sc = scales_with_unit_lattice();
    const double eta = 10.0 / std::sqrt(sc.t_tau);  // boundary columns at 5, 15, 25, ...
    Path path;
    for (int x = 1; x <= 47; ++x) path.push_back({x, 0});
    const CrossingStat stat = crossing_count(path, eta, sc);
    REQUIRE(stat.count_per_direction[0] == 5);  // columns 5, 15, 25, 35, 45
    REQUIRE(stat.count_per_direction[1] == 0);
    REQUIRE(stat.total == 5);
}

TEST_CASE("oscillation against one hyperplane counts a single crossing") {
    const Scales sc = scales_with_unit_lattice();
    const double eta = 10.0 / std::sqrt(sc.t_tau);
    Path path;
    for (int i = 0; i < 20; ++i) path.push_back({i % 2 ? 5 : 4, 0});  // hit column 5 repeatedly
    CrossingStat stat = crossing_count(path, eta, sc);
    REQUIRE(stat.count_per_direction[0] == 1);

    // Reaching a different hyperplane afterwards scores again.
    for (int x = 6; x <= 15; ++x) path.push_back({x, 0});
    stat = crossing_count(path, eta, sc);
    REQUIRE(stat.count_per_direction[0] == 2);
}

TEST_CASE("crossing_count matches the direct scan oracle on a random walk") {
    const IncrementLaw& law = IncrementLaw::diagonal();
    const std::uint64_t n = 10000;
    const Scales sc = scales_for(n);
    const Path path = simulate_path(law, n, 777);
    for (double eta_lattice : {7.0, 13.0, 40.0}) {
        const double eta = eta_lattice / std::sqrt(sc.t_tau);
        const CrossingStat fast = crossing_count(path, eta, sc);
        const CrossingStat slow = crossing_oracle(path, eta, sc);
        REQUIRE(fast.count_per_direction[0] == slow.count_per_direction[0]);
        REQUIRE(fast.count_per_direction[1] == slow.count_per_direction[1]);
        REQUIRE(fast.total == fast.count_per_direction[0] + fast.count_per_direction[1]);
    }
}

TEST_CASE("crossing counts are subadditive under concatenation") {
    const IncrementLaw& law = IncrementLaw::diagonal();
    const Scales sc = scales_for(4000);
    Xoshiro256pp rng(31);
    for (int trial = 0; trial < 10; ++trial) {
        const Path path = simulate_path(law, 4000, rng.next());
        const std::size_t cut = 500 + rng.next() % 3000;
        const Path head(path.begin(), path.begin() + cut);
        const Path tail(path.begin() + cut, path.end());
        const double eta = 9.0 / std::sqrt(sc.t_tau);
        const CrossingStat full = crossing_count(path, eta, sc);
        const CrossingStat a = crossing_count(head, eta, sc);
        const CrossingStat b = crossing_count(tail, eta, sc);
        for (int k = 0; k < 2; ++k)
            REQUIRE(full.count_per_direction[k] <=
                    a.count_per_direction[k] + b.count_per_direction[k] + 1);
    }
}

TEST_CASE("crossing_count rejects sub-lattice slab widths") {
    const Scales sc = scales_for(1000);
    REQUIRE_THROWS_AS(crossing_count({}, 0.001, sc), std::invalid_argument);
    REQUIRE_THROWS_AS(crossing_count({}, -1.0, sc), std::invalid_argument);
}

TEST_CASE("confinement holds for empty paths and fails past the threshold") {
    const Scales sc = scales_for(1000);
    const std::vector<Path> empty(2);
    REQUIRE(confinement_check(empty, sc));

    // A site just beyond scaled distance tau^2.
    const double bound_lattice = sc.tau * sc.tau * std::sqrt(sc.t_tau);
    Path far;
    far.push_back({static_cast<std::int32_t>(std::ceil(bound_lattice)) + 13, 0});
    std::vector<Path> paths{Path{}, far};
    REQUIRE_FALSE(confinement_check(paths, sc));
}

TEST_CASE("confinement agrees with a brute-force norm scan") {
    const IncrementLaw& law = IncrementLaw::diagonal();
    const std::uint64_t n = 1000;
    const Scales sc = scales_for(n);
    const Path p1 = simulate_path(law, n, 9001);
    const Path p2 = simulate_path(law, n, 9002);

    double max_norm2 = 0.0;
    for (const Path* p : {&p1, &p2})
        for (const LatticePoint& s : *p)
            max_norm2 = std::max(max_norm2,
                                 (static_cast<double>(s.x) * s.x + static_cast<double>(s.y) * s.y) /
                                     sc.t_tau);
    const bool oracle = max_norm2 <= sc.tau * sc.tau * sc.tau * sc.tau;
    const std::vector<Path> paths{p1, p2};
    REQUIRE(confinement_check(paths, sc) == oracle);
    REQUIRE(confinement_check(paths, sc));  // typical walks sit far inside tau^2
}

TEST_CASE("box occupancy of empty ranges is empty") {
    const Scales sc = scales_for(1000);
    RangeSet r1, r2;
    r1.walk_id = 1;
    r2.walk_id = 2;
    const BoxOccupancy occ = box_occupancy(r1, r2, 2.0, 0.1, sc);
    REQUIRE(occ.per_box.empty());
    REQUIRE(occ.heavy_boxes.empty());
}

TEST_CASE("a single crowded box is flagged as highly frequented") {
    const Scales sc = scales_for(1000);  // t_tau ~ 144.8
    const double eps = 0.05;             // heavy threshold ~ 7.2 sites
    RangeSet r1, r2;
    r1.walk_id = 1;
    r2.walk_id = 2;
    // 20 sites packed near the origin: inside box (0, 0) for side 2.
    for (int i = 0; i < 20; ++i) r1.sites.insert({i % 5, i / 5});
    const BoxOccupancy occ = box_occupancy(r1, r2, 2.0, eps, sc);
    REQUIRE(occ.heavy_boxes.size() == 1);
    REQUIRE(occ.heavy_boxes[0] == LatticePoint{0, 0});
    REQUIRE(occ.per_box.at(pack_point({0, 0})).range1 == 20);
    REQUIRE(occ.per_box.at(pack_point({0, 0})).intersections == 0);
}

TEST_CASE("box tallies match per-site binning") {
    const IncrementLaw& law = IncrementLaw::diagonal();
    const std::uint64_t n = 2000;
    const Scales sc = scales_for(n);
    const WalkPair pair = simulate_pair(law, n, 4711);
    const double side = 0.75;
    const BoxOccupancy occ = box_occupancy(pair.range1, pair.range2, side, 0.02, sc);

    std::map<std::pair<int, int>, BoxTally> oracle;
    const double inv = 1.0 / std::sqrt(sc.t_tau);
    auto box_of = [&](LatticePoint p) {
        return std::make_pair(
            static_cast<int>(std::floor((p.x * inv + side / 2) / side)),
            static_cast<int>(std::floor((p.y * inv + side / 2) / side)));
    };
    pair.range1.sites.for_each([&](LatticePoint p) {
        auto& t = oracle[box_of(p)];
        ++t.range1;
        if (pair.range2.sites.contains(p)) ++t.intersections;
    });
    pair.range2.sites.for_each([&](LatticePoint p) { ++oracle[box_of(p)].range2; });

    REQUIRE(occ.per_box.size() == oracle.size());
    for (const auto& [key, tally] : oracle) {
        const BoxTally& got = occ.per_box.at(pack_point({key.first, key.second}));
        REQUIRE(got.range1 == tally.range1);
        REQUIRE(got.range2 == tally.range2);
        REQUIRE(got.intersections == tally.intersections);
        REQUIRE(got.intersections <= std::min(got.range1, got.range2));
    }
}

TEST_CASE("every site lies in exactly two translated slab copies") {
    const Scales sc = scales_for(5000);
    const double box_side = 4.0;
    for (double eta_requested : {0.5, 0.8, 1.0, 2.0}) {
        const double eta = slab_rounded_eta(eta_requested, box_side);
        REQUIRE(std::abs(box_side / eta - std::round(box_side / eta)) < 1e-12);
        Xoshiro256pp rng(55);
        const double inv = 1.0 / std::sqrt(sc.t_tau);
        for (int i = 0; i < 500; ++i) {
            const int x = static_cast<int>(rng.next() % 4000) - 2000;
            const int y = static_cast<int>(rng.next() % 4000) - 2000;
            REQUIRE(slab_copies_containing(x * inv, y * inv, eta, box_side) == 2);
        }
    }
}

TEST_CASE("slab width rounds to the nearest divisor of the box side") {
    REQUIRE(slab_rounded_eta(0.9, 4.0) == Catch::Approx(1.0));
    REQUIRE(slab_rounded_eta(1.7, 4.0) == Catch::Approx(2.0));
    REQUIRE(slab_rounded_eta(4.0, 4.0) == Catch::Approx(4.0));
    REQUIRE(slab_rounded_eta(100.0, 4.0) == Catch::Approx(4.0));
}
