#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <set>
#include <unordered_set>

#include "rwi/walk.hpp"

using namespace rwi;

namespace {

std::set<std::pair<int, int>> as_std_set(const PointSet& ps) {
    std::set<std::pair<int, int>> out;
    ps.for_each([&](LatticePoint p) { out.emplace(p.x, p.y); });
    return out;
}

RangeSet make_range(std::initializer_list<LatticePoint> pts, int walk_id,
                    std::int64_t period = 0) {
    RangeSet r;
    r.walk_id = walk_id;
    r.lattice_period = period;
    r.steps_consumed = pts.size();
    for (LatticePoint p : pts) r.sites.insert(p);
    return r;
}

}  // namespace

TEST_CASE("packed point codec round-trips signed coordinates") {
    for (int x : {-100000, -1, 0, 1, 12345})
        for (int y : {-54321, -2, 0, 3, 99999}) {
            const LatticePoint p{x, y};
            REQUIRE(unpack_point(pack_point(p)) == p);
        }
}

TEST_CASE("PointSet agrees with std::unordered_set under random churn") {
    Xoshiro256pp rng(991);
    PointSet ps;
    std::unordered_set<std::uint64_t> ref;
    for (int i = 0; i < 20000; ++i) {
        const LatticePoint p{static_cast<std::int32_t>(rng.next() % 200) - 100,
                             static_cast<std::int32_t>(rng.next() % 200) - 100};
        const bool inserted = ps.insert(p);
        const bool ref_inserted = ref.insert(pack_point(p)).second;
        REQUIRE(inserted == ref_inserted);
    }
    REQUIRE(ps.size() == ref.size());
    for (std::uint64_t k : ref) REQUIRE(ps.contains_packed(k));
    REQUIRE_FALSE(ps.contains({5000, 5000}));
    ps.clear();
    REQUIRE(ps.size() == 0);
    REQUIRE_FALSE(ps.contains({1, 1}));
}

TEST_CASE("scales_for matches the defining formulas") {
    const Scales s8 = scales_for(8);
    REQUIRE(s8.tau == Catch::Approx(std::log(8.0)).epsilon(1e-15));
    REQUIRE(s8.tau == Catch::Approx(2.0794).margin(1e-4));
    REQUIRE(s8.t_tau == Catch::Approx(8.0 / std::log(8.0)).epsilon(1e-15));
    REQUIRE(s8.t_tau == Catch::Approx(3.8472).margin(2e-4));

    const Scales s6 = scales_for(1000000);
    REQUIRE(s6.tau == Catch::Approx(13.8155).margin(1e-4));
    REQUIRE(s6.t_tau == Catch::Approx(72382.4).margin(0.1));

    const Scales s2 = scales_for(2);
    REQUIRE(s2.tau == Catch::Approx(std::log(2.0)).epsilon(1e-15));
    REQUIRE(s2.t_tau == Catch::Approx(2.8854).margin(1e-4));

    REQUIRE_THROWS_AS(scales_for(0), std::domain_error);
    REQUIRE_THROWS_AS(scales_for(1), std::domain_error);

    for (std::uint64_t n : {2ull, 17ull, 4096ull, 123456789ull}) {
        const Scales sc = scales_for(n);
        REQUIRE(sc.t_tau * sc.tau == Catch::Approx(static_cast<double>(n)).epsilon(1e-12));
        REQUIRE(sc.tau > 0.0);
    }
}

TEST_CASE("shipped increment laws validate; malformed laws are rejected") {
    REQUIRE_NOTHROW(IncrementLaw::diagonal().validate());
    REQUIRE_NOTHROW(IncrementLaw::nearest_neighbor().validate());
    REQUIRE(IncrementLaw::diagonal().clt_prefactor_scale() == Catch::Approx(1.0));
    REQUIRE(IncrementLaw::nearest_neighbor().clt_prefactor_scale() == Catch::Approx(0.5));
    REQUIRE(IncrementLaw::nearest_neighbor().per_coordinate_variance() == Catch::Approx(0.5));

    IncrementLaw bad = IncrementLaw::diagonal();
    bad.support[0].second = 0.3;  // probabilities no longer sum to 1
    REQUIRE_THROWS_AS(bad.validate(), std::invalid_argument);

    IncrementLaw drift = IncrementLaw::diagonal();
    drift.support = {{{1, 0}, 0.5}, {{1, 0}, 0.5}};
    REQUIRE_THROWS_AS(drift.validate(), std::invalid_argument);

    IncrementLaw wrong_cov = IncrementLaw::diagonal();
    wrong_cov.covariance[0][0] = 0.9;
    REQUIRE_THROWS_AS(wrong_cov.validate(), std::invalid_argument);

    REQUIRE_THROWS_AS(IncrementLaw::by_name("levy"), std::invalid_argument);
}

TEST_CASE("diagonal law empirical moments over 1e6 steps") {
    IncrementSampler sampler(IncrementLaw::diagonal());
    Xoshiro256pp rng(20240801);
    const int n = 1000000;
    double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
    for (int i = 0; i < n; ++i) {
        const LatticePoint d = sampler.step(rng);
        sx += d.x;
        sy += d.y;
        sxx += static_cast<double>(d.x) * d.x;
        syy += static_cast<double>(d.y) * d.y;
        sxy += static_cast<double>(d.x) * d.y;
    }
    const double var_x = sxx / n - (sx / n) * (sx / n);
    const double var_y = syy / n - (sy / n) * (sy / n);
    REQUIRE(std::abs(var_x - 1.0) < 0.01);
    REQUIRE(std::abs(var_y - 1.0) < 0.01);
    REQUIRE(std::abs(sxy / n) < 0.01);
}

TEST_CASE("simulate_pair matches a brute-force recount of the same substreams") {
    const IncrementLaw& law = IncrementLaw::diagonal();
    const std::uint64_t n = 1000, seed = 0xfeedbeef;
    const WalkPair pair = simulate_pair(law, n, seed);

    // Independent re-walk: same substream contract, separate bookkeeping.
    std::set<std::pair<int, int>> r1, r2;
    for (int walk = 1; walk <= 2; ++walk) {
        IncrementSampler sampler(law);
        Xoshiro256pp rng(derive_seed(seed, walk));
        int x = 0, y = 0;
        for (std::uint64_t j = 0; j < n; ++j) {
            const LatticePoint d = sampler.step(rng);
            x += d.x;
            y += d.y;
            (walk == 1 ? r1 : r2).emplace(x, y);
        }
    }
    std::uint64_t j_oracle = 0;
    for (const auto& site : r1) j_oracle += r2.count(site);

    REQUIRE(pair.stat.j_n == j_oracle);
    REQUIRE(pair.range1.sites.size() == r1.size());
    REQUIRE(pair.range2.sites.size() == r2.size());
    REQUIRE(intersection_count(pair.range1, pair.range2) == j_oracle);
    REQUIRE(as_std_set(pair.range1.sites) == std::set<std::pair<int, int>>(r1));
}

TEST_CASE("identical increment streams give j_n equal to the range cardinality") {
    const IncrementLaw& law = IncrementLaw::diagonal();
    const RangeSet a = walk_range(law, 500, 777, 1);
    const RangeSet b = walk_range(law, 500, 777, 2);
    REQUIRE(a.sites.size() == b.sites.size());
    REQUIRE(intersection_count(a, b) == a.sites.size());
}

TEST_CASE("intersection_count basics") {
    const RangeSet r1 = make_range({{0, 1}, {1, 1}}, 1);
    const RangeSet r2 = make_range({{1, 1}, {2, 0}}, 2);
    REQUIRE(intersection_count(r1, r2) == 1);
    REQUIRE(intersection_count(r2, r1) == 1);

    const RangeSet empty = make_range({}, 2);
    REQUIRE(intersection_count(r1, empty) == 0);

    RangeSet torus = make_range({{1, 1}}, 2, 16);
    REQUIRE_THROWS_AS(intersection_count(r1, torus), std::domain_error);
}

TEST_CASE("intersection_count equals the double-loop membership oracle") {
    const IncrementLaw& law = IncrementLaw::nearest_neighbor();
    const RangeSet r1 = walk_range(law, 50, 31337, 1);
    const RangeSet r2 = walk_range(law, 50, 98765, 2);
    std::uint64_t count = 0;
    r1.sites.for_each([&](LatticePoint p) {
        r2.sites.for_each([&](LatticePoint q) {
            if (p == q) ++count;
        });
    });
    REQUIRE(intersection_count(r1, r2) == count);
}

TEST_CASE("torus projection wraps a straight walk back to its start") {
    const Scales sc = scales_for(1000);
    const double n_box = 2.0;
    const std::int64_t period = torus_period(n_box, sc);
    Path straight;
    for (std::int64_t j = 1; j <= period; ++j)
        straight.push_back({static_cast<std::int32_t>(j), 0});
    const Path wrapped = project_torus(straight, n_box, sc);
    REQUIRE(wrapped.back() == LatticePoint{0, 0});  // back at the start site
}

TEST_CASE("torus projection is the identity inside one fundamental domain") {
    const Scales sc = scales_for(1000);
    const std::int64_t period = torus_period(4.0, sc);
    Path path;
    for (int j = 1; j <= 10; ++j)
        path.push_back({static_cast<std::int32_t>(j % (period / 4)), -3});
    REQUIRE(project_torus(path, 4.0, sc) == path);
}

TEST_CASE("torus intersections dominate plane intersections") {
    const IncrementLaw& law = IncrementLaw::diagonal();
    const std::uint64_t n = 1000;
    const Scales sc = scales_for(n);
    const double n_box = 1.0;
    const std::int64_t period = torus_period(n_box, sc);

    const Path p1 = simulate_path(law, n, derive_seed(5, 1));
    const Path p2 = simulate_path(law, n, derive_seed(5, 2));
    const RangeSet r1 = range_of_path(p1, 1);
    const RangeSet r2 = range_of_path(p2, 2);
    const RangeSet t1 = range_of_path(project_torus(p1, n_box, sc), 1, period);
    const RangeSet t2 = range_of_path(project_torus(p2, n_box, sc), 2, period);

    const std::uint64_t plane = intersection_count(r1, r2);
    const std::uint64_t torus = intersection_count(t1, t2);
    REQUIRE(torus >= plane);

    // Brute-force recount of the torus ranges from wrapped plane sites.
    auto wrap = [&](int v) {
        const std::int64_t half = period / 2;
        std::int64_t r = (v + half) % period;
        if (r < 0) r += period;
        return static_cast<int>(r - half);
    };
    std::set<std::pair<int, int>> w1, w2;
    r1.sites.for_each([&](LatticePoint p) { w1.emplace(wrap(p.x), wrap(p.y)); });
    r2.sites.for_each([&](LatticePoint p) { w2.emplace(wrap(p.x), wrap(p.y)); });
    std::uint64_t oracle = 0;
    for (const auto& s : w1) oracle += w2.count(s);
    REQUIRE(torus == oracle);
    REQUIRE(t1.sites.size() == w1.size());
}

TEST_CASE("projection commutes with range collection") {
    const IncrementLaw& law = IncrementLaw::diagonal();
    const std::uint64_t n = 600;
    const Scales sc = scales_for(n);
    const double n_box = 1.5;
    const std::int64_t period = torus_period(n_box, sc);
    const Path path = simulate_path(law, n, 2024);

    const RangeSet project_then_range = range_of_path(project_torus(path, n_box, sc), 1, period);

    const RangeSet plane_range = range_of_path(path, 1);
    PointSet range_then_project;
    auto wrap = [&](int v) {
        const std::int64_t half = period / 2;
        std::int64_t r = (v + half) % period;
        if (r < 0) r += period;
        return static_cast<int>(r - half);
    };
    plane_range.sites.for_each(
        [&](LatticePoint p) { range_then_project.insert({wrap(p.x), wrap(p.y)}); });

    REQUIRE(as_std_set(project_then_range.sites) == as_std_set(range_then_project));
}

TEST_CASE("intersection statistics respect the range bounds") {
    const IncrementLaw& law = IncrementLaw::diagonal();
    Xoshiro256pp rng(1);
    for (int trial = 0; trial < 20; ++trial) {
        const std::uint64_t n = 50 + rng.next() % 1000;
        const WalkPair pair = simulate_pair(law, n, rng.next());
        REQUIRE(pair.stat.j_n <=
                std::min(pair.range1.sites.size(), pair.range2.sites.size()));
        REQUIRE(std::min(pair.range1.sites.size(), pair.range2.sites.size()) <= n);
    }
}

TEST_CASE("running intersection count is nondecreasing along checkpoints") {
    const IncrementLaw& law = IncrementLaw::diagonal();
    const std::vector<std::uint64_t> checkpoints{100, 200, 400, 800, 1000};
    const WalkPair pair = simulate_pair(law, 1000, 99, checkpoints);
    REQUIRE(pair.stat.per_checkpoint.size() == checkpoints.size());
    std::uint64_t prev = 0;
    for (const auto& [nk, jk] : pair.stat.per_checkpoint) {
        REQUIRE(jk >= prev);
        prev = jk;
    }
    REQUIRE(pair.stat.per_checkpoint.back().second == pair.stat.j_n);
}

TEST_CASE("streaming pair kernel agrees with simulate_pair") {
    const IncrementLaw& law = IncrementLaw::diagonal();
    PairScratch scratch;
    for (std::uint64_t seed : {1ull, 42ull, 977ull}) {
        const WalkPair pair = simulate_pair(law, 777, seed);
        REQUIRE(pair_intersections_upto(law, seed, {}, 777, scratch) == pair.stat.j_n);
    }
}

TEST_CASE("stream forks preserve history and only diverge afterwards") {
    const IncrementLaw& law = IncrementLaw::diagonal();
    PairScratch scratch;
    const std::uint64_t s1 = 11, s2 = 22, n = 512, k = 128;

    // A fork at step 0 is a full replacement of the stream.
    std::vector<StreamFork> from_zero{{0, s2}};
    REQUIRE(pair_intersections_upto(law, s1, from_zero, n, scratch) ==
            pair_intersections_upto(law, s2, {}, n, scratch));

    // A clone forked at k matches its parent up to k...
    std::vector<StreamFork> mid{{k, s2}};
    REQUIRE(pair_intersections_upto(law, s1, mid, k, scratch) ==
            pair_intersections_upto(law, s1, {}, k, scratch));
    // ...and a fork at the horizon never fires.
    std::vector<StreamFork> at_end{{n, s2}};
    REQUIRE(pair_intersections_upto(law, s1, at_end, n, scratch) ==
            pair_intersections_upto(law, s1, {}, n, scratch));
}

TEST_CASE("simulate_pair rejects n = 0 as the documented vacuous case") {
    REQUIRE_THROWS_AS(simulate_pair(IncrementLaw::diagonal(), 0, 1), std::invalid_argument);
}
