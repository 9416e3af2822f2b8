#include <algorithm>
#include <cmath>

#include "doctest.h"
#include "fatloc/error.hpp"
#include "fatloc/locate1d.hpp"
#include "fatloc/rng.hpp"

using namespace fatloc;

namespace {

void require_clean(const IntervalSet& s) {
    auto bad = s.check_invariants();
    for (std::size_t i = 0; i < std::min<std::size_t>(bad.size(), 10); ++i) MESSAGE(bad[i]);
    REQUIRE(bad.empty());
}

std::optional<IntervalHandle> scan(const std::vector<std::pair<IntervalHandle, Interval1>>& all, double x) {
    for (auto& [h, iv] : all)
        if (iv.contains(x)) return h;
    return std::nullopt;
}

// n disjoint intervals from 2n sorted uniforms, widths shrunk by a log-uniform factor.
std::vector<Interval1> random_disjoint(SplitMix64& rng, std::size_t n) {
    std::vector<double> xs;
    for (std::size_t i = 0; i < 2 * n; ++i) xs.push_back(rng.uniform(0.0, 0.999));
    std::sort(xs.begin(), xs.end());
    std::vector<Interval1> out;
    for (std::size_t i = 0; i + 1 < xs.size(); i += 2) {
        if (!(xs[i] < xs[i + 1])) continue;
        const double mid = 0.5 * (xs[i] + xs[i + 1]);
        const double half = 0.5 * (xs[i + 1] - xs[i]) * std::exp2(-rng.uniform(0.0, 6.0));
        if (half <= 0) continue;
        out.emplace_back(mid - half, mid + half);
    }
    return out;
}

bool free_of(const IntervalSet& s, const Interval1& iv, IntervalHandle self) {
    for (IntervalHandle h = 0; h < 1u << 20; ++h) {
        if (!s.valid(h)) {
            if (h > s.size() * 4 + 64) break;
            continue;
        }
        if (h != self && s.interval(h).overlaps(iv)) return false;
    }
    return true;
}

std::vector<std::pair<IntervalHandle, Interval1>> snapshot(const IntervalSet& s) {
    std::vector<std::pair<IntervalHandle, Interval1>> out;
    for (IntervalHandle h = 0; out.size() < s.size(); ++h)
        if (s.valid(h)) out.emplace_back(h, s.interval(h));
    return out;
}

}  // namespace

TEST_CASE("interval set basics") {
    IntervalSet s(Interval1(0.0, 1.0));
    CHECK_FALSE(s.query(0.5).has_value());
    auto hs = s.build({Interval1(0.1, 0.2), Interval1(0.4, 0.8)});
    REQUIRE(hs.size() == 2);
    CHECK(s.tree().point_leaf(hs[0]) != s.tree().point_leaf(hs[1]));
    CHECK(s.query(0.5) == hs[1]);
    CHECK(s.query(0.15) == hs[0]);
    CHECK_FALSE(s.query(0.3).has_value());
    CHECK_THROWS_AS(s.query(1.5), Error);
    require_clean(s);

    Counters c;
    s.set_counters(&c);
    s.local_update(hs[1], Interval1(0.4, 0.8), 1.0);
    CHECK(c.walk_length <= 2);
    s.local_update(hs[1], Interval1(0.45, 0.85), 2.0);
    CHECK(s.query(0.84) == hs[1]);
    try {
        s.local_update(hs[1], Interval1(0.9, 0.91), 2.0);
        FAIL("expected NotSimilar");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::NotSimilar);
    }
    require_clean(s);
}

TEST_CASE("interval set errors") {
    IntervalSet s(Interval1(0.0, 1.0));
    try {
        s.build({Interval1(0.1, 0.5), Interval1(0.4, 0.6)});
        FAIL("expected OverlappingInput");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::OverlappingInput);
    }
    IntervalSet t(Interval1(0.0, 1.0));
    const IntervalHandle h = t.insert(Interval1(0.2, 0.3));
    t.erase(h);
    CHECK(t.size() == 0);
    CHECK(t.tree().node_count() == 1);
    try {
        t.erase(h);
        FAIL("expected UnknownHandle");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::UnknownHandle);
    }
    CHECK_THROWS_AS(t.insert(Interval1(0.5, 1.5)), Error);
}

TEST_CASE("interval queries match a linear scan") {
    SplitMix64 rng(2024);
    IntervalSet s(Interval1(0.0, 1.0));
    auto ivs = random_disjoint(rng, 10000);
    s.build(ivs);
    require_clean(s);
    CHECK(s.tree().node_count() <= 8 * ivs.size());
    const auto all = snapshot(s);
    std::vector<std::pair<double, IntervalHandle>> sorted;
    for (auto& [h, iv] : all) sorted.emplace_back(iv.lo, h);
    std::sort(sorted.begin(), sorted.end());
    for (int k = 0; k < 100000; ++k) {
        const double x = rng.uniform(0.0, 1.0);
        // sorted-lo oracle: last interval starting at or before x
        std::optional<IntervalHandle> want;
        auto it = std::upper_bound(sorted.begin(), sorted.end(), std::make_pair(x, IntervalHandle(-1)));
        if (it != sorted.begin() && s.interval(std::prev(it)->second).contains(x)) want = std::prev(it)->second;
        REQUIRE(s.query(x) == want);
    }
}

TEST_CASE("rho-similar local updates keep queries exact") {
    SplitMix64 rng(5);
    IntervalSet::Options opt;
    opt.debug_checks = true;
    IntervalSet s(Interval1(0.0, 1.0), opt);
    auto hs = s.build(random_disjoint(rng, 1000));
    Counters c;
    s.set_counters(&c);
    const double rho = 4.0;
    std::uint64_t max_walk = 0;
    int applied = 0;
    for (int op = 0; op < 10000; ++op) {
        const IntervalHandle h = hs[rng.below(hs.size())];
        const Interval1 cur = s.interval(h);
        const double len = cur.diameter() * std::exp2(rng.uniform(-1.0, 1.0));
        const double shift = rng.uniform(-1.0, 1.0) * cur.diameter();
        const double mid = cur.midpoint() + shift;
        if (mid - len / 2 < 0 || mid + len / 2 >= 1) continue;
        const Interval1 next(mid - len / 2, mid + len / 2);
        if (!is_rho_similar(cur, next, rho) || !free_of(s, next, h)) continue;
        c.reset();
        s.local_update(h, next, rho);
        max_walk = std::max(max_walk, c.walk_length);
        ++applied;
        if (op % 500 == 0) require_clean(s);
        for (int k = 0; k < 3; ++k) {
            const double x = k == 0 ? next.midpoint() : rng.uniform(0.0, 1.0);
            REQUIRE(s.query(x) == scan(snapshot(s), x));
        }
    }
    require_clean(s);
    MESSAGE("applied " << applied << " max walk " << max_walk);
    CHECK(applied > 1000);
}

TEST_CASE("insert and delete soak") {
    SplitMix64 rng(6);
    IntervalSet::Options opt;
    opt.debug_checks = true;
    IntervalSet s(Interval1(0.0, 1.0), opt);
    std::vector<IntervalHandle> live;
    for (int op = 0; op < 10000; ++op) {
        const auto r = rng.below(10);
        if (r < 5 || live.empty()) {
            const double mid = rng.uniform(0.0, 0.99);
            const double half = std::exp2(-rng.uniform(6.0, 20.0));
            if (mid - half < 0) continue;
            const Interval1 iv(mid - half, mid + half);
            if (!free_of(s, iv, IntervalHandle(-1))) {
                CHECK_THROWS_AS(s.insert(iv), Error);
                continue;
            }
            live.push_back(s.insert(iv));
        } else if (r < 8) {
            const std::size_t i = rng.below(live.size());
            s.erase(live[i]);
            live[i] = live.back();
            live.pop_back();
        } else {
            const double x = rng.uniform(0.0, 1.0);
            REQUIRE(s.query(x) == scan(snapshot(s), x));
        }
        if (op % 1000 == 0) require_clean(s);
    }
    require_clean(s);
}
