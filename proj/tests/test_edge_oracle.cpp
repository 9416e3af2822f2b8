#include <cmath>
#include <set>

#include "doctest.h"
#include "fatloc/edge_oracle.hpp"
#include "fatloc/rng.hpp"

using namespace fatloc;

namespace {

void require_clean(const EdgeOracleTree& e, bool strict) {
    auto bad = e.check_invariants(strict);
    for (std::size_t i = 0; i < std::min<std::size_t>(bad.size(), 10); ++i) MESSAGE(bad[i]);
    REQUIRE(bad.empty());
}

// Location node by brute force: deepest location node whose region holds q.
NodeId brute_locate(const Quadtree& t, Point2 q) {
    NodeId best = kNoNode;
    int depth = -1;
    for (NodeId n = 0; n < t.node_capacity(); ++n) {
        if (!t.alive(n) || !t.node_contains(n, q)) continue;
        if (t.node(n).cell.depth > depth) {
            depth = t.node(n).cell.depth;
            best = n;
        }
    }
    return best;
}

Point2 random_point(SplitMix64& rng, int dim) { return {rng.uniform(), dim == 2 ? rng.uniform() : 0.0}; }

}  // namespace

TEST_CASE("edge oracle on a small tree") {
    Quadtree t(2, CellExtent{{0, 0}, 1.0, 0});
    EdgeOracleTree e(t);
    t.add_observer(&e);
    CHECK(e.locate({0.5, 0.5}) == t.root());
    t.insert_point(0, {0.1, 0.1});
    t.insert_point(1, {0.1 + std::ldexp(1.0, -22), 0.1});
    require_clean(e, false);
    SplitMix64 rng(1);
    for (int k = 0; k < 2000; ++k) {
        const Point2 q = random_point(rng, 2);
        CHECK(e.locate(q) == brute_locate(t, q));
    }
    // near the close pair, inside and around the compressed gap
    for (int k = 0; k < 2000; ++k) {
        const Point2 q{0.1 + rng.uniform(-1e-5, 1e-5), 0.1 + rng.uniform(-1e-5, 1e-5)};
        REQUIRE(e.locate(q) == brute_locate(t, q));
    }
    CHECK_THROWS_AS(e.locate({1.5, 0.5}), Error);
    CHECK_THROWS_AS(e.on_edge_deleted(t.root()), Error);
    CHECK_THROWS_AS(e.on_edge_deleted(99999), Error);
}

TEST_CASE("edge oracle built over an existing tree") {
    Quadtree t(2, CellExtent{{0, 0}, 1.0, 0});
    SplitMix64 rng(2);
    for (int i = 0; i < 500; ++i) t.insert_point(static_cast<PointId>(i), random_point(rng, 2));
    EdgeOracleTree e(t);
    require_clean(e, true);
    CHECK(e.record_count() >= t.node_count());
    for (int k = 0; k < 3000; ++k) {
        const Point2 q = random_point(rng, 2);
        REQUIRE(e.locate(q) == brute_locate(t, q));
    }
}

TEST_CASE("edge oracle follows a randomized soak") {
    for (int dim = 1; dim <= 2; ++dim) {
        Quadtree t(dim, CellExtent{{0, 0}, 1.0, 0});
        Counters c;
        EdgeOracleTree e(t, &c);
        t.add_observer(&e);
        SplitMix64 rng(40 + dim);
        std::vector<PointId> live;
        PointId next = 0;
        for (int op = 0; op < 3000; ++op) {
            const auto r = rng.below(10);
            if (live.empty() || r < 5) {
                Point2 p = random_point(rng, dim);
                if (!live.empty() && rng.below(3) == 0) {
                    const Point2 q = t.point(live[rng.below(live.size())]);
                    p = Point2{std::min(0.999999, q.x + std::ldexp(1.0, -8 - static_cast<int>(rng.below(30)))), q.y};
                }
                try {
                    t.insert_point(next, p);
                    live.push_back(next);
                } catch (const Error&) {
                }
                ++next;
            } else if (r < 8) {
                const std::size_t i = rng.below(live.size());
                t.delete_point(live[i]);
                live[i] = live.back();
                live.pop_back();
            } else {
                const PointId id = live[rng.below(live.size())];
                const Point2 q = t.point(id);
                const double step = std::ldexp(1.0, -static_cast<int>(rng.below(12)));
                Point2 p{std::clamp(q.x + rng.uniform(-step, step), 0.0, 0.999999),
                         dim == 2 ? std::clamp(q.y + rng.uniform(-step, step), 0.0, 0.999999) : 0.0};
                try {
                    t.move_point(id, p);
                } catch (const Error&) {
                }
            }
            if (op % 25 == 0) require_clean(e, false);
            for (int k = 0; k < 3; ++k) {
                Point2 q = random_point(rng, dim);
                if (!live.empty() && k == 0) {
                    const Point2 s = t.point(live[rng.below(live.size())]);
                    q = Point2{std::clamp(s.x + rng.uniform(-1e-6, 1e-6), 0.0, 0.999999),
                               dim == 2 ? std::clamp(s.y + rng.uniform(-1e-6, 1e-6), 0.0, 0.999999) : 0.0};
                }
                REQUIRE(e.locate(q) == brute_locate(t, q));
            }
        }
        e.drain();
        require_clean(e, true);
        // single updates stay within a logarithmic budget
        const double logn = std::log2(static_cast<double>(e.record_count()) + 2);
        CHECK(static_cast<double>(e.max_update_work()) <= 4 * logn + 16);
    }
}
