#include <cmath>

#include "doctest.h"
#include "fatloc/error.hpp"
#include "fatloc/marked_ancestor.hpp"
#include "fatloc/rng.hpp"

using namespace fatloc;

namespace {

void require_clean(const MarkedAncestorForest& f) {
    auto bad = f.check_invariants();
    for (std::size_t i = 0; i < std::min<std::size_t>(bad.size(), 10); ++i) MESSAGE(bad[i]);
    REQUIRE(bad.empty());
}

}  // namespace

TEST_CASE("marked ancestor basics") {
    MarkedAncestorForest f;
    CHECK_FALSE(f.lowest_marked_ancestor(0).has_value());
    const MaNode a = f.root();
    const MaNode b = f.add_leaf(a);
    const MaNode c = f.add_leaf(b);
    const MaNode d = f.add_leaf(c);
    f.mark(b);
    CHECK(f.lowest_marked_ancestor(d) == b);
    CHECK(f.lowest_marked_ancestor(b) == b);
    CHECK_FALSE(f.lowest_marked_ancestor(a).has_value());
    f.mark(a);
    CHECK(f.lowest_marked_ancestor(a) == a);
    f.mark(a);
    f.unmark(b);
    CHECK(f.lowest_marked_ancestor(d) == a);
    require_clean(f);

    CHECK_THROWS_AS(f.remove_leaf(c), Error);
    f.mark(d);
    try {
        f.remove_leaf(d);
        FAIL("expected RemoveMarked");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::RemoveMarked);
    }
    CHECK_THROWS_AS(f.mark(999), Error);
    CHECK_THROWS_AS(f.lowest_marked_ancestor(999), Error);
}

TEST_CASE("add then remove leaf restores singleton") {
    MarkedAncestorForest f;
    const MaNode x = f.add_leaf(f.root());
    f.mark(x);
    f.unmark(x);
    f.remove_leaf(x);
    CHECK(f.size() == 1);
    CHECK(f.micro_count() == 1);
    CHECK(f.path_count() == 1);
    require_clean(f);
}

TEST_CASE("mark and unmark is an inverse pair") {
    MarkedAncestorForest f(2);
    SplitMix64 rng(3);
    std::vector<MaNode> ids{f.root()};
    for (int i = 0; i < 300; ++i) ids.push_back(f.add_leaf(ids[rng.below(ids.size())]));
    for (int i = 0; i < 40; ++i) f.mark(ids[rng.below(ids.size())], static_cast<int>(rng.below(2)));
    std::vector<std::optional<MaNode>> before;
    for (MaNode v : ids) before.push_back(f.lowest_marked_ancestor(v, 1));
    const MaNode v = ids[17];
    const bool had = f.is_marked(v, 1);
    f.mark(v, 1);
    if (!had) f.unmark(v, 1);
    for (std::size_t i = 0; i < ids.size(); ++i) CHECK(f.lowest_marked_ancestor(ids[i], 1) == before[i]);
    require_clean(f);
}

TEST_CASE("marked ancestor agrees with walk-up on random soaks") {
    const int K = 3;
    MarkedAncestorForest f(K);
    NaiveMarkedAncestor g;
    Counters c;
    f.set_counters(&c);
    SplitMix64 rng(77);
    std::vector<MaNode> ids{0};
    auto random_live = [&]() { return ids[rng.below(ids.size())]; };
    while (ids.size() < 10000) {
        const MaNode p = random_live();
        const MaNode v = f.add_leaf(p);
        g.add_leaf_with_id(p, v);
        ids.push_back(v);
    }
    require_clean(f);
    std::uint64_t worst = 0;
    std::vector<int> childless;
    for (int op = 0; op < 100000; ++op) {
        const auto r = rng.below(100);
        if (r < 30) {
            const MaNode v = random_live();
            const int inst = static_cast<int>(rng.below(K));
            f.mark(v, inst);
            g.mark(v, inst);
        } else if (r < 50) {
            const MaNode v = random_live();
            const int inst = static_cast<int>(rng.below(K));
            f.unmark(v, inst);
            g.unmark(v, inst);
        } else if (r < 55) {
            const MaNode p = random_live();
            const MaNode v = f.add_leaf(p);
            g.add_leaf_with_id(p, v);
            ids.push_back(v);
        } else if (r < 60) {
            const std::size_t i = rng.below(ids.size());
            const MaNode v = ids[i];
            if (v != 0 && g.child_count(v) == 0) {
                for (int k = 0; k < K; ++k) {
                    f.unmark(v, k);
                    g.unmark(v, k);
                }
                f.remove_leaf(v);
                g.remove_leaf(v);
                ids[i] = ids.back();
                ids.pop_back();
            }
        } else {
            const MaNode v = random_live();
            const int inst = static_cast<int>(rng.below(K));
            c.reset();
            const auto got = f.lowest_marked_ancestor(v, inst);
            REQUIRE(got == g.lowest_marked_ancestor(v, inst));
            worst = std::max(worst, c.ma_nodes_touched);
        }
        if (op % 20000 == 0) require_clean(f);
    }
    require_clean(f);
    const double bound = 4 * std::log2(static_cast<double>(f.size()));
    MESSAGE("worst touched " << worst << " bound " << bound);
    CHECK(static_cast<double>(worst) <= bound);
}

TEST_CASE("moving subtrees keeps answers") {
    MarkedAncestorForest f(2);
    NaiveMarkedAncestor g;
    SplitMix64 rng(8);
    std::vector<MaNode> ids{0};
    for (int i = 0; i < 2000; ++i) {
        const MaNode p = ids[rng.below(ids.size())];
        const MaNode v = f.add_leaf(p);
        g.add_leaf_with_id(p, v);
        ids.push_back(v);
    }
    for (int op = 0; op < 3000; ++op) {
        const MaNode v = ids[rng.below(ids.size())];
        const int inst = static_cast<int>(rng.below(2));
        switch (rng.below(4)) {
            case 0:
                f.mark(v, inst);
                g.mark(v, inst);
                break;
            case 1:
                f.unmark(v, inst);
                g.unmark(v, inst);
                break;
            case 2: {
                if (v == 0) break;
                const MaNode np = ids[rng.below(ids.size())];
                bool inside = false;
                for (MaNode u = np; u != -1; u = g.parent(u)) inside |= u == v;
                if (inside) break;
                f.move_subtree(v, np);
                g.move_subtree(v, np);
                break;
            }
            default:
                REQUIRE(f.lowest_marked_ancestor(v, inst) == g.lowest_marked_ancestor(v, inst));
        }
        if (op % 500 == 0) require_clean(f);
    }
    require_clean(f);
    f.repartition();
    require_clean(f);
    for (MaNode v : ids)
        for (int inst = 0; inst < 2; ++inst) REQUIRE(f.lowest_marked_ancestor(v, inst) == g.lowest_marked_ancestor(v, inst));
}
