// Acceptance checks. Prints one PASS/FAIL line per criterion; exits non-zero on any FAIL.
// `acceptance --calibrate` prints the packing, overlap and walk maxima on seeds 0-9.
#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <numbers>
#include <sstream>
#include <string>
#include <tuple>
#include <unordered_map>
#include <vector>

#include "fatloc/error.hpp"
#include "fatloc/harness.hpp"
#include "fatloc/locate1d.hpp"
#include "fatloc/locate2d.hpp"
#include "fatloc/marked_ancestor.hpp"
#include "fatloc/rng.hpp"

using namespace fatloc;

namespace {

// Frozen from `acceptance --calibrate` (seeds 0-9), 25% headroom, rounded up.
constexpr double kPack = 20;    // |S_R| <= kPack * beta
constexpr double kOverlap = 7; // regions meeting a leaf <= kOverlap * beta
constexpr double kWalk = 3;    // update walk <= kWalk * (log2 rho + 1)

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

const CellExtent kUnit{{0.0, 0.0}, 1.0, 0};

// ---------------------------------------------------------------- helpers

struct Run {
    int code = -1;
    double seconds = 0;
};

Run run_cli(const std::string& args) {
    const std::string cmd = std::string(FATLOC_CLI) + " " + args + " > /dev/null";
    const auto t0 = std::chrono::steady_clock::now();
    const int st = std::system(cmd.c_str());
    Run r;
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    r.code = WIFEXITED(st) ? WEXITSTATUS(st) : -1;
    return r;
}

struct CellHash {
    std::size_t operator()(const CellKey& c) const {
        return std::hash<std::uint64_t>()(c.ix * 0x9E3779B97F4A7C15ULL ^ (c.iy + 0x632BE59BD9B4E019ULL * (c.depth + 1)));
    }
};

// Balance violations by a scan of every leaf against the coarser leaf across each side.
std::size_t balance_violations(const Quadtree& t) {
    std::unordered_map<CellKey, NodeId, CellHash> by_cell;
    for (NodeId n = 0; n < t.node_capacity(); ++n)
        if (t.alive(n)) by_cell[t.node(n).cell] = n;
    auto comp = [&](NodeId n) {
        while (t.node(n).parent != kNoNode && !t.node(t.node(n).parent).compressed) n = t.node(n).parent;
        return n;
    };
    std::vector<std::pair<int, int>> dirs;
    if (t.dimension() == 1)
        dirs = {{-1, 0}, {1, 0}};
    else
        for (int dy = -1; dy <= 1; ++dy)
            for (int dx = -1; dx <= 1; ++dx)
                if (dx || dy) dirs.emplace_back(dx, dy);
    std::size_t bad = 0;
    for (NodeId n = 0; n < t.node_capacity(); ++n) {
        if (!t.alive(n) || !t.node(n).is_leaf()) continue;
        const QuadNode& v = t.node(n);
        const std::int64_t lim = std::int64_t{1} << v.cell.depth;
        const int alpha = v.kind == NodeKind::True ? 2 : 4;
        const NodeId cv = comp(n);
        for (auto [dx, dy] : dirs) {
            const std::int64_t tx = static_cast<std::int64_t>(v.cell.ix) + dx, ty = static_cast<std::int64_t>(v.cell.iy) + dy;
            if (tx < 0 || ty < 0 || tx >= lim || ty >= lim) continue;
            for (int d = v.cell.depth; d >= 0; --d) {
                const int up = v.cell.depth - d;
                const CellKey k{static_cast<std::uint64_t>(tx) >> up, static_cast<std::uint64_t>(ty) >> up, d};
                auto it = by_cell.find(k);
                if (it == by_cell.end()) continue;
                const NodeId m = it->second;
                if (d < v.cell.depth && t.node(m).is_leaf() && comp(m) == cv && (up >= 8 || (1 << up) > alpha)) ++bad;
                break;
            }
        }
    }
    return bad;
}

// Tags and marks from the definitions, by scanning every node.
RegionStore::Assignment expected(const RegionStore& s, RegionHandle h) {
    const Quadtree& t = s.tree();
    const ConvexRegion& r = s.region(h);
    const double target = r.diam() / (4 * s.beta());
    int dd = 0;
    while (dd < kMaxDepth && t.side_at(dd + 1) >= target) ++dd;
    RegionStore::Assignment a;
    for (NodeId n = 0; n < t.node_capacity(); ++n) {
        if (!t.alive(n)) continue;
        const QuadNode& v = t.node(n);
        const CellExtent e = t.extent(n);
        if (!region_intersects_cell(r, e)) continue;
        const int pd = v.parent == kNoNode ? -1 : t.node(v.parent).cell.depth;
        if (v.cell.depth >= dd && pd < dd) {
            a.tags.push_back(n);
            const Point2 c = e.center(), m = r.rep();
            a.marks.emplace_back(n, c.x == m.x && c.y == m.y ? 0 : wedge_index(c, m, s.wedges()));
        } else if (v.cell.depth < dd && v.is_leaf()) {
            a.tags.push_back(n);
        } else if (v.cell.depth < dd && v.compressed) {
            const CellExtent w = t.extent(v.child[0]);
            const bool in_w = r.bbox_lo().x >= w.anchor.x && r.bbox_lo().y >= w.anchor.y &&
                              r.bbox_hi().x <= w.anchor.x + w.side && r.bbox_hi().y <= w.anchor.y + w.side;
            if (!in_w) a.tags.push_back(n);
        }
    }
    std::sort(a.tags.begin(), a.tags.end());
    std::sort(a.marks.begin(), a.marks.end());
    return a;
}

// Replays a workload op by op, calling after() following each mutation.
template <class Store>
void soak(Store& s, const Scene& sc, std::size_t ops, double rho, std::uint64_t seed, const std::function<void()>& after) {
    const auto work = gen_workload(sc, ops, rho, seed);
    std::vector<std::uint32_t> handle;
    if constexpr (std::is_same_v<Store, RegionStore>) {
        for (auto h : s.build(sc.regions)) handle.push_back(h);
    } else {
        for (auto h : s.build(sc.intervals)) handle.push_back(h);
    }
    for (const WorkOp& op : work) {
        if (op.kind == OpKind::Query) continue;
        if constexpr (std::is_same_v<Store, RegionStore>) {
            if (op.kind == OpKind::LocalUpdate) s.local_update(handle[op.slot], op.region, rho);
            if (op.kind == OpKind::Insert) {
                handle.resize(op.slot + 1);
                handle[op.slot] = s.insert(op.region);
            }
        } else {
            if (op.kind == OpKind::LocalUpdate) s.local_update(handle[op.slot], op.interval, rho);
            if (op.kind == OpKind::Insert) {
                handle.resize(op.slot + 1);
                handle[op.slot] = s.insert(op.interval);
            }
        }
        if (op.kind == OpKind::Delete) s.erase(handle[op.slot]);
        after();
    }
}

Scene scene2(std::size_t n, double beta, std::uint64_t seed) {
    Scene sc;
    sc.config.beta = beta;
    sc.regions = gen_scene(n, beta, seed);
    return sc;
}

Scene scene1(std::size_t n, std::uint64_t seed) {
    Scene sc;
    sc.config.dim = 1;
    sc.intervals = gen_intervals(n, seed);
    return sc;
}

// ---------------------------------------------------------------- geometric scans

struct GeomStats {
    double pack = 0;     // max |S_R| / beta
    double overlap = 0;  // max regions per leaf / beta
    std::size_t nesting_bad = 0;
    std::size_t ray_bad = 0;
    std::size_t rays = 0;
    std::size_t pairs = 0;
};

// One large disk ringed by up to n-1 much smaller ones, so marked cells nest.
std::vector<ConvexRegion> gen_cluster(std::size_t n, std::uint64_t seed) {
    SplitMix64 rng(seed);
    const double big = rng.uniform(0.05, 0.12);
    std::vector<ConvexRegion> rs{ConvexRegion::disk({0.5, 0.5}, big)};
    for (int tries = 0; rs.size() < n && tries < 20000; ++tries) {
        const double r = big * std::exp2(rng.uniform(-8, -1.5));
        const double a = rng.uniform(0, 2 * std::numbers::pi), d = big + r + rng.uniform(0, big);
        const auto c = ConvexRegion::disk({0.5 + d * std::cos(a), 0.5 + d * std::sin(a)}, r);
        if (std::none_of(rs.begin(), rs.end(), [&](const ConvexRegion& o) { return regions_intersect(o, c); })) rs.push_back(c);
    }
    return rs;
}

void geometry_scan(const std::vector<ConvexRegion>& shapes, double beta, std::uint64_t seed, GeomStats& st, bool deep) {
    RegionStore s(kUnit, {.beta = beta});
    const auto hs = s.build(shapes);
    const Quadtree& t = s.tree();
    for (RegionHandle h : hs) st.pack = std::max(st.pack, s.assignment(h).tags.size() / beta);
    for (NodeId c = 0; c < t.node_capacity(); ++c) {
        if (!t.alive(c) || !t.node(c).is_leaf()) continue;
        std::size_t k = 0;
        for (const auto& r : shapes) k += region_intersects_cell(r, t.extent(c));
        st.overlap = std::max(st.overlap, k / beta);
    }
    if (!deep) return;

    const WedgeParams& w = s.wedges();
    // nesting: C2 marked below C1 in the same wedge tree keeps R1 out of C2's subtree
    for (NodeId c2 = 0; c2 < t.node_capacity(); ++c2) {
        if (!t.alive(c2)) continue;
        for (const auto& [r2, i] : s.marks_at(c2)) {
            for (NodeId c1 = t.node(c2).parent; c1 != kNoNode; c1 = t.node(c1).parent) {
                for (const auto& [r1, j] : s.marks_at(c1)) {
                    if (j != i || r1 == r2) continue;
                    ++st.pairs;
                    std::vector<NodeId> stack{c2};
                    while (!stack.empty()) {
                        const NodeId c3 = stack.back();
                        stack.pop_back();
                        if (region_intersects_cell(s.region(r1), t.extent(c3))) {
                            ++st.nesting_bad;
                            break;
                        }
                        for (NodeId k : t.node(c3).child)
                            if (k != kNoNode) stack.push_back(k);
                    }
                }
            }
        }
    }
    // rays from the corners at the wedge ends and middle, plus random interior rays
    SplitMix64 rng(seed ^ 0xABCDEF);
    for (NodeId c = 0; c < t.node_capacity(); ++c) {
        if (!t.alive(c)) continue;
        const CellExtent e = t.extent(c);
        for (const auto& [h, i] : s.marks_at(c)) {
            auto shoot = [&](Point2 o, double a) {
                ++st.rays;
                if (!ray_hits_region(s.region(h), o, {std::cos(a), std::sin(a)})) ++st.ray_bad;
            };
            for (int k = 0; k < 4; ++k) {
                const Point2 o{e.anchor.x + e.side * (k & 1), e.anchor.y + e.side * (k >> 1)};
                shoot(o, i * w.phi);
                shoot(o, (i + 0.5) * w.phi);
                shoot(o, (i + 1) * w.phi - 1e-9);
            }
            for (int k = 0; k < 8; ++k)
                shoot({e.anchor.x + e.side * rng.uniform(), e.anchor.y + e.side * rng.uniform()}, (i + rng.uniform()) * w.phi);
        }
    }
}

double max_walk(int dim, std::size_t n, double rho, std::uint64_t seed) {
    ExperimentConfig cfg;
    cfg.dim = dim;
    cfg.sizes = {n};
    cfg.ops = 4000;
    cfg.rho = rho;
    cfg.seed = seed;
    for (const auto& row : run_experiment(cfg))
        if (row.op_kind == "local_update") return static_cast<double>(row.max[6]);
    return 0;
}

// ---------------------------------------------------------------- criteria

Outcome c1() {
    const Run r = run_cli("verify --dim 1 --n 10000 --ops 100000 --seed 7");
    return {r.code == 0 && r.seconds < 60, "exit " + std::to_string(r.code) + " in " + fmt("%.1f", r.seconds) + " s (limit 60 s)"};
}

Outcome c2() {
    const Run r = run_cli("verify --dim 2 --n 2000 --ops 50000 --seed 7");
    return {r.code == 0 && r.seconds < 120, "exit " + std::to_string(r.code) + " in " + fmt("%.1f", r.seconds) + " s (limit 120 s)"};
}

Outcome c3() {
    std::size_t checks = 0, bad = 0;
    {
        RegionStore s(kUnit, {.beta = 2.0});
        soak(s, scene2(500, 2.0, 31), 10000, 4.0, 32, [&] {
            ++checks;
            bad += balance_violations(s.tree());
        });
    }
    {
        IntervalSet s(Interval1{0, 1});
        soak(s, scene1(2000, 33), 10000, 4.0, 34, [&] {
            ++checks;
            bad += balance_violations(s.tree());
        });
    }
    return {bad == 0 && checks > 0, std::to_string(checks) + " post-mutation scans (2D and 1D soaks), " + std::to_string(bad) + " violations"};
}

Outcome c4(std::ostream& csv) {
    bool ok = true;
    std::string d;
    csv << "n,beta,nodes,tag_entries,mark_entries,nodes_per_n,tags_per_n\n";
    for (std::size_t n : {std::size_t{1} << 10, std::size_t{1} << 13, std::size_t{1} << 16}) {
        RegionStore s(kUnit, {.beta = 1.0});
        s.build(gen_scene(n, 1.0, scene_seed(4, n)));
        const double nodes = static_cast<double>(s.tree().node_count()), tags = static_cast<double>(s.tag_entries());
        csv << n << ",1," << s.tree().node_count() << ',' << s.tag_entries() << ',' << s.mark_entries() << ','
            << fmt("%.4f", nodes / n) << ',' << fmt("%.4f", tags / n) << '\n';
        ok = ok && nodes <= 8.0 * n && tags <= kPack * 1.0 * n;
        d += "n=" + std::to_string(n) + ": nodes/n " + fmt("%.2f", nodes / n) + ", tags/n " + fmt("%.2f", tags / n) + "; ";
    }
    return {ok, d + "limits 8 and c_pack=" + fmt("%.2f", kPack)};
}

struct Fit {
    double alpha = 0, gamma = 0, r2 = 0;
};

Fit least_squares(const std::vector<double>& x, const std::vector<double>& y) {
    const double n = static_cast<double>(x.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sx += x[i];
        sy += y[i];
        sxx += x[i] * x[i];
        sxy += x[i] * y[i];
    }
    Fit f;
    f.alpha = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    f.gamma = (sy - f.alpha * sx) / n;
    double ss_res = 0, ss_tot = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double p = f.alpha * x[i] + f.gamma;
        ss_res += (y[i] - p) * (y[i] - p);
        ss_tot += (y[i] - sy / n) * (y[i] - sy / n);
    }
    f.r2 = ss_tot > 0 ? 1 - ss_res / ss_tot : 1;
    return f;
}

std::vector<ExperimentRow> scaling_rows[3];

void run_scaling(std::ostream& csv) {
    std::vector<ExperimentRow> all;
    for (int dim : {1, 2}) {
        ExperimentConfig cfg;
        cfg.dim = dim;
        for (int e = 10; e <= 16; ++e) cfg.sizes.push_back(std::size_t{1} << e);
        cfg.ops = 6000;
        cfg.rho = 4;
        cfg.beta = 1;
        cfg.seed = 5;
        scaling_rows[dim] = run_experiment(cfg);
        all.insert(all.end(), scaling_rows[dim].begin(), scaling_rows[dim].end());
    }
    write_csv(csv, all);
}

Outcome c5() {
    bool ok = true;
    std::string d;
    for (int dim : {1, 2}) {
        std::vector<double> x, y;
        double worst = 0;
        for (const auto& row : scaling_rows[dim]) {
            const double lg = std::log2(static_cast<double>(row.n));
            if (row.op_kind == "query") {
                x.push_back(lg);
                y.push_back(row.mean[0]);
            }
            if (row.op_kind != "build") {
                worst = std::max(worst, row.max[0] / lg);
                ok = ok && row.max[0] <= 4 * lg;
            }
        }
        const Fit f = least_squares(x, y);
        ok = ok && f.r2 >= 0.95;
        d += std::to_string(dim) + "D: edges ~ " + fmt("%.2f", f.alpha) + " log n " + fmt("%+.2f", f.gamma) + ", R^2 " +
             fmt("%.4f", f.r2) + ", max/log n " + fmt("%.2f", worst) + "; ";
    }
    return {ok, d + "limits R^2 >= 0.95, max <= 4 log n"};
}

Outcome c6() {
    bool ok = true;
    std::string d;
    for (int dim : {1, 2}) {
        double lo = 0, hi = 0;
        for (const auto& row : scaling_rows[dim]) {
            if (row.op_kind != "local_update") continue;
            if (row.n == (1u << 10)) lo = static_cast<double>(row.max[8]);
            if (row.n == (1u << 16)) hi = static_cast<double>(row.max[8]);
        }
        ok = ok && lo > 0 && hi <= 1.5 * lo;
        d += std::to_string(dim) + "D max update work " + fmt("%.0f", lo) + " -> " + fmt("%.0f", hi) + " (ratio " +
             fmt("%.2f", hi / lo) + "); ";
    }
    double worst = 0;
    for (int dim : {1, 2})
        for (double rho : {2.0, 8.0, 32.0, 128.0})
            for (std::uint64_t seed : {10, 11, 12}) {
                const double wk = max_walk(dim, 1u << 12, rho, seed);
                worst = std::max(worst, wk / (std::log2(rho) + 1));
            }
    ok = ok && worst <= kWalk;
    d += "max walk/(log2 rho + 1) " + fmt("%.2f", worst) + " vs c=" + fmt("%.2f", kWalk);
    return {ok, d};
}

Outcome c7() {
    const int K = 4;
    MarkedAncestorForest f(K);
    NaiveMarkedAncestor g;
    Counters c;
    f.set_counters(&c);
    SplitMix64 rng(7);
    std::vector<MaNode> ids{0};
    auto pick = [&] { return ids[rng.below(ids.size())]; };
    while (ids.size() < 10000) {
        const MaNode p = pick();
        const MaNode v = f.add_leaf(p);
        g.add_leaf_with_id(p, v);
        ids.push_back(v);
    }
    std::size_t mismatches = 0, queries = 0;
    double worst = 0;
    for (int op = 0; op < 100000; ++op) {
        const auto r = rng.below(100);
        if (r < 25) {
            const MaNode v = pick();
            const int i = static_cast<int>(rng.below(K));
            f.mark(v, i);
            g.mark(v, i);
        } else if (r < 40) {
            const MaNode v = pick();
            const int i = static_cast<int>(rng.below(K));
            f.unmark(v, i);
            g.unmark(v, i);
        } else if (r < 50) {
            const MaNode p = pick();
            const MaNode v = f.add_leaf(p);
            g.add_leaf_with_id(p, v);
            ids.push_back(v);
        } else {
            const MaNode v = pick();
            const int i = static_cast<int>(rng.below(K));
            c.reset();
            const auto got = f.lowest_marked_ancestor(v, i);
            ++queries;
            mismatches += got != g.lowest_marked_ancestor(v, i);
            worst = std::max(worst, c.ma_nodes_touched / std::log2(static_cast<double>(f.size())));
        }
    }
    return {mismatches == 0 && worst <= 4, std::to_string(queries) + " queries, " + std::to_string(mismatches) +
                                               " mismatches, max touched/log2 n " + fmt("%.2f", worst) + " (limit 4)"};
}

using KeyedAssignment = std::pair<std::vector<std::tuple<std::uint64_t, std::uint64_t, int>>,
                                  std::vector<std::tuple<std::uint64_t, std::uint64_t, int, int>>>;

KeyedAssignment keyed(const RegionStore& s, RegionHandle h) {
    KeyedAssignment k;
    const auto& a = s.assignment(h);
    for (NodeId n : a.tags) {
        const CellKey c = s.tree().node(n).cell;
        k.first.emplace_back(c.ix, c.iy, c.depth);
    }
    for (auto [n, i] : a.marks) {
        const CellKey c = s.tree().node(n).cell;
        k.second.emplace_back(c.ix, c.iy, c.depth, i);
    }
    std::sort(k.first.begin(), k.first.end());
    std::sort(k.second.begin(), k.second.end());
    return k;
}

Outcome c8() {
    RegionStore s(kUnit, {.beta = 2.0});
    soak(s, scene2(1000, 2.0, 81), 10000, 4.0, 82, [] {});
    std::vector<RegionHandle> live;
    std::vector<ConvexRegion> shapes;
    std::size_t defn_diffs = 0;
    for (RegionHandle h = 0; live.size() < s.size(); ++h) {
        if (!s.valid(h)) continue;
        live.push_back(h);
        shapes.push_back(s.region(h));
        defn_diffs += !(s.assignment(h) == expected(s, h));
    }
    RegionStore fresh(kUnit, {.beta = 2.0});
    const auto fh = fresh.build(shapes);
    std::size_t rebuild_diffs = 0;
    for (std::size_t i = 0; i < live.size(); ++i) rebuild_diffs += keyed(s, live[i]) != keyed(fresh, fh[i]);
    const bool same_tree = s.tree().node_count() == fresh.tree().node_count();
    return {defn_diffs == 0 && rebuild_diffs == 0 && same_tree,
            std::to_string(live.size()) + " regions; differ from definition scan: " + std::to_string(defn_diffs) +
                ", from fresh rebuild: " + std::to_string(rebuild_diffs) + "; nodes " +
                std::to_string(s.tree().node_count()) + " vs rebuilt " + std::to_string(fresh.tree().node_count())};
}

Outcome c9() {
    bool ok = true;
    std::string d;
    auto describe = [](const GeomStats& b) {
        return "nesting " + std::to_string(b.nesting_bad) + "/" + std::to_string(b.pairs) + " pairs bad, rays " +
               std::to_string(b.ray_bad) + "/" + std::to_string(b.rays) + " missed";
    };
    for (double beta : {1.0, 2.0, 4.0}) {
        GeomStats b, cl;
        for (std::uint64_t seed = 100; seed < 150; ++seed) {
            geometry_scan(gen_scene(200, beta, seed), beta, seed, b, true);
            geometry_scan(gen_cluster(200, seed), beta, seed, cl, true);
        }
        ok = ok && b.pack <= kPack && b.overlap <= kOverlap && b.nesting_bad == 0 && b.ray_bad == 0 && cl.nesting_bad == 0;
        d += "beta " + fmt("%.0f", beta) + ": |S_R|/beta " + fmt("%.2f", b.pack) + ", overlap/beta " + fmt("%.2f", b.overlap) +
             ", " + describe(b) + " [clustered: " + describe(cl) + "]; ";
    }
    return {ok, d + "c_pack " + fmt("%.2f", kPack) + ", c_ovl " + fmt("%.2f", kOverlap)};
}

Outcome c10() {
    const std::string dir = "acceptance_det";
    std::filesystem::create_directories(dir);
    bool ok = true;
    std::string d;
    for (int dim : {1, 2}) {
        const std::string base = "bench --dim " + std::to_string(dim) + " --sizes 1024,4096 --ops 3000 --rho 4 --beta 1 --seed 3 --csv ";
        const std::string a = dir + "/a" + std::to_string(dim) + ".csv", b = dir + "/b" + std::to_string(dim) + ".csv";
        const Run ra = run_cli(base + a), rb = run_cli(base + b);
        std::ifstream fa(a, std::ios::binary), fb(b, std::ios::binary);
        std::stringstream sa, sb;
        sa << fa.rdbuf();
        sb << fb.rdbuf();
        const bool same = ra.code == 0 && rb.code == 0 && !sa.str().empty() && sa.str() == sb.str();
        ok = ok && same;
        d += std::to_string(dim) + "D " + (same ? "identical" : "different") + " (" + std::to_string(sa.str().size()) + " bytes); ";
    }
    return {ok, d};
}

int calibrate() {
    for (double beta : {1.0, 2.0, 4.0}) {
        GeomStats st;
        for (std::uint64_t seed = 0; seed < 10; ++seed) geometry_scan(gen_scene(200, beta, seed), beta, seed, st, false);
        std::cout << "beta " << beta << ": max |S_R|/beta " << st.pack << ", max leaf overlap/beta " << st.overlap << '\n';
    }
    double worst = 0;
    for (int dim : {1, 2})
        for (double rho : {2.0, 8.0, 32.0, 128.0})
            for (std::uint64_t seed = 0; seed < 10; ++seed) {
                const double wk = max_walk(dim, 1u << 12, rho, seed);
                std::cout << "dim " << dim << " rho " << rho << " seed " << seed << ": max walk " << wk << '\n';
                worst = std::max(worst, wk / (std::log2(rho) + 1));
            }
    std::cout << "max walk/(log2 rho + 1): " << worst << '\n';
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    if (argc > 1 && std::string(argv[1]) == "--calibrate") return calibrate();
    std::ofstream sizes_csv("acceptance_sizes.csv", std::ios::binary), scaling_csv("acceptance_scaling.csv", std::ios::binary);
    run_scaling(scaling_csv);
    const std::vector<std::function<Outcome()>> checks{c1, c2, c3, [&] { return c4(sizes_csv); }, c5, c6, c7, c8, c9, c10};
    int failed = 0;
    for (std::size_t i = 0; i < checks.size(); ++i) {
        Outcome o;
        try {
            o = checks[i]();
        } catch (const std::exception& e) {
            o = {false, std::string("threw ") + e.what()};
        }
        failed += !o.pass;
        std::cout << "criterion " << (i + 1) << ": " << (o.pass ? "PASS" : "FAIL") << " - " << o.detail << std::endl;
    }
    std::cout << (failed ? std::to_string(failed) + " criteria failed" : "all criteria passed") << std::endl;
    return failed ? 1 : 0;
}
