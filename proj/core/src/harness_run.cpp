#include <algorithm>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <map>
#include <numbers>
#include <ostream>

#include "fatloc/error.hpp"
#include "fatloc/harness.hpp"
#include "fatloc/locate1d.hpp"
#include "fatloc/locate2d.hpp"
#include "fatloc/rng.hpp"

namespace fatloc {

const char* op_name(OpKind k) {
    switch (k) {
        case OpKind::Query: return "query";
        case OpKind::LocalUpdate: return "local_update";
        case OpKind::Insert: return "insert";
        case OpKind::Delete: return "delete";
    }
    return "?";
}

double similar_scale(double rho) {
    if (!(rho >= 1)) fail(ErrorCode::InvalidArgument, "rho must be >= 1");
    return 0.5 * (std::sqrt(rho * rho + 8 * rho) - rho);
}

std::uint64_t scene_seed(std::uint64_t seed, std::size_t n) {
    return SplitMix64(seed * 0x100000001B3ULL + n).next();
}

std::uint64_t workload_seed(std::uint64_t seed, std::size_t n) {
    return SplitMix64(seed * 0x100000001B3ULL + n + 0x5EED).next();
}

namespace {

ConvexRegion transformed(const ConvexRegion& r, Point2 shift, double s) {
    const Point2 m = r.rep();
    if (const auto* d = std::get_if<Disk>(&r.shape()))
        return ConvexRegion::disk({d->center.x + shift.x, d->center.y + shift.y}, d->radius * s);
    std::vector<Point2> vs;
    for (const Point2& v : std::get<ConvexPolygon>(r.shape()).vertices)
        vs.push_back({m.x + s * (v.x - m.x) + shift.x, m.y + s * (v.y - m.y) + shift.y});
    return ConvexRegion::polygon(vs);
}

// Live slots with O(1) random pick and removal.
class LiveSet {
public:
    void add(std::size_t slot) {
        if (pos_.size() <= slot) pos_.resize(slot + 1, kNone);
        pos_[slot] = items_.size();
        items_.push_back(slot);
    }
    void remove(std::size_t slot) {
        const std::size_t p = pos_[slot];
        items_[p] = items_.back();
        pos_[items_[p]] = p;
        items_.pop_back();
        pos_[slot] = kNone;
    }
    std::size_t pick(SplitMix64& rng) const { return items_[rng.below(items_.size())]; }
    std::size_t size() const { return items_.size(); }

private:
    static constexpr std::size_t kNone = static_cast<std::size_t>(-1);
    std::vector<std::size_t> items_;
    std::vector<std::size_t> pos_;
};

class Occupancy2 {
public:
    Occupancy2(CellExtent root, double cell, const std::vector<ConvexRegion>* shapes)
        : root_(root), shapes_(shapes) {
        g_ = std::clamp(static_cast<int>(std::ceil(root.side / cell)), 1, 1024);
        cell_ = root.side / g_;
        grid_.resize(static_cast<std::size_t>(g_) * g_);
    }
    void add(std::size_t slot) {
        each_cell((*shapes_)[slot], [&](std::vector<std::size_t>& c) { c.push_back(slot); });
    }
    void remove(std::size_t slot) {
        each_cell((*shapes_)[slot], [&](std::vector<std::size_t>& c) { std::erase(c, slot); });
    }
    bool free(const ConvexRegion& r, std::size_t ignore) const {
        bool ok = true;
        const_cast<Occupancy2*>(this)->each_cell(r, [&](std::vector<std::size_t>& c) {
            for (std::size_t k : c) {
                if (!ok || k == ignore) continue;
                const ConvexRegion& o = (*shapes_)[k];
                if (o.bbox_hi().x < r.bbox_lo().x || r.bbox_hi().x < o.bbox_lo().x || o.bbox_hi().y < r.bbox_lo().y ||
                    r.bbox_hi().y < o.bbox_lo().y)
                    continue;
                if (regions_intersect(o, r)) ok = false;
            }
        });
        return ok;
    }

private:
    template <class F>
    void each_cell(const ConvexRegion& r, F&& f) {
        auto idx = [&](double v, double a) { return std::clamp(static_cast<int>(std::floor((v - a) / cell_)), 0, g_ - 1); };
        const int x0 = idx(r.bbox_lo().x, root_.anchor.x), x1 = idx(r.bbox_hi().x, root_.anchor.x);
        const int y0 = idx(r.bbox_lo().y, root_.anchor.y), y1 = idx(r.bbox_hi().y, root_.anchor.y);
        for (int y = y0; y <= y1; ++y)
            for (int x = x0; x <= x1; ++x) f(grid_[static_cast<std::size_t>(y) * g_ + x]);
    }

    CellExtent root_;
    const std::vector<ConvexRegion>* shapes_;
    int g_ = 1;
    double cell_ = 1;
    std::vector<std::vector<std::size_t>> grid_;
};

bool inside(const CellExtent& e, const ConvexRegion& r) {
    return r.bbox_lo().x >= e.anchor.x && r.bbox_lo().y >= e.anchor.y && r.bbox_hi().x < e.anchor.x + e.side &&
           r.bbox_hi().y < e.anchor.y + e.side;
}

constexpr int kUpdateTries = 64;
constexpr int kInsertTries = 1000;

std::vector<WorkOp> workload_2d(const Scene& scene, std::size_t ops, double rho, SplitMix64& rng) {
    const CellExtent root = scene.config.root;
    const SizeRange sr = size_range(std::max<std::size_t>(scene.size(), 1), 2, root.side);
    const double sc = similar_scale(rho);
    std::vector<ConvexRegion> shapes = scene.regions;
    double cell = 2 * sr.hi;
    for (const ConvexRegion& r : shapes) cell = std::max(cell, r.diam());
    shapes.reserve(shapes.size() + ops);
    Occupancy2 occ(root, cell, &shapes);
    LiveSet live;
    for (std::size_t i = 0; i < shapes.size(); ++i) {
        occ.add(i);
        live.add(i);
    }

    auto size_ok = [&](const ConvexRegion& old, const ConvexRegion& nu) {
        return nu.diam() <= std::max(2 * sr.hi, old.diam()) && nu.diam() >= std::min(2 * sr.lo, old.diam());
    };
    auto fresh = [&]() {
        for (int t = 0; t < kInsertTries; ++t) {
            const double r = rng.log_uniform(sr.lo, sr.hi);
            const ConvexRegion c = ConvexRegion::disk({rng.uniform(root.anchor.x + r, root.anchor.x + root.side - r),
                                                       rng.uniform(root.anchor.y + r, root.anchor.y + root.side - r)},
                                                      r);
            if (inside(root, c) && occ.free(c, static_cast<std::size_t>(-1))) return c;
        }
        fail(ErrorCode::PlacementFailure, "no room for an inserted region");
    };

    std::vector<WorkOp> out;
    out.reserve(ops);
    while (out.size() < ops) {
        const double u = rng.uniform();
        WorkOp op;
        if (u < 0.6 || live.size() == 0 || (u >= 0.9 && (ops - out.size() < 2 || live.size() < 2))) {
            op.kind = OpKind::Query;
            if (live.size() > 0 && rng.below(2) == 0) {
                const ConvexRegion& r = shapes[live.pick(rng)];
                const double a = rng.uniform(0.0, 2 * std::numbers::pi);
                const double d = r.r_inner() * std::sqrt(rng.uniform());
                op.point = {r.rep().x + d * std::cos(a), r.rep().y + d * std::sin(a)};
            } else {
                op.point = {rng.uniform(root.anchor.x, root.anchor.x + root.side),
                            rng.uniform(root.anchor.y, root.anchor.y + root.side)};
            }
            out.push_back(op);
        } else if (u < 0.9) {
            op.kind = OpKind::LocalUpdate;
            op.slot = live.pick(rng);
            const ConvexRegion old = shapes[op.slot];
            op.region = old;  // identity when nothing else fits
            for (int t = 0; t < kUpdateTries; ++t) {
                const double a = rng.uniform(0.0, 2 * std::numbers::pi);
                const double d = rng.uniform(0.0, 0.5 * (rho - 1) * old.diam());
                const double s = std::exp(rng.uniform(-std::log(sc), std::log(sc)));
                const ConvexRegion c = transformed(old, {d * std::cos(a), d * std::sin(a)}, s);
                if (!inside(root, c) || !size_ok(old, c) || !is_rho_similar(old, c, rho) || !occ.free(c, op.slot)) continue;
                op.region = c;
                break;
            }
            occ.remove(op.slot);
            shapes[op.slot] = op.region;
            occ.add(op.slot);
            out.push_back(op);
        } else {
            WorkOp ins;
            ins.kind = OpKind::Insert;
            ins.region = fresh();
            ins.slot = shapes.size();
            WorkOp del;
            del.kind = OpKind::Delete;
            del.slot = live.pick(rng);
            shapes.push_back(ins.region);
            occ.add(ins.slot);
            live.add(ins.slot);
            occ.remove(del.slot);
            live.remove(del.slot);
            out.push_back(ins);
            out.push_back(del);
        }
    }
    return out;
}

std::vector<WorkOp> workload_1d(const Scene& scene, std::size_t ops, double rho, SplitMix64& rng) {
    const Interval1 root = scene.config.root1;
    const SizeRange sr = size_range(std::max<std::size_t>(scene.size(), 1), 1, root.hi - root.lo);
    const double sc = similar_scale(rho);
    std::vector<Interval1> ivs = scene.intervals;
    std::map<double, std::size_t> by_lo;
    LiveSet live;
    for (std::size_t i = 0; i < ivs.size(); ++i) {
        by_lo[ivs[i].lo] = i;
        live.add(i);
    }
    auto free = [&](const Interval1& iv, std::size_t ignore) {
        auto it = by_lo.upper_bound(iv.hi);
        while (it != by_lo.begin()) {
            --it;
            if (it->second == ignore) continue;
            return !ivs[it->second].overlaps(iv);
        }
        return true;
    };
    auto fits = [&](const Interval1& iv) { return iv.lo >= root.lo && iv.hi < root.hi && iv.lo < iv.hi; };
    auto fresh = [&]() {
        for (int t = 0; t < kInsertTries; ++t) {
            const double len = rng.log_uniform(sr.lo, sr.hi);
            const double lo = rng.uniform(root.lo, root.hi - len);
            const Interval1 iv{lo, lo + len};
            if (fits(iv) && free(iv, static_cast<std::size_t>(-1))) return iv;
        }
        fail(ErrorCode::PlacementFailure, "no room for an inserted interval");
    };

    std::vector<WorkOp> out;
    out.reserve(ops);
    while (out.size() < ops) {
        const double u = rng.uniform();
        WorkOp op;
        if (u < 0.6 || live.size() == 0 || (u >= 0.9 && (ops - out.size() < 2 || live.size() < 2))) {
            op.kind = OpKind::Query;
            if (live.size() > 0 && rng.below(2) == 0) {
                const Interval1& iv = ivs[live.pick(rng)];
                op.point = {rng.uniform(iv.lo, iv.hi), 0.0};
            } else {
                op.point = {rng.uniform(root.lo, root.hi), 0.0};
            }
            out.push_back(op);
        } else if (u < 0.9) {
            op.kind = OpKind::LocalUpdate;
            op.slot = live.pick(rng);
            const Interval1 old = ivs[op.slot];
            op.interval = old;
            const double len = old.diameter();
            for (int t = 0; t < kUpdateTries; ++t) {
                const double d = rng.uniform(-0.5 * (rho - 1) * len, 0.5 * (rho - 1) * len);
                const double s = std::exp(rng.uniform(-std::log(sc), std::log(sc)));
                const double mid = old.midpoint() + d, half = 0.5 * len * s;
                if (!(mid - half < mid + half)) continue;
                const Interval1 c{mid - half, mid + half};
                if (!fits(c) || c.diameter() > std::max(sr.hi, len) || c.diameter() < std::min(sr.lo, len)) continue;
                if (!is_rho_similar(old, c, rho) || !free(c, op.slot)) continue;
                op.interval = c;
                break;
            }
            by_lo.erase(old.lo);
            ivs[op.slot] = op.interval;
            by_lo[op.interval.lo] = op.slot;
            out.push_back(op);
        } else {
            WorkOp ins;
            ins.kind = OpKind::Insert;
            ins.interval = fresh();
            ins.slot = ivs.size();
            WorkOp del;
            del.kind = OpKind::Delete;
            del.slot = live.pick(rng);
            ivs.push_back(ins.interval);
            by_lo[ins.interval.lo] = ins.slot;
            live.add(ins.slot);
            by_lo.erase(ivs[del.slot].lo);
            live.remove(del.slot);
            out.push_back(ins);
            out.push_back(del);
        }
    }
    return out;
}

struct Tally {
    std::uint64_t count = 0;
    std::array<std::uint64_t, kCounterCount> sum{};
    std::array<std::uint64_t, kCounterCount> max{};

    void add(const Counters& c) {
        ++count;
        const auto v = counter_values(c);
        for (std::size_t i = 0; i < kCounterCount; ++i) {
            sum[i] += v[i];
            max[i] = std::max(max[i], v[i]);
        }
    }
};

// Live objects in slot order-independent dense form, for the linear scan.
template <class T>
struct Dense {
    std::vector<T> items;
    std::vector<std::size_t> slot_of;
    std::vector<std::size_t> pos;

    void add(std::size_t slot, const T& t) {
        if (pos.size() <= slot) pos.resize(slot + 1, static_cast<std::size_t>(-1));
        pos[slot] = items.size();
        items.push_back(t);
        slot_of.push_back(slot);
    }
    void set(std::size_t slot, const T& t) { items[pos[slot]] = t; }
    void remove(std::size_t slot) {
        const std::size_t p = pos[slot];
        items[p] = items.back();
        slot_of[p] = slot_of.back();
        pos[slot_of[p]] = p;
        items.pop_back();
        slot_of.pop_back();
        pos[slot] = static_cast<std::size_t>(-1);
    }
    std::optional<std::size_t> scan(Point2 q) const {
        std::optional<std::size_t> i;
        if constexpr (std::is_same_v<T, Interval1>)
            i = oracle_query(items, q.x);
        else
            i = oracle_query(items, q);
        if (!i) return std::nullopt;
        return slot_of[*i];
    }
};

std::string slot_text(std::optional<std::size_t> s) { return s ? "slot " + std::to_string(*s) : "none"; }

struct Replay {
    std::array<Tally, 5> tallies;  // build, query, local_update, insert, delete
    std::size_t nodes = 0, tags = 0, marks = 0;
};

template <class Store, class T>
Replay replay(Store& store, Counters& c, const std::vector<T>& initial, const std::vector<WorkOp>& ops, double rho,
              bool check, std::size_t fault_at) {
    Replay out;
    Dense<T> dense;
    std::vector<std::uint32_t> handle;
    std::vector<std::size_t> slot_of_handle;
    auto bind = [&](std::size_t slot, std::uint32_t h) {
        if (handle.size() <= slot) handle.resize(slot + 1);
        handle[slot] = h;
        if (slot_of_handle.size() <= h) slot_of_handle.resize(h + 1);
        slot_of_handle[h] = slot;
    };
    c.reset();
    const auto hs = store.build(initial);
    out.tallies[0].add(c);
    for (std::size_t i = 0; i < hs.size(); ++i) {
        bind(i, hs[i]);
        dense.add(i, initial[i]);
    }
    out.nodes = store.tree().node_count();
    if constexpr (std::is_same_v<T, ConvexRegion>) {
        out.tags = store.tag_entries();
        out.marks = store.mark_entries();
    }
    for (std::size_t i = 0; i < ops.size(); ++i) {
        const WorkOp& op = ops[i];
        const T* payload;
        if constexpr (std::is_same_v<T, ConvexRegion>)
            payload = &op.region;
        else
            payload = &op.interval;
        c.reset();
        switch (op.kind) {
            case OpKind::Query: {
                std::optional<std::uint32_t> got;
                if constexpr (std::is_same_v<T, ConvexRegion>)
                    got = store.query(op.point);
                else
                    got = store.query(op.point.x);
                out.tallies[1].add(c);
                const auto want = dense.scan(op.point);
                std::optional<std::size_t> got_slot = got ? std::optional<std::size_t>(slot_of_handle[*got]) : std::nullopt;
                if (i == fault_at) got_slot = got_slot ? std::nullopt : std::optional<std::size_t>(0);
                if (got_slot != want)
                    fail(ErrorCode::MismatchError, "op " + std::to_string(i) + ": expected " + slot_text(want) + ", got " + slot_text(got_slot));
                break;
            }
            case OpKind::LocalUpdate:
                store.local_update(handle[op.slot], *payload, rho);
                out.tallies[2].add(c);
                dense.set(op.slot, *payload);
                break;
            case OpKind::Insert:
                bind(op.slot, store.insert(*payload));
                out.tallies[3].add(c);
                dense.add(op.slot, *payload);
                break;
            case OpKind::Delete:
                store.erase(handle[op.slot]);
                out.tallies[4].add(c);
                dense.remove(op.slot);
                break;
        }
    }
    if (check) {
        const auto bad = store.check_invariants();
        if (!bad.empty()) fail(ErrorCode::MismatchError, "structure check: " + bad.front());
    }
    return out;
}

}  // namespace

std::vector<WorkOp> gen_workload(const Scene& scene, std::size_t ops, double rho, std::uint64_t seed) {
    if (!(rho >= 1)) fail(ErrorCode::InvalidArgument, "rho must be >= 1");
    SplitMix64 rng(seed);
    return scene.config.dim == 1 ? workload_1d(scene, ops, rho, rng) : workload_2d(scene, ops, rho, rng);
}

const std::array<const char*, kCounterCount>& counter_names() {
    static const std::array<const char*, kCounterCount> names{"edges_examined", "cells_touched",    "tags_changed",
                                                              "marks_changed",  "ma_nodes_touched", "candidates_tested",
                                                              "walk_length",    "eot_steps",        "update_work"};
    return names;
}

std::array<std::uint64_t, kCounterCount> counter_values(const Counters& c) {
    return {c.edges_examined, c.cells_touched,     c.tags_changed, c.marks_changed,
            c.ma_nodes_touched, c.candidates_tested, c.walk_length, c.eot_steps,
            c.cells_touched + c.tags_changed};
}

std::vector<ExperimentRow> run_experiment(const ExperimentConfig& cfg) {
    if (cfg.dim != 1 && cfg.dim != 2) fail(ErrorCode::InvalidArgument, "dim must be 1 or 2");
    std::vector<ExperimentRow> rows;
    for (std::size_t n : cfg.sizes) {
        Scene scene;
        scene.config.dim = cfg.dim;
        scene.config.beta = cfg.beta;
        scene.config.rho = cfg.rho;
        scene.config.a = cfg.a;
        const std::uint64_t ss = scene_seed(cfg.seed, n);
        if (cfg.dim == 1)
            scene.intervals = gen_intervals(n, ss, scene.config.root1);
        else
            scene.regions = gen_scene(n, cfg.beta, ss, scene.config.root);
        const auto ops = gen_workload(scene, cfg.ops, cfg.rho, workload_seed(cfg.seed, n));

        Counters c;
        Replay r;
        if (cfg.dim == 1) {
            IntervalSet s(scene.config.root1, {.r_nbr = cfg.r_nbr, .debug_checks = false, .compression = cfg.a}, &c);
            r = replay(s, c, scene.intervals, ops, cfg.rho, cfg.check_structure, cfg.inject_fault_at);
        } else {
            RegionStore s(scene.config.root, {.beta = cfg.beta, .compression = cfg.a, .debug_checks = false}, &c);
            r = replay(s, c, scene.regions, ops, cfg.rho, cfg.check_structure, cfg.inject_fault_at);
        }
        static const char* kinds[5] = {"build", "query", "local_update", "insert", "delete"};
        for (std::size_t k = 0; k < 5; ++k) {
            const Tally& t = r.tallies[k];
            if (t.count == 0) continue;
            ExperimentRow row;
            row.dim = cfg.dim;
            row.n = n;
            row.seed = cfg.seed;
            row.beta = cfg.beta;
            row.rho = cfg.rho;
            row.op_kind = kinds[k];
            row.count = t.count;
            row.nodes = r.nodes;
            row.tags = r.tags;
            row.marks = r.marks;
            for (std::size_t i = 0; i < kCounterCount; ++i) {
                row.mean[i] = static_cast<double>(t.sum[i]) / static_cast<double>(t.count);
                row.max[i] = t.max[i];
            }
            rows.push_back(row);
        }
    }
    return rows;
}

void write_csv(std::ostream& out, const std::vector<ExperimentRow>& rows) {
    out << "dim,n,seed,beta,rho,op,count,nodes,tag_entries,mark_entries";
    for (const char* c : counter_names()) out << ",mean_" << c;
    for (const char* c : counter_names()) out << ",max_" << c;
    out << '\n';
    char buf[64];
    for (const ExperimentRow& r : rows) {
        out << r.dim << ',' << r.n << ',' << r.seed << ',';
        std::snprintf(buf, sizeof buf, "%.6g,%.6g,", r.beta, r.rho);
        out << buf << r.op_kind << ',' << r.count << ',' << r.nodes << ',' << r.tags << ',' << r.marks;
        for (double m : r.mean) {
            std::snprintf(buf, sizeof buf, ",%.6f", m);
            out << buf;
        }
        for (std::uint64_t m : r.max) out << ',' << m;
        out << '\n';
    }
}

}  // namespace fatloc
