#include "fatloc/quadtree.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <sstream>
#include <unordered_map>

namespace fatloc {

namespace {

std::uint64_t spread32(std::uint64_t x) {
    x &= 0xFFFFFFFFull;
    x = (x | (x << 16)) & 0x0000FFFF0000FFFFull;
    x = (x | (x << 8)) & 0x00FF00FF00FF00FFull;
    x = (x | (x << 4)) & 0x0F0F0F0F0F0F0F0Full;
    x = (x | (x << 2)) & 0x3333333333333333ull;
    x = (x | (x << 1)) & 0x5555555555555555ull;
    return x;
}

ZKey interleave(std::uint64_t x, std::uint64_t y) {
    ZKey lo = spread32(x) | (spread32(y) << 1);
    ZKey hi = spread32(x >> 32) | (spread32(y >> 32) << 1);
    return (hi << 64) | lo;
}

struct CellHash {
    std::size_t operator()(const CellKey& c) const {
        std::uint64_t h = c.ix * 0x9E3779B97F4A7C15ull ^ (c.iy + 0x632BE59BD9B4E019ull) * 0xC2B2AE3D27D4EB4Full;
        return static_cast<std::size_t>(h ^ (static_cast<std::uint64_t>(c.depth) << 58) ^ (h >> 29));
    }
};

}  // namespace

Quadtree::Quadtree(int dimension, CellExtent root, int compression, Counters* counters)
    : dim_(dimension), a_(compression), root_ext_(root), counters_(counters) {
    if (dim_ != 1 && dim_ != 2) fail(ErrorCode::InvalidArgument, "dimension must be 1 or 2");
    if (a_ < 2 || !std::has_single_bit(static_cast<unsigned>(a_)))
        fail(ErrorCode::InvalidArgument, "compression factor must be a power of two >= 2");
    if (!(root.side > 0.0) || !std::isfinite(root.side)) fail(ErrorCode::InvalidArgument, "root side must be positive");
    log_a_ = std::countr_zero(static_cast<unsigned>(a_));
    root_ext_.depth = 0;
    if (dim_ == 1) root_ext_.anchor.y = 0.0;
    root_ = alloc(CellKey{0, 0, 0}, kNoNode);
    nodes_[root_].kind = NodeKind::True;
}

// ---------------------------------------------------------------- addressing

double Quadtree::side_at(int depth) const { return std::ldexp(root_ext_.side, -depth); }
double Quadtree::side(NodeId n) const { return side_at(nodes_[n].cell.depth); }

CellExtent Quadtree::extent(const CellKey& c) const {
    CellExtent e;
    e.depth = c.depth;
    e.side = side_at(c.depth);
    e.anchor.x = root_ext_.anchor.x + std::ldexp(static_cast<double>(c.ix), -c.depth) * root_ext_.side;
    e.anchor.y = dim_ == 1 ? 0.0 : root_ext_.anchor.y + std::ldexp(static_cast<double>(c.iy), -c.depth) * root_ext_.side;
    return e;
}

CellExtent Quadtree::extent(NodeId n) const { return extent(nodes_[n].cell); }

bool Quadtree::in_root(Point2 p) const {
    const double x0 = root_ext_.anchor.x;
    if (!(p.x >= x0 && p.x < x0 + root_ext_.side)) return false;
    if (dim_ == 1) return true;
    const double y0 = root_ext_.anchor.y;
    return p.y >= y0 && p.y < y0 + root_ext_.side;
}

CellKey Quadtree::point_cell(Point2 p) const {
    auto coord = [&](double v, double o) {
        double u = std::ldexp((v - o) / root_ext_.side, kMaxDepth);
        const double top = std::ldexp(1.0, kMaxDepth);
        if (u < 0) u = 0;
        if (u >= top) return (std::uint64_t{1} << kMaxDepth) - 1;
        return static_cast<std::uint64_t>(u);
    };
    CellKey c;
    c.depth = kMaxDepth;
    c.ix = coord(p.x, root_ext_.anchor.x);
    c.iy = dim_ == 1 ? 0 : coord(p.y, root_ext_.anchor.y);
    return c;
}

bool Quadtree::cell_contains(const CellKey& outer, const CellKey& inner) const {
    if (inner.depth < outer.depth) return false;
    const int s = inner.depth - outer.depth;
    return (inner.ix >> s) == outer.ix && (inner.iy >> s) == outer.iy;
}

bool Quadtree::location_contains(NodeId n, Point2 p) const {
    const CellKey pc = point_cell(p);
    const QuadNode& v = nodes_[n];
    if (!cell_contains(v.cell, pc)) return false;
    if (v.compressed) return !cell_contains(nodes_[v.child[0]].cell, pc);
    return v.is_leaf();
}

ZKey Quadtree::zkey(const CellKey& c) const {
    const int s = kMaxDepth - c.depth;
    if (dim_ == 1) return static_cast<ZKey>(c.ix << s);
    return interleave(c.ix << s, c.iy << s);
}

ZKey Quadtree::zspan(int depth) const { return static_cast<ZKey>(1) << (dim_ * (kMaxDepth - depth)); }

int Quadtree::child_slot(const CellKey& parent, const CellKey& child) const {
    const int s = child.depth - parent.depth - 1;
    const int bx = static_cast<int>((child.ix >> s) & 1u);
    if (dim_ == 1) return bx;
    const int by = static_cast<int>((child.iy >> s) & 1u);
    return bx | (by << 1);
}

CellKey Quadtree::child_cell(const CellKey& c, int slot) const {
    CellKey k;
    k.depth = c.depth + 1;
    k.ix = (c.ix << 1) | static_cast<std::uint64_t>(slot & 1);
    k.iy = dim_ == 1 ? 0 : ((c.iy << 1) | static_cast<std::uint64_t>((slot >> 1) & 1));
    return k;
}

CellKey Quadtree::ancestor_cell(const CellKey& c, int depth) const {
    const int s = c.depth - depth;
    return CellKey{c.ix >> s, c.iy >> s, depth};
}

CellKey Quadtree::lca_cell(const CellKey& a, const CellKey& b) const {
    const int d = std::min(a.depth, b.depth);
    const CellKey x = ancestor_cell(a, d);
    const CellKey y = ancestor_cell(b, d);
    const std::uint64_t diff = (x.ix ^ y.ix) | (x.iy ^ y.iy);
    if (diff == 0) return x;
    const int h = 64 - std::countl_zero(diff);
    return ancestor_cell(x, d - h);
}

int Quadtree::dir_index(int dx, int dy, int dim) {
    if (dim == 1) return dx < 0 ? 0 : 1;
    int idx = (dy + 1) * 3 + (dx + 1);
    return idx > 4 ? idx - 1 : idx;
}

std::pair<int, int> Quadtree::dir_offset(int index, int dim) {
    if (dim == 1) return {index == 0 ? -1 : 1, 0};
    int idx = index >= 4 ? index + 1 : index;
    return {idx % 3 - 1, idx / 3 - 1};
}

bool Quadtree::is_component_root(NodeId n) const {
    const NodeId p = nodes_[n].parent;
    return p == kNoNode || nodes_[p].compressed;
}

NodeId Quadtree::compressed_parent(NodeId n) const {
    while (!is_component_root(n)) n = nodes_[n].parent;
    return n;
}

// ---------------------------------------------------------------- allocation

NodeId Quadtree::alloc(const CellKey& cell, NodeId parent) {
    if (cell.depth > kMaxDepth) fail(ErrorCode::PrecisionLimit, "cell depth exceeds supported precision");
    NodeId id;
    if (!free_.empty()) {
        id = free_.back();
        free_.pop_back();
        nodes_[id] = QuadNode{};
    } else {
        id = static_cast<NodeId>(nodes_.size());
        nodes_.emplace_back();
    }
    QuadNode& n = nodes_[id];
    n.cell = cell;
    n.parent = parent;
    n.alive = true;
    n.kind = (parent == kNoNode || nodes_[parent].occ >= 2) ? NodeKind::True : NodeKind::B;
    ++nalive_;
    touch();
    return id;
}

void Quadtree::free_node(NodeId n) {
    nodes_[n].alive = false;
    nodes_[n].parent = kNoNode;
    free_.push_back(n);
    --nalive_;
    touch();
}

void Quadtree::notify_added(NodeId n) {
    for (auto* o : observers_) o->node_added(n);
}
void Quadtree::notify_removing(NodeId n) {
    for (auto* o : observers_) o->node_removing(n);
}
void Quadtree::notify_reparented(NodeId n, NodeId old_parent) {
    for (auto* o : observers_) o->node_reparented(n, old_parent);
}
void Quadtree::notify_changed(NodeId n) {
    for (auto* o : observers_) o->node_changed(n);
}
void Quadtree::finish_update() {
    for (auto* o : observers_) o->after_update();
}

// ---------------------------------------------------------------- links

void Quadtree::clear_links(NodeId n) {
    const int L = link_count();
    for (int d = 0; d < L; ++d) {
        const NodeId m = nodes_[n].link[d];
        if (m == kNoNode) continue;
        auto [dx, dy] = dir_offset(d, dim_);
        nodes_[m].link[dir_index(-dx, -dy, dim_)] = kNoNode;
        nodes_[n].link[d] = kNoNode;
    }
}

void Quadtree::compute_links(NodeId n) {
    clear_links(n);
    if (is_component_root(n)) return;
    const NodeId p = nodes_[n].parent;
    const CellKey c = nodes_[n].cell;
    const std::uint64_t lim = std::uint64_t{1} << c.depth;
    const int L = link_count();
    for (int d = 0; d < L; ++d) {
        auto [dx, dy] = dir_offset(d, dim_);
        const std::int64_t tx = static_cast<std::int64_t>(c.ix) + dx;
        const std::int64_t ty = static_cast<std::int64_t>(c.iy) + dy;
        if (tx < 0 || ty < 0 || static_cast<std::uint64_t>(tx) >= lim || static_cast<std::uint64_t>(ty) >= lim) continue;
        const CellKey t{static_cast<std::uint64_t>(tx), static_cast<std::uint64_t>(ty), c.depth};
        const CellKey tp = ancestor_cell(t, c.depth - 1);
        NodeId holder = kNoNode;
        const CellKey& pc = nodes_[p].cell;
        if (tp == pc) {
            holder = p;
        } else {
            const int pdx = static_cast<int>(static_cast<std::int64_t>(tp.ix) - static_cast<std::int64_t>(pc.ix));
            const int pdy = static_cast<int>(static_cast<std::int64_t>(tp.iy) - static_cast<std::int64_t>(pc.iy));
            holder = nodes_[p].link[dir_index(pdx, pdy, dim_)];
        }
        if (holder == kNoNode) continue;
        const QuadNode& h = nodes_[holder];
        if (h.is_leaf() || h.compressed) continue;
        const NodeId m = h.child[child_slot(h.cell, t)];
        if (m == kNoNode || m == n) continue;
        nodes_[n].link[d] = m;
        nodes_[m].link[dir_index(-dx, -dy, dim_)] = n;
    }
}

// Recomputes links for every node of n's subtree touching n's boundary.
void Quadtree::relink_subtree(NodeId n) {
    touch();
    compute_links(n);
    const QuadNode& v = nodes_[n];
    if (v.is_leaf()) {
        enqueue_balance(n);
        return;
    }
    if (v.compressed) return;
    const CellKey top = v.cell;
    std::vector<NodeId> stack(v.child.begin(), v.child.begin() + fanout());
    while (!stack.empty()) {
        const NodeId u = stack.back();
        stack.pop_back();
        if (u == kNoNode) continue;
        const CellKey& c = nodes_[u].cell;
        const int s = c.depth - top.depth;
        const std::uint64_t lo_x = top.ix << s, hi_x = ((top.ix + 1) << s) - 1;
        const std::uint64_t lo_y = top.iy << s, hi_y = ((top.iy + 1) << s) - 1;
        const bool boundary = c.ix == lo_x || c.ix == hi_x || (dim_ == 2 && (c.iy == lo_y || c.iy == hi_y));
        if (!boundary) continue;
        touch();
        compute_links(u);
        const QuadNode& w = nodes_[u];
        if (w.is_leaf()) {
            enqueue_balance(u);
        } else if (!w.compressed) {
            for (int i = 0; i < fanout(); ++i) stack.push_back(w.child[i]);
        }
    }
}

std::optional<NodeId> Quadtree::equal_size_neighbor(NodeId n, int dir) const {
    const NodeId m = nodes_[n].link[dir];
    if (m == kNoNode) return std::nullopt;
    return m;
}

NodeId Quadtree::neighbor_at_or_above(NodeId n, int dir) const {
    const CellKey c = nodes_[n].cell;
    auto [dx, dy] = dir_offset(dir, dim_);
    const std::int64_t tx = static_cast<std::int64_t>(c.ix) + dx;
    const std::int64_t ty = static_cast<std::int64_t>(c.iy) + dy;
    const std::uint64_t lim = std::uint64_t{1} << c.depth;
    if (tx < 0 || ty < 0 || static_cast<std::uint64_t>(tx) >= lim || static_cast<std::uint64_t>(ty) >= lim) return kNoNode;
    const CellKey t{static_cast<std::uint64_t>(tx), static_cast<std::uint64_t>(ty), c.depth};
    auto descend = [&](NodeId u) {
        while (true) {
            const QuadNode& w = nodes_[u];
            if (w.is_leaf() || w.compressed || w.cell.depth >= c.depth) return u;
            u = w.child[child_slot(w.cell, t)];
        }
    };
    NodeId v = n;
    while (true) {
        const CellKey& vc = nodes_[v].cell;
        const CellKey tv = ancestor_cell(t, vc.depth);
        if (tv == vc) {
            const QuadNode& w = nodes_[v];
            return descend(w.child[child_slot(w.cell, t)]);
        }
        if (is_component_root(v)) return kNoNode;
        const int ddx = static_cast<int>(static_cast<std::int64_t>(tv.ix) - static_cast<std::int64_t>(vc.ix));
        const int ddy = static_cast<int>(static_cast<std::int64_t>(tv.iy) - static_cast<std::int64_t>(vc.iy));
        const NodeId m = nodes_[v].link[dir_index(ddx, ddy, dim_)];
        if (m != kNoNode) return descend(m);
        v = nodes_[v].parent;
    }
}

// ---------------------------------------------------------------- points & counts

void Quadtree::store_point(NodeId n, PointId id) {
    auto& pts = nodes_[n].points;
    if (pts[0] == kNoPoint) pts[0] = id;
    else pts[1] = id;
    pts_[id].leaf = n;
}

void Quadtree::unstore_point(NodeId n, PointId id) {
    auto& pts = nodes_[n].points;
    if (pts[0] == id) {
        pts[0] = pts[1];
        pts[1] = kNoPoint;
    } else if (pts[1] == id) {
        pts[1] = kNoPoint;
    }
}

void Quadtree::recount(NodeId n) {
    QuadNode& v = nodes_[n];
    int cnt = 0;
    PointId lone = kNoPoint;
    for (PointId p : v.points)
        if (p != kNoPoint) {
            ++cnt;
            lone = p;
        }
    const int kids = v.compressed ? 1 : (v.is_leaf() ? 0 : fanout());
    for (int i = 0; i < kids; ++i) {
        const NodeId c = v.child[i];
        if (c == kNoNode) continue;
        cnt += nodes_[c].occ;
        if (nodes_[c].occ == 1) lone = nodes_[c].lone;
    }
    v.occ = static_cast<std::uint8_t>(std::min(cnt, 2));
    v.lone = cnt == 1 ? lone : kNoPoint;
}

void Quadtree::set_child_kinds(NodeId n) {
    const NodeKind k = nodes_[n].occ >= 2 ? NodeKind::True : NodeKind::B;
    if (nodes_[n].is_leaf()) return;
    const int kids = nodes_[n].compressed ? 1 : fanout();
    for (int i = 0; i < kids; ++i) {
        const NodeId c = nodes_[n].child[i];
        if (c == kNoNode || nodes_[c].kind == k) continue;
        nodes_[c].kind = k;
        if (nodes_[c].is_leaf()) {
            if (k == NodeKind::True) enqueue_balance(c);
            else enqueue_merge_neighborhood(c);
        }
    }
}

namespace {
struct Changed {
    NodeId node;
    std::uint8_t old_occ;
};
}  // namespace

// Returns nodes whose (occ, lone) changed, bottom-up, with their old occ.
static std::vector<Changed> propagate(Quadtree& t, NodeId from, auto&& recount_fn, auto&& kinds_fn) {
    std::vector<Changed> out;
    NodeId v = from;
    while (v != kNoNode) {
        const QuadNode& n = t.node(v);
        const std::uint8_t old_occ = n.occ;
        const PointId old_lone = n.lone;
        recount_fn(v);
        const QuadNode& m = t.node(v);
        if (m.occ == old_occ && m.lone == old_lone) break;
        out.push_back({v, old_occ});
        if (m.occ != old_occ) kinds_fn(v);
        v = m.parent;
    }
    return out;
}

// ---------------------------------------------------------------- structure primitives

void Quadtree::split(NodeId n) {
    const int F = fanout();
    std::array<NodeId, 4> kids{kNoNode, kNoNode, kNoNode, kNoNode};
    for (int s = 0; s < F; ++s) {
        const CellKey cc = child_cell(nodes_[n].cell, s);
        kids[s] = alloc(cc, n);
        nodes_[n].child[s] = kids[s];
    }
    nodes_[n].compressed = false;
    for (int s = 0; s < F; ++s) compute_links(kids[s]);
    for (int s = 0; s < F; ++s) notify_added(kids[s]);
    const auto pts = nodes_[n].points;
    nodes_[n].points = {kNoPoint, kNoPoint};
    for (PointId p : pts) {
        if (p == kNoPoint) continue;
        store_point(kids[child_slot(nodes_[n].cell, pts_[p].cell)], p);
    }
    for (int s = 0; s < F; ++s) {
        recount(kids[s]);
        enqueue_balance(kids[s]);
    }
    notify_changed(n);
}

void Quadtree::merge(NodeId n) {
    const int F = fanout();
    std::vector<PointId> pts;
    for (int s = 0; s < F; ++s) {
        const NodeId c = nodes_[n].child[s];
        for (PointId p : nodes_[c].points)
            if (p != kNoPoint) pts.push_back(p);
        clear_links(c);
        notify_removing(c);
        nodes_[n].child[s] = kNoNode;
        free_node(c);
    }
    for (PointId p : pts) store_point(n, p);
    recount(n);
    notify_changed(n);
    enqueue_balance(n);
}

void Quadtree::attach_regular(NodeId parent, NodeId child) {
    const NodeId old = nodes_[child].parent;
    nodes_[child].parent = parent;
    if (old != parent) notify_reparented(child, old);
}

// ---------------------------------------------------------------- canonical skeleton

CellKey Quadtree::smallest_cell(NodeId n) const {
    while (true) {
        const QuadNode& v = nodes_[n];
        if (v.occ == 1) return pts_[v.lone].cell;
        std::vector<CellKey> cells;
        for (PointId p : v.points)
            if (p != kNoPoint) cells.push_back(pts_[p].cell);
        if (v.is_leaf()) return lca_cell(cells[0], cells[1]);
        if (v.compressed) {
            const NodeId w = v.child[0];
            if (cells.empty()) {
                n = w;
                continue;
            }
            CellKey s = cells[0];
            for (const auto& c : cells) s = lca_cell(s, c);
            if (nodes_[w].occ > 0) s = lca_cell(s, smallest_cell(w));
            return s;
        }
        NodeId only = kNoNode;
        int occupied = 0;
        for (int i = 0; i < fanout(); ++i)
            if (nodes_[v.child[i]].occ > 0) {
                ++occupied;
                only = v.child[i];
            }
        if (occupied >= 2) return v.cell;
        n = only;
    }
}

void Quadtree::teardown(NodeId x, std::vector<NodeId>& kept, std::vector<PointId>& loose) {
    touch();
    for (PointId& p : nodes_[x].points)
        if (p != kNoPoint) {
            loose.push_back(p);
            pts_[p].leaf = kNoNode;
            p = kNoPoint;
        }
    std::vector<NodeId> kids;
    for (NodeId c : nodes_[x].child)
        if (c != kNoNode) kids.push_back(c);
    nodes_[x].child = {kNoNode, kNoNode, kNoNode, kNoNode};
    nodes_[x].compressed = false;

    // post-order: keep branching true nodes, dissolve everything else
    struct Frame {
        NodeId node;
        bool expanded;
    };
    std::vector<Frame> stack;
    for (NodeId c : kids) stack.push_back({c, false});
    while (!stack.empty()) {
        Frame f = stack.back();
        stack.pop_back();
        const NodeId u = f.node;
        touch();
        if (!f.expanded) {
            const QuadNode& v = nodes_[u];
            if (v.occ >= 2 && !v.is_leaf() && !v.compressed) {
                int occupied = 0;
                for (int i = 0; i < fanout(); ++i) occupied += nodes_[v.child[i]].occ > 0;
                if (occupied >= 2) {
                    attach_regular(x, u);
                    kept.push_back(u);
                    continue;
                }
            }
            stack.push_back({u, true});
            for (NodeId c : nodes_[u].child)
                if (c != kNoNode) stack.push_back({c, false});
            continue;
        }
        for (PointId p : nodes_[u].points)
            if (p != kNoPoint) {
                loose.push_back(p);
                pts_[p].leaf = kNoNode;
            }
        nodes_[u].points = {kNoPoint, kNoPoint};
        nodes_[u].child = {kNoNode, kNoNode, kNoNode, kNoNode};
        nodes_[u].compressed = false;
        clear_links(u);
        notify_removing(u);
        free_node(u);
    }
    recount(x);
    notify_changed(x);
    enqueue_neighbors_of(x);
}

void Quadtree::place(NodeId y, std::vector<NodeId>& kept, std::vector<PointId>& loose) {
    touch();
    const std::size_t total = kept.size() + loose.size();
    if (total == 0) {
        recount(y);
        return;
    }
    if (total == 1 && loose.size() == 1) {
        store_point(y, loose[0]);
        recount(y);
        return;
    }
    CellKey s = kept.empty() ? pts_[loose[0]].cell : nodes_[kept[0]].cell;
    for (NodeId k : kept) s = lca_cell(s, nodes_[k].cell);
    for (PointId p : loose) s = lca_cell(s, pts_[p].cell);
    const CellKey yc = nodes_[y].cell;
    const int gap = s.depth - yc.depth;

    if (gap >= log_a_) {
        nodes_[y].compressed = true;
        if (kept.size() == 1 && loose.empty() && nodes_[kept[0]].cell == s) {
            const NodeId k = kept[0];
            nodes_[y].child[0] = k;
            attach_regular(y, k);
            relink_subtree(k);
        } else {
            const NodeId c = alloc(s, y);
            nodes_[y].child[0] = c;
            notify_added(c);
            place(c, kept, loose);
        }
        recount(y);
        set_child_kinds(y);
        notify_changed(y);
        return;
    }

    recount(y);  // occ >= 2 from here on, so the fresh children are true
    nodes_[y].occ = 2;
    split(y);
    const int F = fanout();
    std::array<std::vector<NodeId>, 4> sk;
    std::array<std::vector<PointId>, 4> sl;
    for (NodeId k : kept) sk[child_slot(yc, nodes_[k].cell)].push_back(k);
    for (PointId p : loose) sl[child_slot(yc, pts_[p].cell)].push_back(p);
    for (int i = 0; i < F; ++i) {
        const NodeId c = nodes_[y].child[i];
        if (sk[i].size() == 1 && sl[i].empty() && nodes_[sk[i][0]].cell == nodes_[c].cell) {
            const NodeId k = sk[i][0];
            clear_links(c);
            notify_removing(c);
            free_node(c);
            nodes_[y].child[i] = k;
            attach_regular(y, k);
            relink_subtree(k);
        } else if (!sk[i].empty() || !sl[i].empty()) {
            place(c, sk[i], sl[i]);
        }
    }
    recount(y);
    set_child_kinds(y);
}

// Restore the canonical skeleton below x along the path towards focus.
void Quadtree::canonicalize(NodeId x, Point2 focus) {
    const CellKey fc = point_cell(focus);
    while (true) {
        touch();
        if (nodes_[x].occ <= 1) {
            if (nodes_[x].compressed) {
                std::vector<NodeId> kept;
                std::vector<PointId> loose;
                teardown(x, kept, loose);
                place(x, kept, loose);
                enqueue_neighbors_of(x);
                enqueue_balance(x);
            }
            return;
        }
        const CellKey s = smallest_cell(x);
        const bool want = s.depth - nodes_[x].cell.depth >= log_a_;
        const QuadNode& v = nodes_[x];
        const bool ok = want ? (v.compressed && nodes_[v.child[0]].cell == s) : (!v.is_leaf() && !v.compressed);
        if (!ok) {
            std::vector<NodeId> kept;
            std::vector<PointId> loose;
            teardown(x, kept, loose);
            place(x, kept, loose);
        }
        const QuadNode& w = nodes_[x];
        const NodeId next = w.compressed ? w.child[0] : w.child[child_slot(w.cell, fc)];
        if (next == kNoNode || !cell_contains(nodes_[next].cell, fc) || nodes_[next].occ < 1) return;
        if (nodes_[next].occ == 1 && !nodes_[next].compressed && nodes_[next].points[1] == kNoPoint) return;
        x = next;
    }
}

// ---------------------------------------------------------------- balance

void Quadtree::enqueue_balance(NodeId n) { balance_queue_.push_back(n); }

void Quadtree::enqueue_neighbors_of(NodeId n) {
    const CellKey c = nodes_[n].cell;
    for (int d = 0; d < link_count(); ++d) {
        const NodeId m = nodes_[n].link[d];
        if (m == kNoNode) continue;
        std::vector<NodeId> stack{m};
        while (!stack.empty()) {
            const NodeId u = stack.back();
            stack.pop_back();
            const QuadNode& w = nodes_[u];
            const int s = w.cell.depth - c.depth;
            const std::int64_t lo_x = static_cast<std::int64_t>(c.ix << s), hi_x = static_cast<std::int64_t>((c.ix + 1) << s);
            const std::int64_t lo_y = static_cast<std::int64_t>(c.iy << s), hi_y = static_cast<std::int64_t>((c.iy + 1) << s);
            const std::int64_t ux = static_cast<std::int64_t>(w.cell.ix), uy = static_cast<std::int64_t>(w.cell.iy);
            const bool adj = ux >= lo_x - 1 && ux <= hi_x && (dim_ == 1 || (uy >= lo_y - 1 && uy <= hi_y));
            if (!adj) continue;
            touch();
            if (w.is_leaf()) enqueue_balance(u);
            else if (!w.compressed)
                for (int i = 0; i < fanout(); ++i) stack.push_back(w.child[i]);
        }
    }
}

void Quadtree::run_balance() {
    while (!balance_queue_.empty()) {
        const NodeId n = balance_queue_.back();
        balance_queue_.pop_back();
        if (!alive(n) || !nodes_[n].is_leaf()) continue;
        touch();
        for (int d = 0; d < link_count(); ++d) {
            const NodeId m = neighbor_at_or_above(n, d);
            if (m == kNoNode || !nodes_[m].is_leaf()) continue;
            const int diff = nodes_[n].cell.depth - nodes_[m].cell.depth;
            if (diff <= 0) continue;
            const int ratio = diff >= 8 ? 256 : (1 << diff);
            if (ratio > balance_alpha(n)) {
                split(m);
                enqueue_balance(n);
                break;
            }
        }
    }
}

void Quadtree::enqueue_merge(NodeId n) {
    if (n != kNoNode) merge_queue_.push_back(n);
}

void Quadtree::enqueue_merge_neighborhood(NodeId n) {
    for (int d = 0; d < link_count(); ++d) {
        const NodeId m = neighbor_at_or_above(n, d);
        if (m == kNoNode) continue;
        enqueue_merge(m);
        enqueue_merge(nodes_[m].parent);
    }
}

bool Quadtree::can_merge(NodeId x) const {
    const QuadNode& v = nodes_[x];
    if (v.is_leaf() || v.compressed || v.occ >= 2) return false;
    for (int i = 0; i < fanout(); ++i)
        if (!nodes_[v.child[i]].is_leaf()) return false;
    for (int i = 0; i < fanout(); ++i) {
        const NodeId c = v.child[i];
        const CellKey cc = nodes_[c].cell;
        for (int d = 0; d < link_count(); ++d) {
            const NodeId m = nodes_[c].link[d];
            if (m == kNoNode) continue;
            if (nodes_[m].parent == x) continue;
            const QuadNode& mm = nodes_[m];
            if (mm.is_leaf() || mm.compressed) continue;
            for (int j = 0; j < fanout(); ++j) {
                const NodeId g = mm.child[j];
                const CellKey& gc = nodes_[g].cell;
                const std::int64_t lo_x = static_cast<std::int64_t>(cc.ix << 1), hi_x = lo_x + 2;
                const std::int64_t lo_y = static_cast<std::int64_t>(cc.iy << 1), hi_y = lo_y + 2;
                const std::int64_t gx = static_cast<std::int64_t>(gc.ix), gy = static_cast<std::int64_t>(gc.iy);
                const bool adj = gx >= lo_x - 1 && gx <= hi_x && (dim_ == 1 || (gy >= lo_y - 1 && gy <= hi_y));
                if (!adj) continue;
                const QuadNode& gg = nodes_[g];
                if (gg.compressed) continue;
                if (!gg.is_leaf()) return false;
                if (gg.kind == NodeKind::True) return false;
            }
        }
    }
    return true;
}

void Quadtree::run_merges() {
    while (!merge_queue_.empty()) {
        const NodeId x = merge_queue_.back();
        merge_queue_.pop_back();
        if (!alive(x)) continue;
        touch();
        if (!can_merge(x)) continue;
        const NodeId p = nodes_[x].parent;
        merge(x);
        enqueue_merge(p);
        enqueue_merge_neighborhood(x);
    }
}

// ---------------------------------------------------------------- public updates

NodeId Quadtree::locate_from(NodeId start, Point2 q, std::uint64_t* touched) const {
    const CellKey qc = point_cell(q);
    NodeId v = (start != kNoNode && alive(start)) ? start : root_;
    std::uint64_t steps = 0;
    while (!cell_contains(nodes_[v].cell, qc)) {
        v = nodes_[v].parent;
        ++steps;
    }
    while (true) {
        const QuadNode& n = nodes_[v];
        if (n.is_leaf()) break;
        if (n.compressed) {
            if (!cell_contains(nodes_[n.child[0]].cell, qc)) break;
            v = n.child[0];
        } else {
            v = n.child[child_slot(n.cell, qc)];
        }
        ++steps;
    }
    if (touched) *touched += steps;
    return v;
}

namespace {
NodeId find_anchor(const Quadtree& t, NodeId from, const std::vector<Changed>& changed) {
    auto old_occ = [&](NodeId c) {
        for (const auto& ch : changed)
            if (ch.node == c) return ch.old_occ;
        return t.node(c).occ;
    };
    NodeId c = from;
    NodeId x = t.node(from).parent;
    while (x != kNoNode) {
        const QuadNode& v = t.node(x);
        if (!v.is_leaf() && !v.compressed) {
            int now = 0;
            for (int i = 0; i < t.fanout(); ++i) now += t.node(v.child[i]).occ > 0;
            const int before = now - (t.node(c).occ > 0) + (old_occ(c) > 0);
            if (now >= 2 && before >= 2) return c;
        }
        c = x;
        x = v.parent;
    }
    return c;
}
}  // namespace

NodeId Quadtree::insert_point(PointId id, Point2 p, NodeId hint) {
    if (!in_root(p)) fail(ErrorCode::OutOfBounds, "point outside root cell");
    if (has_point(id)) fail(ErrorCode::InvalidArgument, "point id already stored");
    if (dim_ == 1) p.y = 0.0;
    const CellKey pc = point_cell(p);
    std::uint64_t walked = 0;
    const NodeId L = locate_from(hint, p, &walked);
    touch(walked + 1);
    if (nodes_[L].is_leaf()) {
        for (PointId q : nodes_[L].points) {
            if (q == kNoPoint) continue;
            if (pts_[q].pos == p) fail(ErrorCode::DuplicatePoint, "point coincides with a stored point");
            if (pts_[q].cell == pc) fail(ErrorCode::PrecisionLimit, "points closer than the finest cell");
        }
    }
    if (pts_.size() <= id) pts_.resize(static_cast<std::size_t>(id) + 1);
    pts_[id].pos = p;
    pts_[id].cell = pc;
    store_point(L, id);
    ++npoints_;
    auto changed = propagate(*this, L, [&](NodeId v) { recount(v); }, [&](NodeId v) { set_child_kinds(v); });
    const NodeId top = find_anchor(*this, L, changed);
    canonicalize(top, p);
    run_balance();
    finish_update();
    return pts_[id].leaf;
}

void Quadtree::delete_point(PointId id) {
    if (!has_point(id)) fail(ErrorCode::UnknownPoint, "no such point");
    const NodeId L = pts_[id].leaf;
    const Point2 pos = pts_[id].pos;
    unstore_point(L, id);
    pts_[id].leaf = kNoNode;
    --npoints_;
    touch();
    auto changed = propagate(*this, L, [&](NodeId v) { recount(v); }, [&](NodeId v) { set_child_kinds(v); });
    const NodeId top = find_anchor(*this, L, changed);
    for (auto it = changed.rbegin(); it != changed.rend(); ++it) {
        const NodeId n = it->node;
        if (alive(n) && nodes_[n].compressed && nodes_[n].occ <= 1) {
            std::vector<NodeId> kept;
            std::vector<PointId> loose;
            teardown(n, kept, loose);
            place(n, kept, loose);
            enqueue_neighbors_of(n);
            enqueue_balance(n);
            break;
        }
    }
    if (alive(top)) canonicalize(top, pos);
    for (const auto& ch : changed)
        if (alive(ch.node)) {
            enqueue_merge(ch.node);
            enqueue_merge(nodes_[ch.node].parent);
        }
    if (alive(L)) enqueue_merge(nodes_[L].parent);
    run_balance();
    run_merges();
    run_balance();
    finish_update();
}

NodeId Quadtree::move_point(PointId id, Point2 p_new) {
    if (!has_point(id)) fail(ErrorCode::UnknownPoint, "no such point");
    if (!in_root(p_new)) fail(ErrorCode::OutOfBounds, "point outside root cell");
    if (dim_ == 1) p_new.y = 0.0;
    const NodeId L = pts_[id].leaf;
    const Point2 old = pts_[id].pos;
    touch();
    if (old == p_new) return L;
    if (location_contains(L, p_new)) {
        pts_[id].pos = p_new;
        pts_[id].cell = point_cell(p_new);
        touch();
        if (counters_) counters_->walk_length += 1;
        return L;
    }
    const double dist = std::max(std::abs(p_new.x - old.x), std::abs(p_new.y - old.y));
    const CellKey target = point_cell(p_new);
    std::uint64_t steps = 0;
    NodeId v = L;
    while (v != root_ && side(v) < dist) {
        v = nodes_[v].parent;
        ++steps;
    }
    NodeId start = kNoNode;
    while (start == kNoNode) {
        const CellKey& vc = nodes_[v].cell;
        const CellKey t = ancestor_cell(target, vc.depth);
        if (t == vc) {
            start = v;
            break;
        }
        const std::int64_t ddx = static_cast<std::int64_t>(t.ix) - static_cast<std::int64_t>(vc.ix);
        const std::int64_t ddy = static_cast<std::int64_t>(t.iy) - static_cast<std::int64_t>(vc.iy);
        if (std::abs(ddx) <= 1 && std::abs(ddy) <= 1 && !is_component_root(v)) {
            const NodeId m = nodes_[v].link[dir_index(static_cast<int>(ddx), static_cast<int>(ddy), dim_)];
            if (m != kNoNode) {
                start = m;
                ++steps;
                break;
            }
        }
        v = nodes_[v].parent;
        ++steps;
    }
    const NodeId H = locate_from(start, p_new, &steps);
    touch(steps);
    if (counters_) counters_->walk_length += steps;
    if (nodes_[H].is_leaf()) {
        for (PointId q : nodes_[H].points) {
            if (q == kNoPoint || q == id) continue;
            if (pts_[q].pos == p_new) fail(ErrorCode::DuplicatePoint, "point coincides with a stored point");
            if (pts_[q].cell == target) fail(ErrorCode::PrecisionLimit, "points closer than the finest cell");
        }
    }
    delete_point(id);
    return insert_point(id, p_new, alive(H) ? H : root_);
}

// ---------------------------------------------------------------- checks

std::vector<std::tuple<int, std::uint64_t, std::uint64_t, bool>> Quadtree::true_skeleton() const {
    std::vector<std::tuple<int, std::uint64_t, std::uint64_t, bool>> out;
    for (NodeId i = 0; i < nodes_.size(); ++i) {
        const QuadNode& v = nodes_[i];
        if (!v.alive || v.occ < 2) continue;
        out.emplace_back(v.cell.depth, v.cell.ix, v.cell.iy, v.compressed);
    }
    std::sort(out.begin(), out.end());
    return out;
}

std::vector<std::string> Quadtree::check_invariants() const {
    std::vector<std::string> bad;
    auto report = [&](NodeId n, const std::string& what) {
        std::ostringstream os;
        os << "node " << n << " (depth " << nodes_[n].cell.depth << ", " << nodes_[n].cell.ix << ", "
           << nodes_[n].cell.iy << "): " << what;
        bad.push_back(os.str());
    };
    std::unordered_map<CellKey, NodeId, CellHash> by_cell;
    std::size_t live = 0;
    std::size_t stored = 0;
    for (NodeId i = 0; i < nodes_.size(); ++i) {
        if (!nodes_[i].alive) continue;
        ++live;
        if (!by_cell.emplace(nodes_[i].cell, i).second) report(i, "duplicate cell");
    }
    if (live != nalive_) bad.push_back("alive count mismatch");
    if (!alive(root_) || nodes_[root_].parent != kNoNode) bad.push_back("root broken");

    for (NodeId i = 0; i < nodes_.size(); ++i) {
        const QuadNode& v = nodes_[i];
        if (!v.alive) continue;
        // topology
        if (i != root_) {
            if (v.parent == kNoNode || !alive(v.parent)) {
                report(i, "missing parent");
                continue;
            }
            const QuadNode& p = nodes_[v.parent];
            bool listed = false;
            for (NodeId c : p.child) listed |= c == i;
            if (!listed) report(i, "parent does not list node");
            if (p.compressed) {
                if (v.cell.depth - p.cell.depth < log_a_) report(i, "compressed gap below a");
                if (!cell_contains(p.cell, v.cell)) report(i, "compressed child not aligned inside parent");
            } else if (!(child_cell(p.cell, child_slot(p.cell, v.cell)) == v.cell) || v.cell.depth != p.cell.depth + 1) {
                report(i, "child cell misaligned");
            }
        }
        if (v.compressed) {
            if (v.child[0] == kNoNode || v.child[1] != kNoNode) report(i, "compressed node child slots");
        } else if (!v.is_leaf()) {
            for (int s = 0; s < fanout(); ++s)
                if (v.child[s] == kNoNode || !alive(v.child[s])) report(i, "incomplete split");
        }
        // points
        int cnt = 0;
        for (PointId p : v.points) {
            if (p == kNoPoint) continue;
            ++cnt;
            ++stored;
            if (p >= pts_.size() || pts_[p].leaf != i) report(i, "point back-pointer mismatch");
            else if (!cell_contains(v.cell, pts_[p].cell)) report(i, "stored point outside cell");
        }
        if (!v.is_leaf() && cnt > 0) report(i, "internal node stores points");
        if (cnt > 1) report(i, "leaf stores more than one point");
        // occupancy
        int total = cnt;
        PointId lone = cnt == 1 ? v.points[0] : kNoPoint;
        const int kids = v.compressed ? 1 : (v.is_leaf() ? 0 : fanout());
        for (int s = 0; s < kids; ++s) {
            const NodeId c = v.child[s];
            if (c == kNoNode) continue;
            total += nodes_[c].occ;
            if (nodes_[c].occ == 1) lone = nodes_[c].lone;
        }
        if (v.occ != std::min(total, 2) || (total == 1 && v.lone != lone)) report(i, "occupancy mismatch");
        const NodeKind want_kind = (i == root_ || nodes_[v.parent].occ >= 2) ? NodeKind::True : NodeKind::B;
        if (v.kind != want_kind) report(i, "kind mismatch");
        // canonical true skeleton
        if (v.occ >= 2) {
            if (v.is_leaf()) report(i, "leaf with two points");
            else {
                const CellKey s = smallest_cell(i);
                const bool want = s.depth - v.cell.depth >= log_a_;
                if (want != v.compressed) report(i, want ? "should be compressed" : "should not be compressed");
                else if (want && !(nodes_[v.child[0]].cell == s)) report(i, "compressed child is not the smallest cell");
            }
        } else if (v.compressed) {
            report(i, "compressed node with fewer than two points");
        }
    }
    if (stored != npoints_) bad.push_back("stored point count mismatch");
    for (PointId p = 0; p < pts_.size(); ++p) {
        const NodeId l = pts_[p].leaf;
        if (l == kNoNode) continue;
        if (!alive(l) || std::find(nodes_[l].points.begin(), nodes_[l].points.end(), p) == nodes_[l].points.end())
            bad.push_back("point " + std::to_string(p) + " not stored at its leaf");
    }

    auto comp_root = [&](NodeId n) {
        while (!is_component_root(n)) n = nodes_[n].parent;
        return n;
    };
    const int L = link_count();
    for (NodeId i = 0; i < nodes_.size(); ++i) {
        const QuadNode& v = nodes_[i];
        if (!v.alive) continue;
        const NodeId comp = comp_root(i);
        const std::uint64_t lim = std::uint64_t{1} << v.cell.depth;
        for (int d = 0; d < L; ++d) {
            auto [dx, dy] = dir_offset(d, dim_);
            const std::int64_t tx = static_cast<std::int64_t>(v.cell.ix) + dx;
            const std::int64_t ty = static_cast<std::int64_t>(v.cell.iy) + dy;
            NodeId expect = kNoNode;
            CellKey t{};
            const bool inside = tx >= 0 && ty >= 0 && static_cast<std::uint64_t>(tx) < lim && static_cast<std::uint64_t>(ty) < lim;
            if (inside) {
                t = CellKey{static_cast<std::uint64_t>(tx), static_cast<std::uint64_t>(ty), v.cell.depth};
                auto it = by_cell.find(t);
                if (it != by_cell.end() && !is_component_root(i) && !is_component_root(it->second) &&
                    comp_root(it->second) == comp)
                    expect = it->second;
            }
            if (v.link[d] != expect) report(i, "level link " + std::to_string(d) + " wrong");
            if (v.link[d] != kNoNode && alive(v.link[d]) && nodes_[v.link[d]].link[dir_index(-dx, -dy, dim_)] != i)
                report(i, "level link not symmetric");
            // balance
            if (!v.is_leaf() || !inside) continue;
            for (int dd = v.cell.depth; dd >= 0; --dd) {
                auto it = by_cell.find(ancestor_cell(t, dd));
                if (it == by_cell.end()) continue;
                const NodeId m = it->second;
                if (dd == v.cell.depth || !nodes_[m].is_leaf() || comp_root(m) != comp) break;
                const int diff = v.cell.depth - dd;
                const int ratio = diff >= 8 ? 256 : (1 << diff);
                if (ratio > balance_alpha(i))
                    report(i, std::string(v.kind == NodeKind::True ? "true" : "B") + " leaf not " +
                                  std::to_string(balance_alpha(i)) + "-balanced");
                break;
            }
        }
    }
    if (live > 16 * std::max<std::size_t>(1, npoints_)) bad.push_back("node count not linear in point count");
    return bad;
}

}  // namespace fatloc
