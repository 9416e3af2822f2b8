#include "fatloc/locate2d.hpp"

#include <algorithm>
#include <cmath>
#include <iterator>
#include <numeric>

#include "fatloc/error.hpp"

namespace fatloc {

namespace {

template <class V, class T>
void erase_one(V& v, const T& x) {
    auto it = std::find(v.begin(), v.end(), x);
    if (it != v.end()) {
        *it = v.back();
        v.pop_back();
    }
}

bool inside(const CellExtent& e, const ConvexRegion& r) {
    const Point2 lo = r.bbox_lo(), hi = r.bbox_hi();
    return lo.x >= e.anchor.x && lo.y >= e.anchor.y && hi.x < e.anchor.x + e.side && hi.y < e.anchor.y + e.side;
}

bool within_closed(const CellExtent& e, const ConvexRegion& r) {
    const Point2 lo = r.bbox_lo(), hi = r.bbox_hi();
    return lo.x >= e.anchor.x && lo.y >= e.anchor.y && hi.x <= e.anchor.x + e.side && hi.y <= e.anchor.y + e.side;
}

}  // namespace

RegionStore::RegionStore(CellExtent root, Options opt, Counters* counters)
    : root_(root),
      opt_(opt),
      wedge_(WedgeParams::for_beta(opt.beta)),
      counters_(counters),
      tree_(2, root, opt.compression, counters),
      eot_(tree_, counters),
      ma_(wedge_.k, static_cast<MaNode>(tree_.root()), counters) {
    if (!(opt_.beta >= 1.0)) fail(ErrorCode::InvalidArgument, "beta must be at least 1");
    tree_.add_observer(&eot_);
    tree_.add_observer(this);
    grow_nodes();
}

void RegionStore::set_counters(Counters* c) {
    counters_ = c;
    tree_.set_counters(c);
    eot_.set_counters(c);
    ma_.set_counters(c);
}

const ConvexRegion& RegionStore::region(RegionHandle h) const {
    if (!valid(h)) fail(ErrorCode::UnknownHandle, "no region " + std::to_string(h));
    return regions_[h].shape;
}

const std::vector<RegionHandle>& RegionStore::tags_at(NodeId n) const {
    static const std::vector<RegionHandle> none;
    return n < node_tags_.size() ? node_tags_[n] : none;
}

const std::vector<std::pair<RegionHandle, int>>& RegionStore::marks_at(NodeId n) const {
    static const std::vector<std::pair<RegionHandle, int>> none;
    return n < node_marks_.size() ? node_marks_[n] : none;
}

int RegionStore::tag_depth(const ConvexRegion& r) const {
    const double target = r.diam() / (4.0 * opt_.beta);
    if (tree_.side_at(0) < target) return 0;
    int e = static_cast<int>(std::floor(std::log2(root_.side / target)));
    e = std::clamp(e, 0, kMaxDepth);
    while (e > 0 && tree_.side_at(e) < target) --e;
    while (e < kMaxDepth && tree_.side_at(e + 1) >= target) ++e;
    return e;
}

NodeId RegionStore::storage_node(RegionHandle h) const {
    const ConvexRegion& r = region(h);
    NodeId u = tree_.point_leaf(h);
    if (tree_.node(u).kind == NodeKind::True) return u;
    const double target = r.diam() / (4.0 * opt_.beta);
    while (tree_.side(u) < target && tree_.node(u).parent != kNoNode) u = tree_.node(u).parent;
    return u;
}

// Location n meets r, given that n's cell does. A compressed gap is skipped
// when r lies inside the compressed child.
bool RegionStore::gap_meets(NodeId n, const ConvexRegion& r) const {
    const QuadNode& v = tree_.node(n);
    if (v.is_leaf()) return true;
    if (!v.compressed) return false;
    return !within_closed(tree_.extent(v.child[0]), r);
}

int RegionStore::wedge_of(NodeId n, Point2 rep) const {
    const Point2 c = tree_.extent(n).center();
    if (c.x == rep.x && c.y == rep.y) return 0;
    return wedge_index(c, rep, wedge_);
}

void RegionStore::require_valid_shape(const ConvexRegion& r) const {
    if (r.thickness() > opt_.beta) fail(ErrorCode::NotThickEnough, "region thicker than beta");
    if (!inside(root_, r)) fail(ErrorCode::OutOfBounds, "region leaves the root");
}

void RegionStore::check_free(const ConvexRegion& r, RegionHandle ignore) const {
    if (!opt_.debug_checks) return;
    for (RegionHandle h = 0; h < regions_.size(); ++h)
        if (h != ignore && regions_[h].alive && regions_intersect(regions_[h].shape, r))
            fail(ErrorCode::OverlapViolation, "region overlaps region " + std::to_string(h));
}

RegionHandle RegionStore::fresh_handle() {
    if (!free_.empty()) {
        const RegionHandle h = free_.back();
        free_.pop_back();
        return h;
    }
    regions_.emplace_back();
    return static_cast<RegionHandle>(regions_.size() - 1);
}

void RegionStore::grow_nodes() {
    if (node_tags_.size() < tree_.node_capacity()) {
        node_tags_.resize(tree_.node_capacity());
        node_marks_.resize(tree_.node_capacity());
    }
}

std::vector<RegionHandle> RegionStore::build(const std::vector<ConvexRegion>& in) {
    if (live_ != 0) fail(ErrorCode::InvalidArgument, "build needs an empty store");
    for (const ConvexRegion& r : in) require_valid_shape(r);
    // sweep over x-extents for pairwise overlap
    std::vector<std::size_t> order(in.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return in[a].bbox_lo().x < in[b].bbox_lo().x; });
    std::vector<std::size_t> active;
    for (std::size_t i : order) {
        const double x0 = in[i].bbox_lo().x;
        std::erase_if(active, [&](std::size_t j) { return in[j].bbox_hi().x < x0; });
        for (std::size_t j : active) {
            if (in[j].bbox_hi().y < in[i].bbox_lo().y || in[i].bbox_hi().y < in[j].bbox_lo().y) continue;
            if (regions_intersect(in[i], in[j])) fail(ErrorCode::OverlappingInput, "input regions overlap");
        }
        active.push_back(i);
    }
    std::vector<RegionHandle> out;
    out.reserve(in.size());
    for (const ConvexRegion& r : in) {
        const RegionHandle h = fresh_handle();
        regions_[h].shape = r;
        tree_.insert_point(h, r.rep());
        out.push_back(h);
    }
    for (RegionHandle h : out) {
        regions_[h].alive = true;
        ++live_;
        make_dirty(h);
    }
    process_dirty();
    return out;
}

std::optional<RegionHandle> RegionStore::query(Point2 q) {
    if (!tree_.in_root(q)) fail(ErrorCode::OutOfBounds, "query outside root");
    const NodeId L = eot_.locate(q);
    auto test = [&](RegionHandle h) {
        if (counters_) ++counters_->candidates_tested;
        return contains_point(regions_[h].shape, q);
    };
    for (RegionHandle h : node_tags_[L])
        if (test(h)) return h;
    for (int i = 0; i < wedge_.k; ++i) {
        const auto a = ma_.lowest_marked_ancestor(static_cast<MaNode>(L), i);
        if (!a) continue;
        for (const auto& [h, w] : node_marks_[*a])
            if (w == i && test(h)) return h;
    }
    return std::nullopt;
}

void RegionStore::local_update(RegionHandle h, const ConvexRegion& next, double rho) {
    const ConvexRegion cur = region(h);
    if (!is_rho_similar(cur, next, rho)) fail(ErrorCode::NotSimilar, "replacement is not rho-similar");
    require_valid_shape(next);
    check_free(next, h);
    apply(h, Assignment{});
    regions_[h].shape = next;
    try {
        tree_.move_point(h, next.rep());
    } catch (...) {
        regions_[h].shape = cur;
        if (tree_.has_point(h)) {
            make_dirty(h);
            process_dirty();
        }
        throw;
    }
    make_dirty(h);
    process_dirty();
}

RegionHandle RegionStore::insert(const ConvexRegion& r) {
    require_valid_shape(r);
    check_free(r, static_cast<RegionHandle>(-1));
    const NodeId hint = eot_.locate(r.rep());
    const RegionHandle h = fresh_handle();
    regions_[h].shape = r;
    try {
        tree_.insert_point(h, r.rep(), hint);
    } catch (...) {
        free_.push_back(h);
        throw;
    }
    regions_[h].alive = true;
    ++live_;
    make_dirty(h);
    process_dirty();
    return h;
}

void RegionStore::erase(RegionHandle h) {
    region(h);
    apply(h, Assignment{});
    regions_[h].alive = false;
    --live_;
    tree_.delete_point(h);
    free_.push_back(h);
}

void RegionStore::make_dirty(RegionHandle h) {
    if (regions_[h].dirty) return;
    regions_[h].dirty = true;
    dirty_.push_back(h);
}

void RegionStore::dirty_from(NodeId n) {
    if (n == kNoNode || n >= node_tags_.size()) return;
    for (RegionHandle h : node_tags_[n]) make_dirty(h);
    for (const auto& e : node_marks_[n]) make_dirty(e.first);
}

void RegionStore::process_dirty() {
    std::vector<RegionHandle> keep;
    // apply() never dirties, so one pass suffices
    std::vector<RegionHandle> work;
    work.swap(dirty_);
    for (RegionHandle h : work) {
        Slot& s = regions_[h];
        if (!s.alive) {
            s.dirty = false;
            continue;
        }
        if (!tree_.has_point(h)) {
            keep.push_back(h);
            continue;
        }
        s.dirty = false;
        apply(h, compute(h));
    }
    dirty_.insert(dirty_.end(), keep.begin(), keep.end());
}

RegionStore::Assignment RegionStore::compute(RegionHandle h) {
    const ConvexRegion& r = regions_[h].shape;
    const int dd = tag_depth(r);
    const int c = static_cast<int>(std::ceil(std::log2(4.0 * opt_.beta))) + 1;
    const int stop = std::max(0, dd - c);
    std::uint64_t touched = 0;

    NodeId y = tree_.point_leaf(h);
    while (tree_.node(y).cell.depth > stop) {
        y = tree_.node(y).parent;
        ++touched;
    }
    const CellKey yc = tree_.node(y).cell;
    const std::uint64_t lim = std::uint64_t{1} << yc.depth;
    std::vector<NodeId> roots{y};
    bool fallback = false;
    if (yc.depth > 0) {
        for (int dir = 0; dir < 8 && !fallback; ++dir) {
            const auto [dx, dy] = Quadtree::dir_offset(dir, 2);
            const std::int64_t nx = static_cast<std::int64_t>(yc.ix) + dx;
            const std::int64_t ny = static_cast<std::int64_t>(yc.iy) + dy;
            if (nx < 0 || ny < 0 || nx >= static_cast<std::int64_t>(lim) || ny >= static_cast<std::int64_t>(lim)) continue;
            const CellKey nc{static_cast<std::uint64_t>(nx), static_cast<std::uint64_t>(ny), yc.depth};
            if (!region_intersects_cell(r, tree_.extent(nc))) continue;
            const NodeId nb = tree_.neighbor_at_or_above(y, dir);
            ++touched;
            if (nb == kNoNode || tree_.cell_contains(tree_.node(nb).cell, yc)) {
                fallback = true;
                break;
            }
            roots.push_back(nb);
        }
    }
    if (fallback) {
        while (tree_.node(y).parent != kNoNode && !inside(tree_.extent(y), r)) {
            y = tree_.node(y).parent;
            ++touched;
        }
        roots.assign(1, y);
    } else {
        std::sort(roots.begin(), roots.end());
        roots.erase(std::unique(roots.begin(), roots.end()), roots.end());
        std::erase_if(roots, [&](NodeId a) {
            for (NodeId b : roots)
                if (b != a && tree_.cell_contains(tree_.node(b).cell, tree_.node(a).cell)) return true;
            return false;
        });
    }

    Assignment out;
    const Point2 rep = r.rep();
    std::vector<NodeId> stack(roots.begin(), roots.end());
    while (!stack.empty()) {
        const NodeId n = stack.back();
        stack.pop_back();
        ++touched;
        if (!region_intersects_cell(r, tree_.extent(n))) continue;
        const QuadNode& v = tree_.node(n);
        if (v.cell.depth >= dd) {
            // roots sit at or above depth dd - c, so anything this deep is on the frontier
            out.tags.push_back(n);
            out.marks.emplace_back(n, wedge_of(n, rep));
            continue;
        }
        if (gap_meets(n, r)) out.tags.push_back(n);
        if (v.compressed) {
            stack.push_back(v.child[0]);
        } else if (!v.is_leaf()) {
            for (NodeId k : v.child)
                if (k != kNoNode) stack.push_back(k);
        }
    }
    if (counters_) counters_->cells_touched += touched;
    std::sort(out.tags.begin(), out.tags.end());
    std::sort(out.marks.begin(), out.marks.end());
    return out;
}

void RegionStore::apply(RegionHandle h, Assignment next) {
    Assignment& cur = regions_[h].cur;
    std::vector<NodeId> tag_out, tag_in;
    std::set_difference(cur.tags.begin(), cur.tags.end(), next.tags.begin(), next.tags.end(), std::back_inserter(tag_out));
    std::set_difference(next.tags.begin(), next.tags.end(), cur.tags.begin(), cur.tags.end(), std::back_inserter(tag_in));
    std::vector<std::pair<NodeId, int>> mark_out, mark_in;
    std::set_difference(cur.marks.begin(), cur.marks.end(), next.marks.begin(), next.marks.end(), std::back_inserter(mark_out));
    std::set_difference(next.marks.begin(), next.marks.end(), cur.marks.begin(), cur.marks.end(), std::back_inserter(mark_in));

    for (NodeId n : tag_out) erase_one(node_tags_[n], h);
    for (NodeId n : tag_in) node_tags_[n].push_back(h);
    auto wedge_used = [&](NodeId n, int w) {
        for (const auto& e : node_marks_[n])
            if (e.second == w) return true;
        return false;
    };
    for (const auto& [n, w] : mark_out) {
        erase_one(node_marks_[n], std::pair<RegionHandle, int>{h, w});
        if (!wedge_used(n, w)) ma_.unmark(static_cast<MaNode>(n), w);
    }
    for (const auto& [n, w] : mark_in) {
        if (!wedge_used(n, w)) ma_.mark(static_cast<MaNode>(n), w);
        node_marks_[n].emplace_back(h, w);
    }
    ntags_ = ntags_ + tag_in.size() - tag_out.size();
    nmarks_ = nmarks_ + mark_in.size() - mark_out.size();
    if (counters_) {
        counters_->tags_changed += tag_in.size() + tag_out.size();
        counters_->marks_changed += mark_in.size() + mark_out.size();
    }
    cur = std::move(next);
}

void RegionStore::node_added(NodeId n) {
    grow_nodes();
    const NodeId p = tree_.node(n).parent;
    ma_.add_leaf_with_id(static_cast<MaNode>(p), static_cast<MaNode>(n));
    dirty_from(p);
}

void RegionStore::node_removing(NodeId n) {
    for (RegionHandle h : node_tags_[n]) {
        auto& t = regions_[h].cur.tags;
        t.erase(std::remove(t.begin(), t.end(), n), t.end());
        make_dirty(h);
    }
    for (const auto& [h, w] : node_marks_[n]) {
        auto& m = regions_[h].cur.marks;
        m.erase(std::remove(m.begin(), m.end(), std::pair<NodeId, int>{n, w}), m.end());
        if (ma_.is_marked(static_cast<MaNode>(n), w)) ma_.unmark(static_cast<MaNode>(n), w);
        make_dirty(h);
    }
    ntags_ -= node_tags_[n].size();
    nmarks_ -= node_marks_[n].size();
    node_tags_[n].clear();
    node_marks_[n].clear();
    ma_.remove_leaf(static_cast<MaNode>(n));
}

void RegionStore::node_reparented(NodeId n, NodeId old_parent) {
    const NodeId p = tree_.node(n).parent;
    ma_.move_subtree(static_cast<MaNode>(n), static_cast<MaNode>(p));
    dirty_from(n);
    dirty_from(p);
    if (tree_.alive(old_parent)) dirty_from(old_parent);
}

void RegionStore::node_changed(NodeId n) {
    dirty_from(n);
    dirty_from(tree_.node(n).parent);
}

RegionStore::Assignment RegionStore::scratch_assignment(RegionHandle h) const {
    const ConvexRegion& r = region(h);
    const int dd = tag_depth(r);
    Assignment out;
    for (NodeId n = 0; n < tree_.node_capacity(); ++n) {
        if (!tree_.alive(n)) continue;
        const QuadNode& v = tree_.node(n);
        if (!region_intersects_cell(r, tree_.extent(n))) continue;
        const bool top = v.parent == kNoNode || tree_.node(v.parent).cell.depth < dd;
        if (v.cell.depth >= dd && top) {
            out.tags.push_back(n);
            out.marks.emplace_back(n, wedge_of(n, r.rep()));
        } else if (v.cell.depth < dd && gap_meets(n, r)) {
            out.tags.push_back(n);
        }
    }
    std::sort(out.tags.begin(), out.tags.end());
    std::sort(out.marks.begin(), out.marks.end());
    return out;
}

std::vector<std::string> RegionStore::check_invariants() const {
    std::vector<std::string> bad = tree_.check_invariants();
    for (auto& s : eot_.check_invariants(false)) bad.push_back("edge oracle: " + s);
    for (auto& s : ma_.check_invariants()) bad.push_back("marked ancestor: " + s);
    if (!dirty_.empty()) bad.push_back("dirty regions left over");

    const std::size_t cap = tree_.node_capacity();
    std::vector<std::vector<RegionHandle>> tags(cap);
    std::vector<std::vector<std::pair<RegionHandle, int>>> marks(cap);
    std::size_t live = 0;
    for (RegionHandle h = 0; h < regions_.size(); ++h) {
        const Slot& s = regions_[h];
        if (!s.alive) continue;
        ++live;
        if (!tree_.has_point(h)) {
            bad.push_back("region " + std::to_string(h) + " has no stored point");
            continue;
        }
        if (!(s.cur == scratch_assignment(h))) bad.push_back("region " + std::to_string(h) + " assignment differs from rescan");
        if (tree_.side(storage_node(h)) < s.shape.diam() / (4.0 * opt_.beta))
            bad.push_back("region " + std::to_string(h) + " stored in a cell below |R|/(4 beta)");
        for (NodeId n : s.cur.tags) tags[n].push_back(h);
        for (const auto& [n, w] : s.cur.marks) marks[n].emplace_back(h, w);
    }
    if (live != live_) bad.push_back("live count mismatch");
    std::size_t nt = 0, nm = 0;
    for (NodeId n = 0; n < cap; ++n) {
        auto a = n < node_tags_.size() ? node_tags_[n] : std::vector<RegionHandle>{};
        auto b = n < node_marks_.size() ? node_marks_[n] : std::vector<std::pair<RegionHandle, int>>{};
        nt += a.size();
        nm += b.size();
        std::sort(a.begin(), a.end());
        std::sort(b.begin(), b.end());
        if (a != tags[n]) bad.push_back("tag list of node " + std::to_string(n) + " out of sync");
        if (b != marks[n]) bad.push_back("mark list of node " + std::to_string(n) + " out of sync");
        if (!tree_.alive(n)) continue;
        for (int w = 0; w < wedge_.k; ++w) {
            const bool want = std::any_of(b.begin(), b.end(), [&](const auto& e) { return e.second == w; });
            if (ma_.is_marked(static_cast<MaNode>(n), w) != want)
                bad.push_back("wedge mark of node " + std::to_string(n) + " out of sync");
        }
    }
    if (nt != ntags_ || nm != nmarks_) bad.push_back("entry counts drifted");
    if (opt_.debug_checks) {
        for (RegionHandle a = 0; a < regions_.size(); ++a)
            for (RegionHandle b = a + 1; b < regions_.size(); ++b)
                if (regions_[a].alive && regions_[b].alive && regions_intersect(regions_[a].shape, regions_[b].shape))
                    bad.push_back("regions " + std::to_string(a) + " and " + std::to_string(b) + " overlap");
    }
    return bad;
}

}  // namespace fatloc
