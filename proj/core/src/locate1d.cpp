#include "fatloc/locate1d.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace fatloc {

namespace {
CellExtent root_cell(const Interval1& r) {
    if (!(r.hi > r.lo)) fail(ErrorCode::InvalidArgument, "empty root interval");
    return CellExtent{{r.lo, 0.0}, r.hi - r.lo, 0};
}
}  // namespace

IntervalSet::IntervalSet(Interval1 root, Options opt, Counters* counters)
    : root_(root), opt_(opt), counters_(counters), tree_(1, root_cell(root), opt.compression, counters), eot_(tree_, counters) {
    if (opt_.r_nbr < 0) fail(ErrorCode::InvalidArgument, "negative neighbour radius");
    tree_.add_observer(&eot_);
}

void IntervalSet::set_counters(Counters* c) {
    counters_ = c;
    tree_.set_counters(c);
    eot_.set_counters(c);
}

const Interval1& IntervalSet::interval(IntervalHandle h) const {
    if (!valid(h)) fail(ErrorCode::UnknownHandle, "no interval " + std::to_string(h));
    return slots_[h].iv;
}

void IntervalSet::require_inside(const Interval1& iv) const {
    if (iv.lo < root_.lo || iv.hi >= root_.hi) fail(ErrorCode::OutOfBounds, "interval leaves the root");
}

void IntervalSet::check_free(const Interval1& iv, IntervalHandle ignore) const {
    if (!opt_.debug_checks) return;
    auto it = by_lo_.upper_bound(iv.hi);
    if (it == by_lo_.begin()) return;
    --it;
    // the last interval starting at or before iv.hi is the only one that can reach it
    if (it->second == ignore) {
        if (it == by_lo_.begin()) return;
        --it;
    }
    if (slots_[it->second].iv.overlaps(iv)) fail(ErrorCode::OverlapViolation, "interval overlaps a stored interval");
}

IntervalHandle IntervalSet::fresh_handle() {
    if (!free_.empty()) {
        const IntervalHandle h = free_.back();
        free_.pop_back();
        return h;
    }
    slots_.emplace_back();
    return static_cast<IntervalHandle>(slots_.size() - 1);
}

std::vector<IntervalHandle> IntervalSet::build(const std::vector<Interval1>& intervals) {
    if (live_ != 0) fail(ErrorCode::InvalidArgument, "build needs an empty set");
    std::vector<std::size_t> order(intervals.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return intervals[a].lo < intervals[b].lo; });
    for (std::size_t i = 0; i < order.size(); ++i) {
        require_inside(intervals[order[i]]);
        if (i > 0 && intervals[order[i - 1]].overlaps(intervals[order[i]]))
            fail(ErrorCode::OverlappingInput, "input intervals overlap");
    }
    std::vector<IntervalHandle> out;
    out.reserve(intervals.size());
    for (const Interval1& iv : intervals) {
        const IntervalHandle h = fresh_handle();
        tree_.insert_point(h, {iv.midpoint(), 0.0});
        slots_[h] = Slot{iv, true};
        if (opt_.debug_checks) by_lo_[iv.lo] = h;
        ++live_;
        out.push_back(h);
    }
    return out;
}

std::pair<double, double> IntervalSet::piece(NodeId n, double x) const {
    const CellExtent e = tree_.extent(n);
    const QuadNode& v = tree_.node(n);
    if (!v.compressed) return {e.anchor.x, e.anchor.x + e.side};
    const CellExtent w = tree_.extent(v.child[0]);
    if (x < w.anchor.x) return {e.anchor.x, w.anchor.x};
    return {w.anchor.x + w.side, e.anchor.x + e.side};
}

std::optional<IntervalHandle> IntervalSet::query(double x) const {
    if (!(x >= root_.lo && x < root_.hi)) fail(ErrorCode::OutOfBounds, "query outside root");
    const NodeId L = eot_.locate({x, 0.0});
    std::optional<IntervalHandle> hit;
    auto test = [&](NodeId n) {
        const QuadNode& v = tree_.node(n);
        if (!v.is_leaf()) return;
        for (PointId p : v.points) {
            if (p == kNoPoint) continue;
            if (counters_) ++counters_->candidates_tested;
            if (slots_[p].iv.contains(x)) hit = p;
        }
    };
    test(L);
    for (int dir : {-1, 1}) {
        NodeId n = L;
        double at = x;
        for (int k = 0; k < opt_.r_nbr; ++k) {
            const auto [lo, hi] = piece(n, at);
            const double next = dir < 0 ? std::nextafter(lo, -std::numeric_limits<double>::infinity()) : hi;
            if (next < root_.lo || next >= root_.hi) break;
            std::uint64_t steps = 0;
            n = tree_.locate_from(n, {next, 0.0}, &steps);
            if (counters_) counters_->cells_touched += steps;
            at = next;
            test(n);
        }
    }
    return hit;
}

void IntervalSet::local_update(IntervalHandle h, Interval1 next, double rho) {
    const Interval1 cur = interval(h);
    if (!is_rho_similar(cur, next, rho)) fail(ErrorCode::NotSimilar, "replacement is not rho-similar");
    require_inside(next);
    check_free(next, h);
    tree_.move_point(h, {next.midpoint(), 0.0});
    if (opt_.debug_checks) {
        by_lo_.erase(cur.lo);
        by_lo_[next.lo] = h;
    }
    slots_[h].iv = next;
}

IntervalHandle IntervalSet::insert(Interval1 iv) {
    require_inside(iv);
    check_free(iv, static_cast<IntervalHandle>(-1));
    const Point2 m{iv.midpoint(), 0.0};
    const NodeId hint = eot_.locate(m);
    const IntervalHandle h = fresh_handle();
    try {
        tree_.insert_point(h, m, hint);
    } catch (...) {
        free_.push_back(h);
        throw;
    }
    slots_[h] = Slot{iv, true};
    if (opt_.debug_checks) by_lo_[iv.lo] = h;
    ++live_;
    return h;
}

void IntervalSet::erase(IntervalHandle h) {
    const Interval1 cur = interval(h);
    tree_.delete_point(h);
    if (opt_.debug_checks) by_lo_.erase(cur.lo);
    slots_[h].alive = false;
    free_.push_back(h);
    --live_;
}

std::vector<std::string> IntervalSet::check_invariants() const {
    std::vector<std::string> bad = tree_.check_invariants();
    for (auto& s : eot_.check_invariants(false)) bad.push_back("edge oracle: " + s);
    std::vector<Interval1> ivs;
    for (IntervalHandle h = 0; h < slots_.size(); ++h) {
        if (!slots_[h].alive) continue;
        ivs.push_back(slots_[h].iv);
        if (!tree_.has_point(h)) {
            bad.push_back("interval without a stored midpoint");
            continue;
        }
        const NodeId leaf = tree_.point_leaf(h);
        if (slots_[h].iv.diameter() > 4 * tree_.side(leaf))
            bad.push_back("interval " + std::to_string(h) + " more than four times its leaf");
    }
    std::sort(ivs.begin(), ivs.end(), [](const Interval1& a, const Interval1& b) { return a.lo < b.lo; });
    for (std::size_t i = 1; i < ivs.size(); ++i)
        if (ivs[i - 1].overlaps(ivs[i])) bad.push_back("stored intervals overlap");
    if (ivs.size() != live_) bad.push_back("live count mismatch");
    return bad;
}

}  // namespace fatloc
