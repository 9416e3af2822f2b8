#include "fatloc/edge_oracle.hpp"

#include <algorithm>
#include <bit>
#include <climits>
#include <cmath>
#include <sstream>

namespace fatloc {

namespace {
int ceil_log2(std::size_t n) { return n <= 1 ? 0 : static_cast<int>(std::bit_width(n - 1)); }
int floor_log2(std::size_t n) { return n <= 1 ? 0 : static_cast<int>(std::bit_width(n)) - 1; }
constexpr int kFingerWalk = 8;
}  // namespace

EdgeOracleTree::EdgeOracleTree(const Quadtree& tree, Counters* counters) : tree_(tree), counters_(counters) {
    root_ = new_inner(true);
    const int b = new_bucket();
    const int r = static_cast<int>(recs_.size());
    recs_.push_back(Record{node_key(tree_.root()), tree_.root(), false, true, -1, -1, b});
    ++nrecords_;
    buckets_[b].head = buckets_[b].tail = r;
    buckets_[b].size = 1;
    inners_[root_].kids.push_back(b);
    inners_[root_].seps.push_back(Key{});
    buckets_[b].parent = root_;
    node_rec_.assign(tree_.node_capacity(), -1);
    tail_rec_.assign(tree_.node_capacity(), -1);
    node_rec_[tree_.root()] = r;

    // preorder over the existing tree
    std::vector<NodeId> stack{tree_.root()};
    while (!stack.empty()) {
        const NodeId v = stack.back();
        stack.pop_back();
        if (v != tree_.root()) on_edge_inserted(v);
        const QuadNode& n = tree_.node(v);
        const int kids = n.compressed ? 1 : (n.is_leaf() ? 0 : tree_.fanout());
        for (int i = kids - 1; i >= 0; --i) stack.push_back(n.child[i]);
    }
    for (NodeId v = 0; v < tree_.node_capacity(); ++v)
        if (tree_.alive(v) && tree_.node(v).compressed) sync_tail(v);
    drain();
}

// ---------------------------------------------------------------- keys

EdgeOracleTree::Key EdgeOracleTree::node_key(NodeId n) const {
    const CellKey& c = tree_.node(n).cell;
    return Key{tree_.zkey(c), c.depth, false, n};
}

bool EdgeOracleTree::tail_wanted(NodeId n, Key* key) const {
    const QuadNode& v = tree_.node(n);
    if (!v.compressed) return false;
    const CellKey& w = tree_.node(v.child[0]).cell;
    const ZKey end_w = tree_.zkey(w) + tree_.zspan(w.depth);
    const ZKey end_v = tree_.zkey(v.cell) + tree_.zspan(v.cell.depth);
    if (end_w == end_v) return false;
    *key = Key{end_w, w.depth, true, n};
    return true;
}

void EdgeOracleTree::sync_tail(NodeId n) {
    if (!tree_.alive(n)) return;
    if (tail_rec_.size() <= n) tail_rec_.resize(tree_.node_capacity(), -1);
    Key k;
    const bool want = tail_wanted(n, &k);
    int& have = tail_rec_[n];
    if (have != -1) {
        const Key& hk = recs_[have].key;
        if (want && hk.z == k.z && hk.depth == k.depth) return;
        erase_record(have);
        have = -1;
    }
    if (want) {
        const int finger = n < node_rec_.size() ? node_rec_[n] : -1;
        tail_rec_[n] = insert_record(k, n, true, finger);
    }
}

// ---------------------------------------------------------------- observer entry points

void EdgeOracleTree::on_edge_inserted(NodeId child) {
    if (node_rec_.size() <= child) node_rec_.resize(tree_.node_capacity(), -1);
    if (tail_rec_.size() <= child) tail_rec_.resize(tree_.node_capacity(), -1);
    if (node_rec_[child] != -1) fail(ErrorCode::InvalidArgument, "edge already recorded");
    const NodeId p = tree_.node(child).parent;
    const int finger = (p != kNoNode && p < node_rec_.size()) ? node_rec_[p] : -1;
    node_rec_[child] = insert_record(node_key(child), child, false, finger);
}

void EdgeOracleTree::on_edge_deleted(NodeId child) {
    if (child >= node_rec_.size() || node_rec_[child] == -1 || child == tree_.root())
        fail(ErrorCode::UnknownEdge, "no record for edge");
    erase_record(node_rec_[child]);
    node_rec_[child] = -1;
}

void EdgeOracleTree::node_removing(NodeId n) {
    if (n < tail_rec_.size() && tail_rec_[n] != -1) {
        erase_record(tail_rec_[n]);
        tail_rec_[n] = -1;
    }
    on_edge_deleted(n);
}

// ---------------------------------------------------------------- search

int EdgeOracleTree::find_pred(const Key& k, std::uint64_t* cmp) const {
    int v = root_;
    std::uint64_t c = 0;
    while (true) {
        const Inner& in = inners_[v];
        // last kid whose separator is <= k
        int lo = 0, hi = static_cast<int>(in.kids.size()) - 1;
        while (lo < hi) {
            const int mid = (lo + hi + 1) / 2;
            ++c;
            if (!less(k, in.seps[mid])) lo = mid;
            else hi = mid - 1;
        }
        const int kid = in.kids[lo];
        if (!in.leaf_level) {
            v = kid;
            continue;
        }
        int r = buckets_[kid].head;
        ++c;
        if (less(k, recs_[r].key)) {
            if (cmp) *cmp += c;
            return recs_[r].prev;
        }
        while (recs_[r].next != -1) {
            ++c;
            if (less(k, recs_[recs_[r].next].key)) break;
            r = recs_[r].next;
        }
        if (cmp) *cmp += c;
        return r;
    }
}

int EdgeOracleTree::find_strict_pred(const Key& k) const {
    int v = root_;
    while (true) {
        const Inner& in = inners_[v];
        int j = 0;
        for (int i = 1; i < static_cast<int>(in.kids.size()); ++i)
            if (less(in.seps[i], k)) j = i;
        const int kid = in.kids[j];
        if (!in.leaf_level) {
            v = kid;
            continue;
        }
        int r = buckets_[kid].head;
        if (!less(recs_[r].key, k)) return recs_[r].prev;
        while (recs_[r].next != -1 && less(recs_[recs_[r].next].key, k)) r = recs_[r].next;
        return r;
    }
}

NodeId EdgeOracleTree::locate(Point2 q) const {
    if (!tree_.in_root(q)) fail(ErrorCode::OutOfBounds, "query outside root cell");
    std::uint64_t cmp = 0;
    const int r = find_pred(Key{tree_.zkey(q), INT_MAX, true, kNoNode}, &cmp);
    if (counters_) counters_->edges_examined += cmp;
    return recs_[r].node;
}

// ---------------------------------------------------------------- records

int EdgeOracleTree::resolve(int r) {
    int b = recs_[r].bucket;
    while (buckets_[b].fwd != -1) b = buckets_[b].fwd;
    while (buckets_[b].split_child != -1) {
        const int sc = buckets_[b].split_child;
        const int h = buckets_[sc].head;
        if (h == -1 || less(recs_[r].key, recs_[h].key)) break;
        b = sc;
    }
    recs_[r].bucket = b;
    return b;
}

int EdgeOracleTree::insert_record(const Key& k, NodeId node, bool tail, int finger) {
    const std::uint64_t work_before = work_;
    int pred = -1;
    if (finger != -1 && recs_[finger].alive && less(recs_[finger].key, k)) {
        int r = finger;
        int steps = 0;
        while (recs_[r].next != -1 && less(recs_[recs_[r].next].key, k) && steps < kFingerWalk) {
            r = recs_[r].next;
            ++steps;
        }
        work_ += static_cast<std::uint64_t>(steps) + 1;
        if (recs_[r].next == -1 || !less(recs_[recs_[r].next].key, k)) pred = r;
    }
    if (pred == -1) {
        pred = find_strict_pred(k);
        work_ += static_cast<std::uint64_t>(height()) + 1;
    }
    int r;
    if (!free_recs_.empty()) {
        r = free_recs_.back();
        free_recs_.pop_back();
    } else {
        r = static_cast<int>(recs_.size());
        recs_.emplace_back();
    }
    int b = resolve(pred);
    bool as_head = false;
    if (buckets_[b].tail == pred && recs_[pred].next != -1) {
        // keys at or past the next separator belong to the next bucket
        Key sep;
        work_ += static_cast<std::uint64_t>(height());
        if (separator_after(b, &sep) && !less(k, sep)) {
            b = resolve(recs_[pred].next);
            as_head = true;
        }
    }
    Record& rec = recs_[r];
    rec = Record{k, node, tail, true, pred, recs_[pred].next, b};
    if (rec.next != -1) recs_[rec.next].prev = r;
    recs_[pred].next = r;
    Bucket& bk = buckets_[b];
    if (as_head) bk.head = r;
    else if (bk.tail == pred) bk.tail = r;
    ++bk.size;
    ++nrecords_;
    for (Job& j : jobs_)
        if (j.kind == JobKind::SplitWalk && j.a == b && less(k, recs_[j.cursor].key)) ++j.count;
    maybe_schedule(b);
    if (!buckets_.empty()) maybe_schedule(static_cast<int>(work_ % buckets_.size()));
    run_jobs(kStepsPerUpdate);
    max_update_work_ = std::max(max_update_work_, work_ - work_before);
    if (counters_) counters_->eot_steps += work_ - work_before;
    return r;
}

void EdgeOracleTree::note_cursor_erase(int r) {
    for (Job& j : jobs_) {
        if (j.cursor != r) continue;
        if (j.kind == JobKind::SplitWalk) {
            const int nx = recs_[r].next;
            const int b = j.a;
            // cursor was the tail: nothing left to split off
            if (nx == -1 || buckets_[b].tail == r) j.cursor = -1;
            else j.cursor = nx;
        } else {
            j.cursor = recs_[r].next;
        }
    }
}

void EdgeOracleTree::erase_record(int r) {
    const std::uint64_t work_before = work_;
    ++work_;
    const int b = resolve(r);
    for (Job& j : jobs_)
        if (j.kind == JobKind::SplitWalk && j.a == b && j.cursor != -1 && j.cursor != r && less(recs_[r].key, recs_[j.cursor].key))
            --j.count;
    note_cursor_erase(r);
    Record& rec = recs_[r];
    Bucket& bk = buckets_[b];
    if (bk.head == r) bk.head = (bk.tail == r) ? -1 : rec.next;
    if (bk.tail == r) bk.tail = (bk.head == -1) ? -1 : rec.prev;
    if (rec.prev != -1) recs_[rec.prev].next = rec.next;
    if (rec.next != -1) recs_[rec.next].prev = rec.prev;
    rec.alive = false;
    rec.prev = rec.next = -1;
    free_recs_.push_back(r);
    --bk.size;
    --nrecords_;
    if (bk.size == 0) {
        if (bk.parent != -1) remove_kid(bk.parent, b);
        bk.parent = -1;
        if (!bk.busy) {
            bk.alive = false;
            free_buckets_.push_back(b);
            --nbuckets_;
        }
    } else {
        maybe_schedule(b);
    }
    if (!buckets_.empty()) maybe_schedule(static_cast<int>(work_ % buckets_.size()));
    run_jobs(kStepsPerUpdate);
    max_update_work_ = std::max(max_update_work_, work_ - work_before);
    if (counters_) counters_->eot_steps += work_ - work_before;
}

// ---------------------------------------------------------------- buckets & inner nodes

int EdgeOracleTree::new_bucket() {
    int b;
    if (!free_buckets_.empty()) {
        b = free_buckets_.back();
        free_buckets_.pop_back();
    } else {
        b = static_cast<int>(buckets_.size());
        buckets_.emplace_back();
    }
    buckets_[b] = Bucket{};
    buckets_[b].alive = true;
    ++nbuckets_;
    return b;
}

int EdgeOracleTree::new_inner(bool leaf_level) {
    int v;
    if (!free_inners_.empty()) {
        v = free_inners_.back();
        free_inners_.pop_back();
    } else {
        v = static_cast<int>(inners_.size());
        inners_.emplace_back();
    }
    inners_[v] = Inner{};
    inners_[v].leaf_level = leaf_level;
    inners_[v].alive = true;
    return v;
}

int EdgeOracleTree::kid_index(int inner, int kid) const {
    const auto& k = inners_[inner].kids;
    for (int i = 0; i < static_cast<int>(k.size()); ++i)
        if (k[i] == kid) return i;
    return -1;
}

void EdgeOracleTree::set_parent(int kid, bool is_bucket, int parent) {
    if (is_bucket) buckets_[kid].parent = parent;
    else inners_[kid].parent = parent;
}

void EdgeOracleTree::remove_kid(int inner, int kid) {
    Inner& in = inners_[inner];
    const int i = kid_index(inner, kid);
    in.kids.erase(in.kids.begin() + i);
    in.seps.erase(in.seps.begin() + i);
    if (!in.seps.empty()) in.seps[0] = Key{};
    if (in.kids.size() < 2) jobs_.push_back(Job{JobKind::InnerFix, inner});
}

void EdgeOracleTree::insert_kid_after(int inner, int after, int kid, const Key& sep) {
    Inner& in = inners_[inner];
    const int i = kid_index(inner, after) + 1;
    in.kids.insert(in.kids.begin() + i, kid);
    in.seps.insert(in.seps.begin() + i, sep);
    set_parent(kid, in.leaf_level, inner);
    if (in.kids.size() > 4) jobs_.push_back(Job{JobKind::InnerFix, inner});
}

void EdgeOracleTree::fix_inner(int v) {
    if (!inners_[v].alive) return;
    Inner& in = inners_[v];
    const bool lvl = in.leaf_level;
    if (in.kids.size() > 4) {
        const int mid = static_cast<int>(in.kids.size()) / 2;
        const int w = new_inner(lvl);
        Inner& a = inners_[v];
        Inner& b = inners_[w];
        b.kids.assign(a.kids.begin() + mid, a.kids.end());
        b.seps.assign(a.seps.begin() + mid, a.seps.end());
        const Key sep = b.seps[0];
        b.seps[0] = Key{};
        a.kids.resize(mid);
        a.seps.resize(mid);
        for (int k : b.kids) set_parent(k, lvl, w);
        if (a.parent == -1) {
            const int r = new_inner(false);
            inners_[r].kids = {v, w};
            inners_[r].seps = {Key{}, sep};
            inners_[v].parent = r;
            inners_[w].parent = r;
            root_ = r;
        } else {
            insert_kid_after(inners_[v].parent, v, w, sep);
        }
        return;
    }
    if (in.parent == -1) {
        if (in.kids.size() == 1 && !lvl) {
            const int k = in.kids[0];
            inners_[k].parent = -1;
            root_ = k;
            inners_[v].alive = false;
            free_inners_.push_back(v);
        }
        return;
    }
    if (in.kids.size() >= 2) return;
    const int p = in.parent;
    if (in.kids.empty()) {
        remove_kid(p, v);
        inners_[v].alive = false;
        free_inners_.push_back(v);
        return;
    }
    const int i = kid_index(p, v);
    const bool left = i > 0;
    const int s = inners_[p].kids[left ? i - 1 : i + 1];
    Inner& sib = inners_[s];
    if (sib.kids.size() + in.kids.size() <= 4) {
        // fuse right into left
        const int L = left ? s : v;
        const int R = left ? v : s;
        const Key rsep = inners_[p].seps[kid_index(p, R)];
        Inner& l = inners_[L];
        Inner& r = inners_[R];
        r.seps[0] = rsep;
        for (std::size_t k = 0; k < r.kids.size(); ++k) {
            l.kids.push_back(r.kids[k]);
            l.seps.push_back(r.seps[k]);
            set_parent(r.kids[k], lvl, L);
        }
        r.kids.clear();
        r.seps.clear();
        inners_[R].alive = false;
        free_inners_.push_back(R);
        remove_kid(p, R);
        if (inners_[L].kids.size() > 4) jobs_.push_back(Job{JobKind::InnerFix, L});
        return;
    }
    if (left) {
        const int k = sib.kids.back();
        const Key ksep = sib.seps.back();
        sib.kids.pop_back();
        sib.seps.pop_back();
        Inner& me = inners_[v];
        me.seps[0] = inners_[p].seps[i];
        me.kids.insert(me.kids.begin(), k);
        me.seps.insert(me.seps.begin(), Key{});
        inners_[p].seps[i] = ksep;
        set_parent(k, lvl, v);
    } else {
        const int k = sib.kids.front();
        const Key ksep = inners_[p].seps[i + 1];
        sib.kids.erase(sib.kids.begin());
        sib.seps.erase(sib.seps.begin());
        inners_[p].seps[i + 1] = sib.seps[0];
        sib.seps[0] = Key{};
        Inner& me = inners_[v];
        me.kids.push_back(k);
        me.seps.push_back(ksep);
        set_parent(k, lvl, v);
    }
}

bool EdgeOracleTree::separator_after(int b, Key* sep) const {
    int v = b;
    int p = buckets_[b].parent;
    while (p != -1) {
        const Inner& in = inners_[p];
        const int i = kid_index(p, v);
        if (i + 1 < static_cast<int>(in.kids.size())) {
            *sep = in.seps[i + 1];
            return true;
        }
        v = p;
        p = in.parent;
    }
    return false;
}

int EdgeOracleTree::height() const {
    int h = 1;
    for (int v = root_; !inners_[v].leaf_level; v = inners_[v].kids[0]) ++h;
    return h;
}

int EdgeOracleTree::lo_size() const { return std::max(1, floor_log2(nrecords_) / 2); }
int EdgeOracleTree::hi_size() const { return std::max(4, ceil_log2(nrecords_)); }

void EdgeOracleTree::maybe_schedule(int b) {
    Bucket& bk = buckets_[b];
    if (!bk.alive || bk.busy || bk.parent == -1 || bk.fwd != -1) return;
    if (bk.size > hi_size()) {
        bk.busy = true;
        jobs_.push_back(Job{JobKind::SplitWalk, b, -1, bk.head, 0});
        return;
    }
    if (bk.size >= lo_size()) return;
    const int p = bk.parent;
    const Inner& in = inners_[p];
    if (in.kids.size() < 2) return;
    const int i = kid_index(p, b);
    const int L = i > 0 ? in.kids[i - 1] : b;
    const int R = i > 0 ? b : in.kids[i + 1];
    if (buckets_[L].busy || buckets_[R].busy) return;
    // R's records now belong to L; labels follow lazily
    Bucket& l = buckets_[L];
    Bucket& r = buckets_[R];
    const int start = r.head;
    l.tail = r.tail;
    l.size += r.size;
    r.fwd = L;
    r.size = 0;
    r.head = r.tail = -1;
    remove_kid(p, R);
    r.parent = -1;
    l.busy = r.busy = true;
    jobs_.push_back(Job{JobKind::MergeRelabel, R, L, start, 0});
}

bool EdgeOracleTree::step(Job& j) {
    switch (j.kind) {
        case JobKind::InnerFix:
            fix_inner(j.a);
            return true;
        case JobKind::SplitWalk: {
            Bucket& b = buckets_[j.a];
            if (j.cursor == -1 || b.size <= 1 || b.parent == -1) {
                b.busy = false;
                if (b.size == 0 && b.parent == -1) {
                    b.alive = false;
                    free_buckets_.push_back(j.a);
                    --nbuckets_;
                }
                return true;
            }
            if (j.count < b.size / 2) {
                if (j.cursor == b.tail) {
                    b.busy = false;
                    return true;
                }
                j.cursor = recs_[j.cursor].next;
                ++j.count;
                return false;
            }
            if (j.count == 0) {
                b.busy = false;
                return true;
            }
            const int sc = new_bucket();
            Bucket& bb = buckets_[j.a];
            Bucket& s = buckets_[sc];
            s.head = j.cursor;
            s.tail = bb.tail;
            s.size = bb.size - j.count;
            bb.size = j.count;
            bb.tail = recs_[j.cursor].prev;
            bb.split_child = sc;
            s.busy = true;
            insert_kid_after(bb.parent, j.a, sc, recs_[j.cursor].key);
            j.kind = JobKind::SplitRelabel;
            j.b = sc;
            return false;
        }
        case JobKind::SplitRelabel: {
            const int c = j.cursor;
            if (c != -1) {
                int lab = recs_[c].bucket;
                if (lab == j.a || lab == j.b) {
                    recs_[c].bucket = j.b;
                    j.cursor = recs_[c].next;
                    return false;
                }
            }
            buckets_[j.a].split_child = -1;
            buckets_[j.a].busy = false;
            buckets_[j.b].busy = false;
            for (int x : {j.a, j.b}) {
                Bucket& bk = buckets_[x];
                if (bk.size == 0 && bk.parent == -1 && bk.alive) {
                    bk.alive = false;
                    free_buckets_.push_back(x);
                    --nbuckets_;
                }
            }
            maybe_schedule(j.a);
            maybe_schedule(j.b);
            return true;
        }
        case JobKind::MergeRelabel: {
            const int c = j.cursor;
            if (c != -1) {
                int lab = recs_[c].bucket;
                if (lab == j.a || lab == j.b) {
                    recs_[c].bucket = j.b;
                    j.cursor = recs_[c].next;
                    return false;
                }
            }
            Bucket& r = buckets_[j.a];
            r.alive = false;
            r.busy = false;
            r.fwd = -1;
            free_buckets_.push_back(j.a);
            --nbuckets_;
            Bucket& l = buckets_[j.b];
            l.busy = false;
            if (l.size == 0 && l.parent == -1) {
                l.alive = false;
                free_buckets_.push_back(j.b);
                --nbuckets_;
            } else {
                maybe_schedule(j.b);
            }
            return true;
        }
    }
    return true;
}

void EdgeOracleTree::run_jobs(int budget) {
    while (budget > 0 && !jobs_.empty()) {
        Job j = jobs_.front();
        jobs_.pop_front();
        ++work_;
        --budget;
        if (!step(j)) jobs_.push_front(j);
    }
}

void EdgeOracleTree::drain() {
    while (true) {
        while (!jobs_.empty()) run_jobs(1 << 20);
        for (std::size_t b = 0; b < buckets_.size(); ++b) maybe_schedule(static_cast<int>(b));
        if (jobs_.empty()) break;
    }
}

// ---------------------------------------------------------------- checks

std::vector<std::string> EdgeOracleTree::check_invariants(bool strict) const {
    std::vector<std::string> bad;
    auto say = [&](const std::string& s) { bad.push_back(s); };

    // walk the list
    int first = -1;
    std::size_t count = 0;
    for (std::size_t i = 0; i < recs_.size(); ++i)
        if (recs_[i].alive && recs_[i].prev == -1) {
            if (first != -1) say("two list heads");
            first = static_cast<int>(i);
        }
    for (int r = first, prev = -1; r != -1; prev = r, r = recs_[r].next) {
        ++count;
        if (recs_[r].prev != prev) say("broken prev pointer");
        if (prev != -1 && !less(recs_[prev].key, recs_[r].key)) say("records out of order");
        if (count > nrecords_ + 1) {
            say("cycle in record list");
            break;
        }
    }
    if (count != nrecords_) say("record count mismatch");

    // tree shape and bucket coverage
    std::vector<std::pair<int, int>> stack{{root_, 0}};
    if (inners_[root_].parent != -1) say("root has a parent");
    int leaf_depth = -1;
    while (!stack.empty()) {
        auto [v, d] = stack.back();
        stack.pop_back();
        const Inner& in = inners_[v];
        if (!in.alive) say("dead inner reachable");
        if (in.kids.size() != in.seps.size()) say("separator count mismatch");
        if (in.kids.empty()) say("empty inner node");
        if (strict && (in.kids.size() > 4 || (v != root_ && in.kids.size() < 2))) say("inner fan-out out of range");
        for (std::size_t i = in.kids.size(); i-- > 0;) {
            const int k = in.kids[i];
            if (in.leaf_level) {
                if (buckets_[k].parent != v) say("bucket parent mismatch");
                if (leaf_depth == -1) leaf_depth = d;
                else if (leaf_depth != d) say("buckets at different depths");
            } else {
                if (inners_[k].parent != v) say("inner parent mismatch");
                stack.push_back({k, d + 1});
            }
        }
    }
    // buckets left to right
    std::vector<int> buckets_lr;
    {
        std::vector<int> st{root_};
        while (!st.empty()) {
            const int v = st.back();
            st.pop_back();
            const Inner& in = inners_[v];
            if (in.leaf_level) {
                for (int k : in.kids) buckets_lr.push_back(k);
            } else {
                for (std::size_t i = in.kids.size(); i-- > 0;) st.push_back(in.kids[i]);
            }
        }
    }
    int expect = first;
    for (int b : buckets_lr) {
        const Bucket& bk = buckets_[b];
        if (!bk.alive) say("dead bucket in tree");
        if (bk.head != expect) say("bucket does not start where previous ended");
        int n = 0;
        int r = bk.head;
        while (r != -1) {
            ++n;
            if (r == bk.tail) break;
            r = recs_[r].next;
        }
        if (n != bk.size) say("bucket size mismatch");
        if (strict) {
            const int lo = std::max(1, floor_log2(nrecords_) / 2);
            const int hi = 2 * std::max(4, ceil_log2(nrecords_));
            if (buckets_lr.size() > 1 && (bk.size < lo || bk.size > hi)) say("bucket size out of range");
        }
        Key sep;
        if (bk.tail != -1 && separator_after(b, &sep) && !less(recs_[bk.tail].key, sep)) say("record at or past the next separator");
        expect = bk.tail == -1 ? -1 : recs_[bk.tail].next;
    }
    if (expect != -1) say("records after last bucket");

    // separators are lower bounds of their subtrees
    std::vector<int> st{root_};
    auto min_key = [&](int v) {
        while (!inners_[v].leaf_level) v = inners_[v].kids[0];
        return recs_[buckets_[inners_[v].kids[0]].head].key;
    };
    while (!st.empty()) {
        const int v = st.back();
        st.pop_back();
        const Inner& in = inners_[v];
        for (std::size_t i = 1; i < in.kids.size(); ++i) {
            const Key m = in.leaf_level ? recs_[buckets_[in.kids[i]].head].key : min_key(in.kids[i]);
            if (less(m, in.seps[i])) say("separator above subtree minimum");
        }
        if (!in.leaf_level)
            for (int k : in.kids) st.push_back(k);
    }

    // one record per live node, tails where wanted
    for (NodeId n = 0; n < tree_.node_capacity(); ++n) {
        if (!tree_.alive(n)) continue;
        const int r = n < node_rec_.size() ? node_rec_[n] : -1;
        if (r == -1 || !recs_[r].alive || recs_[r].node != n || recs_[r].tail) {
            say("node " + std::to_string(n) + " lacks its record");
            continue;
        }
        const Key k = node_key(n);
        if (recs_[r].key.z != k.z || recs_[r].key.depth != k.depth) say("stale node key");
        Key tk;
        const bool want = tail_wanted(n, &tk);
        const int t = n < tail_rec_.size() ? tail_rec_[n] : -1;
        if (want != (t != -1)) say("tail record presence wrong for node " + std::to_string(n));
        else if (want && (recs_[t].key.z != tk.z || recs_[t].key.depth != tk.depth)) say("stale tail key");
    }
    return bad;
}

}  // namespace fatloc
