#include "fatloc/marked_ancestor.hpp"

#include <algorithm>
#include <bit>
#include <unordered_map>

#include "fatloc/error.hpp"

namespace fatloc {

// ---------------------------------------------------------------- link-cut trees

int MarkedAncestorForest::Lct::add() {
    par.push_back(-1);
    l.push_back(-1);
    r.push_back(-1);
    return static_cast<int>(par.size()) - 1;
}

void MarkedAncestorForest::Lct::rotate(int x) {
    const int p = par[x];
    const int g = par[p];
    const bool p_root = is_root(p);
    if (l[p] == x) {
        l[p] = r[x];
        if (r[x] != -1) par[r[x]] = p;
        r[x] = p;
    } else {
        r[p] = l[x];
        if (l[x] != -1) par[l[x]] = p;
        l[x] = p;
    }
    par[p] = x;
    par[x] = g;
    if (!p_root) {
        if (l[g] == p) l[g] = x;
        else r[g] = x;
    }
    if (touched) ++*touched;
}

void MarkedAncestorForest::Lct::splay(int x) {
    while (!is_root(x)) {
        const int p = par[x];
        if (!is_root(p)) {
            const int g = par[p];
            if ((l[g] == p) == (l[p] == x)) rotate(p);
            else rotate(x);
        }
        rotate(x);
    }
}

void MarkedAncestorForest::Lct::access(int x) {
    int last = -1;
    for (int y = x; y != -1; y = par[y]) {
        splay(y);
        r[y] = last;
        last = y;
        if (touched) ++*touched;
    }
    splay(x);
}

int MarkedAncestorForest::Lct::find_root(int x) {
    access(x);
    while (l[x] != -1) {
        x = l[x];
        if (touched) ++*touched;
    }
    splay(x);
    return x;
}

void MarkedAncestorForest::Lct::link(int x, int p) {
    access(x);
    par[x] = p;
}

void MarkedAncestorForest::Lct::cut(int x) {
    access(x);
    if (l[x] != -1) {
        par[l[x]] = -1;
        l[x] = -1;
    }
}

// ---------------------------------------------------------------- forest

MarkedAncestorForest::MarkedAncestorForest(int instances, MaNode root, Counters* counters)
    : instances_(instances), root_(root), counters_(counters) {
    if (instances < 1) fail(ErrorCode::InvalidArgument, "need at least one instance");
    if (root < 0) fail(ErrorCode::InvalidArgument, "negative root id");
    nodes_.resize(static_cast<std::size_t>(root) + 1);
    for (MaNode i = 0; i < root; ++i) free_ids_.push_back(root - 1 - i);
    nodes_[root].alive = true;
    nlive_ = 1;
    const int m = new_micro(root);
    nodes_[root].micro = m;
    rebuild_micro(m);
}

MarkedAncestorForest::Node& MarkedAncestorForest::at(MaNode v) {
    if (!contains(v)) fail(ErrorCode::UnknownNode, "no node " + std::to_string(v));
    return nodes_[v];
}
const MarkedAncestorForest::Node& MarkedAncestorForest::at(MaNode v) const {
    if (!contains(v)) fail(ErrorCode::UnknownNode, "no node " + std::to_string(v));
    return nodes_[v];
}

MaNode MarkedAncestorForest::parent(MaNode v) const { return at(v).parent; }

std::size_t MarkedAncestorForest::path_count() const {
    std::size_t n = 0;
    for (const Micro& m : micros_)
        if (m.alive) n += m.paths.size() - static_cast<std::size_t>(m.dead_paths);
    return n;
}

int MarkedAncestorForest::new_micro(MaNode top) {
    int m;
    if (!free_micros_.empty()) {
        m = free_micros_.back();
        free_micros_.pop_back();
    } else {
        m = static_cast<int>(micros_.size());
        micros_.emplace_back();
    }
    micros_[m] = Micro{};
    micros_[m].top = top;
    micros_[m].alive = true;
    micros_[m].marks.assign(instances_, 0);
    ++nmicro_;
    return m;
}

void MarkedAncestorForest::free_micro(int m) {
    micros_[m] = Micro{};
    free_micros_.push_back(m);
    --nmicro_;
}

std::vector<MaNode> MarkedAncestorForest::micro_nodes(int m) const {
    std::vector<MaNode> out;
    std::vector<MaNode> st{micros_[m].top};
    while (!st.empty()) {
        const MaNode v = st.back();
        st.pop_back();
        out.push_back(v);
        const auto& k = nodes_[v].kids;
        for (std::size_t i = k.size(); i-- > 0;)
            if (nodes_[k[i]].micro == m) st.push_back(k[i]);
    }
    return out;
}

void MarkedAncestorForest::rebuild_micro(int m) {
    Micro& mc = micros_[m];
    mc.paths.clear();
    mc.lct.clear();
    mc.heavy = 0;
    mc.dead_paths = 0;
    std::fill(mc.marks.begin(), mc.marks.end(), 0);

    std::vector<std::pair<MaNode, int>> st{{mc.top, -1}};
    while (!st.empty()) {
        auto [v, p] = st.back();
        st.pop_back();
        touch();
        Node& n = nodes_[v];
        n.inkids = 0;
        for (MaNode c : n.kids) n.inkids += nodes_[c].micro == m;
        if (p == -1 || v == mc.top || nodes_[n.parent].inkids >= 2) {
            Path np;
            np.parent_path = (v == mc.top) ? -1 : nodes_[n.parent].path;
            mc.paths.push_back(std::move(np));
            p = static_cast<int>(mc.paths.size()) - 1;
        }
        Path& path = mc.paths[p];
        n.path = p;
        n.pos = static_cast<int>(path.nodes.size());
        path.nodes.push_back(v);
        for (int inst : n.marks) {
            path.marked[inst].insert(n.pos);
            ++mc.marks[inst];
        }
        if (n.inkids >= 2) ++mc.heavy;
        for (std::size_t i = n.kids.size(); i-- > 0;)
            if (nodes_[n.kids[i]].micro == m) st.push_back({n.kids[i], p});
    }
    for (int inst = 0; inst < instances_; ++inst)
        if (mc.marks[inst] > 0) lct_for(m, inst);
}

MarkedAncestorForest::Lct& MarkedAncestorForest::lct_for(int m, int inst) {
    Micro& mc = micros_[m];
    auto it = mc.lct.find(inst);
    if (it != mc.lct.end()) return it->second;
    Lct& L = mc.lct[inst];
    L.touched = &touched_;
    for (std::size_t p = 0; p < mc.paths.size(); ++p) L.add();
    for (std::size_t p = 0; p < mc.paths.size(); ++p) link_path(m, static_cast<int>(p), inst);
    return L;
}

void MarkedAncestorForest::link_path(int m, int p, int inst) {
    Micro& mc = micros_[m];
    const Path& path = mc.paths[p];
    if (!path.alive || path.parent_path == -1 || path.marked.count(inst)) return;
    mc.lct.at(inst).link(p, path.parent_path);
}

void MarkedAncestorForest::refresh_tau() {
    const std::size_t n = std::max<std::size_t>(nlive_, 2);
    tau_ = std::max(4, static_cast<int>(std::bit_width(n - 1)));
}

void MarkedAncestorForest::flush_touched() {
    if (counters_) counters_->ma_nodes_touched += touched_;
    touched_ = 0;
}

void MarkedAncestorForest::partition_from(MaNode top, int m) {
    const std::vector<MaNode> order = micro_nodes(m);
    std::unordered_map<MaNode, int> acc;
    std::vector<MaNode> tops{top};
    std::unordered_map<MaNode, bool> is_top;
    for (std::size_t i = order.size(); i-- > 0;) {
        const MaNode v = order[i];
        int inset = 0;
        int sum = 0;
        for (MaNode c : nodes_[v].kids)
            if (nodes_[c].micro == m) {
                ++inset;
                sum += acc[c];
            }
        const int heavy = inset >= 2 ? 1 : 0;
        acc[v] = heavy + sum;
        if (acc[v] > tau_) {
            for (MaNode c : nodes_[v].kids)
                if (nodes_[c].micro == m) {
                    tops.push_back(c);
                    is_top[c] = true;
                }
            acc[v] = heavy;
        }
    }
    std::vector<int> ids{m};
    for (std::size_t i = 1; i < tops.size(); ++i) ids.push_back(new_micro(tops[i]));
    std::unordered_map<MaNode, int> id_of;
    for (std::size_t i = 0; i < tops.size(); ++i) id_of[tops[i]] = ids[i];
    // relabel top-down; a new top starts its own micro-tree
    std::vector<std::pair<MaNode, int>> st{{top, m}};
    while (!st.empty()) {
        auto [v, id] = st.back();
        st.pop_back();
        if (is_top.count(v)) id = id_of[v];
        for (MaNode c : nodes_[v].kids)
            if (nodes_[c].micro == m) st.push_back({c, id});
        nodes_[v].micro = id;
    }
    for (int id : ids) rebuild_micro(id);
}

void MarkedAncestorForest::split_micro(int m) { partition_from(micros_[m].top, m); }

void MarkedAncestorForest::repartition() {
    refresh_tau();
    epoch_n_ = nlive_;
    for (std::size_t m = 0; m < micros_.size(); ++m)
        if (micros_[m].alive) free_micro(static_cast<int>(m));
    const int m = new_micro(root_);
    for (Node& n : nodes_)
        if (n.alive) n.micro = m;
    partition_from(root_, m);
    touched_ = 0;
}

MaNode MarkedAncestorForest::add_leaf(MaNode parent) {
    MaNode id;
    if (!free_ids_.empty()) {
        id = free_ids_.back();
        free_ids_.pop_back();
    } else {
        id = static_cast<MaNode>(nodes_.size());
    }
    add_leaf_with_id(parent, id);
    return id;
}

void MarkedAncestorForest::add_leaf_with_id(MaNode parent, MaNode id) {
    at(parent);
    if (id < 0) fail(ErrorCode::InvalidArgument, "negative node id");
    if (contains(id)) fail(ErrorCode::InvalidArgument, "node id in use");
    if (id >= static_cast<MaNode>(nodes_.size())) nodes_.resize(static_cast<std::size_t>(id) + 1);
    auto fi = std::find(free_ids_.begin(), free_ids_.end(), id);
    if (fi != free_ids_.end()) free_ids_.erase(fi);

    Node& n = nodes_[id];
    n = Node{};
    n.alive = true;
    n.parent = parent;
    Node& p = nodes_[parent];
    p.kids.push_back(id);
    const int m = p.micro;
    n.micro = m;
    ++nlive_;
    Micro& mc = micros_[m];
    touch();
    if (p.inkids == 0) {
        p.inkids = 1;
        Path& path = mc.paths[p.path];
        n.path = p.path;
        n.pos = static_cast<int>(path.nodes.size());
        path.nodes.push_back(id);
    } else if (p.inkids == 1) {
        rebuild_micro(m);
    } else {
        ++p.inkids;
        Path np;
        np.parent_path = p.path;
        mc.paths.push_back(std::move(np));
        const int pid = static_cast<int>(mc.paths.size()) - 1;
        mc.paths[pid].nodes.push_back(id);
        n.path = pid;
        n.pos = 0;
        for (auto& [inst, L] : mc.lct) {
            L.add();
            L.link(pid, p.path);
        }
    }
    if (micros_[m].heavy > tau_) split_micro(m);
    if (nlive_ >= 2 * epoch_n_) repartition();
    touched_ = 0;
}

void MarkedAncestorForest::remove_leaf(MaNode v) {
    Node& n = at(v);
    if (v == root_) fail(ErrorCode::RemoveNonLeaf, "cannot remove the root");
    if (!n.kids.empty()) fail(ErrorCode::RemoveNonLeaf, "node has children");
    if (!n.marks.empty()) fail(ErrorCode::RemoveMarked, "node is marked");
    const int m = n.micro;
    Node& p = nodes_[n.parent];
    p.kids.erase(std::find(p.kids.begin(), p.kids.end(), v));
    Micro& mc = micros_[m];
    const bool was_top = mc.top == v;
    const int path = n.path;
    const int pos = n.pos;
    n = Node{};
    free_ids_.push_back(v);
    --nlive_;
    if (was_top) {
        free_micro(m);
    } else if (pos > 0) {
        mc.paths[path].nodes.pop_back();
        p.inkids = 0;
    } else {
        --p.inkids;
        if (p.inkids == 1) {
            rebuild_micro(m);
        } else {
            mc.paths[path].alive = false;
            mc.paths[path].nodes.clear();
            ++mc.dead_paths;
            for (auto& [inst, L] : mc.lct) L.cut(path);
            if (2 * mc.dead_paths > static_cast<int>(mc.paths.size())) rebuild_micro(m);
        }
    }
    if (epoch_n_ >= 4 && 2 * nlive_ <= epoch_n_) repartition();
    touched_ = 0;
}

void MarkedAncestorForest::move_subtree(MaNode v, MaNode new_parent) {
    Node& n = at(v);
    at(new_parent);
    if (v == root_) fail(ErrorCode::InvalidArgument, "cannot move the root");
    for (MaNode u = new_parent; u != -1; u = nodes_[u].parent)
        if (u == v) fail(ErrorCode::InvalidArgument, "new parent lies inside the subtree");
    const int m = n.micro;
    Node& p = nodes_[n.parent];
    p.kids.erase(std::find(p.kids.begin(), p.kids.end(), v));
    if (micros_[m].top != v) {
        const int m2 = new_micro(v);
        std::vector<MaNode> st{v};
        while (!st.empty()) {
            const MaNode u = st.back();
            st.pop_back();
            for (MaNode c : nodes_[u].kids)
                if (nodes_[c].micro == m) st.push_back(c);
            nodes_[u].micro = m2;
        }
        rebuild_micro(m);
        rebuild_micro(m2);
    }
    nodes_[v].parent = new_parent;
    nodes_[new_parent].kids.push_back(v);
    touched_ = 0;
}

void MarkedAncestorForest::mark(MaNode v, int inst) {
    if (inst < 0 || inst >= instances_) fail(ErrorCode::InvalidArgument, "bad instance");
    Node& n = at(v);
    if (std::find(n.marks.begin(), n.marks.end(), inst) != n.marks.end()) return;
    n.marks.push_back(inst);
    const int m = n.micro;
    Micro& mc = micros_[m];
    touch();
    auto& s = mc.paths[n.path].marked[inst];
    const bool was_empty = s.empty();
    s.insert(n.pos);
    ++mc.marks[inst];
    auto it = mc.lct.find(inst);
    if (it == mc.lct.end()) lct_for(m, inst);
    else if (was_empty && mc.paths[n.path].parent_path != -1) it->second.cut(n.path);
    flush_touched();
}

void MarkedAncestorForest::unmark(MaNode v, int inst) {
    if (inst < 0 || inst >= instances_) fail(ErrorCode::InvalidArgument, "bad instance");
    Node& n = at(v);
    auto f = std::find(n.marks.begin(), n.marks.end(), inst);
    if (f == n.marks.end()) return;
    n.marks.erase(f);
    const int m = n.micro;
    Micro& mc = micros_[m];
    touch();
    Path& path = mc.paths[n.path];
    auto& s = path.marked[inst];
    s.erase(n.pos);
    --mc.marks[inst];
    if (s.empty()) {
        path.marked.erase(inst);
        if (mc.lct.count(inst)) link_path(m, n.path, inst);
    }
    flush_touched();
}

bool MarkedAncestorForest::is_marked(MaNode v, int inst) const {
    const Node& n = at(v);
    return std::find(n.marks.begin(), n.marks.end(), inst) != n.marks.end();
}

std::optional<MaNode> MarkedAncestorForest::lowest_marked_ancestor(MaNode v, int inst) {
    if (inst < 0 || inst >= instances_) fail(ErrorCode::InvalidArgument, "bad instance");
    at(v);
    std::optional<MaNode> ans;
    MaNode x = v;
    while (x != -1) {
        const Node& n = nodes_[x];
        Micro& mc = micros_[n.micro];
        touch();
        if (mc.marks[inst] > 0) {
            const Path& path = mc.paths[n.path];
            touch();
            auto it = path.marked.find(inst);
            if (it != path.marked.end()) {
                auto ub = it->second.upper_bound(n.pos);
                if (ub != it->second.begin()) {
                    ans = path.nodes[*std::prev(ub)];
                    break;
                }
            }
            if (path.parent_path != -1) {
                const int r = mc.lct.at(inst).find_root(path.parent_path);
                auto jt = mc.paths[r].marked.find(inst);
                if (jt != mc.paths[r].marked.end()) {
                    ans = mc.paths[r].nodes[*jt->second.rbegin()];
                    break;
                }
            }
        }
        x = nodes_[mc.top].parent;
    }
    flush_touched();
    return ans;
}

// ---------------------------------------------------------------- checks

std::vector<std::string> MarkedAncestorForest::check_invariants() const {
    std::vector<std::string> bad;
    auto say = [&](const std::string& s) { bad.push_back(s); };
    std::vector<std::size_t> per_micro(micros_.size(), 0);
    std::size_t live = 0;
    for (MaNode v = 0; v < static_cast<MaNode>(nodes_.size()); ++v) {
        const Node& n = nodes_[v];
        if (!n.alive) continue;
        ++live;
        if (n.micro < 0 || n.micro >= static_cast<int>(micros_.size()) || !micros_[n.micro].alive) {
            say("node in dead micro-tree");
            continue;
        }
        ++per_micro[n.micro];
        const Micro& mc = micros_[n.micro];
        if (n.path < 0 || n.path >= static_cast<int>(mc.paths.size()) || !mc.paths[n.path].alive ||
            n.pos >= static_cast<int>(mc.paths[n.path].nodes.size()) || mc.paths[n.path].nodes[n.pos] != v)
            say("node " + std::to_string(v) + " not at its path slot");
        int in = 0;
        for (MaNode c : n.kids) {
            if (!contains(c) || nodes_[c].parent != v) say("child/parent mismatch");
            else in += nodes_[c].micro == n.micro;
        }
        if (in != n.inkids) say("in-micro child count stale");
        if (v == root_ ? n.parent != -1 : !contains(n.parent)) say("bad parent");
        if (mc.top != v && (n.parent == -1 || nodes_[n.parent].micro != n.micro)) say("micro-tree not connected");
        std::vector<int> mk = n.marks;
        std::sort(mk.begin(), mk.end());
        if (std::adjacent_find(mk.begin(), mk.end()) != mk.end()) say("duplicate mark");
    }
    if (live != nlive_) say("live count mismatch");

    for (std::size_t m = 0; m < micros_.size(); ++m) {
        const Micro& mc = micros_[m];
        if (!mc.alive) continue;
        if (!contains(mc.top) || nodes_[mc.top].micro != static_cast<int>(m)) {
            say("micro-tree top missing");
            continue;
        }
        if (micro_nodes(static_cast<int>(m)).size() != per_micro[m]) say("micro-tree membership mismatch");
        int heavy = 0;
        std::vector<int> marks(instances_, 0);
        for (std::size_t p = 0; p < mc.paths.size(); ++p) {
            const Path& path = mc.paths[p];
            if (!path.alive) continue;
            if (path.nodes.empty()) {
                say("empty path");
                continue;
            }
            for (std::size_t i = 0; i < path.nodes.size(); ++i) {
                const Node& n = nodes_[path.nodes[i]];
                if (n.inkids >= 2) ++heavy;
                if (i + 1 < path.nodes.size()) {
                    if (n.inkids != 1) say("heavy node inside a path");
                    else if (nodes_[path.nodes[i + 1]].parent != path.nodes[i]) say("path not a chain");
                } else if (n.inkids == 1) {
                    say("path stops above a single child");
                }
                for (int inst : n.marks) {
                    ++marks[inst];
                    auto it = path.marked.find(inst);
                    if (it == path.marked.end() || !it->second.count(static_cast<int>(i))) say("mark missing from path set");
                }
            }
            for (auto& [inst, s] : path.marked) {
                if (s.empty()) say("empty marked set kept");
                for (int pos : s)
                    if (pos >= static_cast<int>(path.nodes.size()) || !is_marked(path.nodes[pos], inst))
                        say("path set holds an unmarked position");
            }
            const MaNode head = path.nodes.front();
            if (path.parent_path == -1) {
                if (head != mc.top) say("parentless path below the top");
            } else {
                const Path& pp = mc.paths[path.parent_path];
                if (!pp.alive || pp.nodes.back() != nodes_[head].parent) say("path hangs off the wrong node");
            }
        }
        if (heavy != mc.heavy) say("heavy count stale");
        if (heavy > tau_) say("micro-tree over budget");
        if (marks != mc.marks) say("micro mark counts stale");
        for (int inst = 0; inst < instances_; ++inst)
            if (marks[inst] > 0 && !mc.lct.count(inst)) say("marked instance without link-cut tree");
        for (const auto& [inst, L0] : mc.lct) {
            Lct L = L0;
            L.touched = nullptr;
            for (std::size_t p = 0; p < mc.paths.size(); ++p) {
                if (!mc.paths[p].alive) continue;
                int want = static_cast<int>(p);
                while (mc.paths[want].parent_path != -1 && !mc.paths[want].marked.count(inst)) want = mc.paths[want].parent_path;
                if (L.find_root(static_cast<int>(p)) != want) say("link-cut root disagrees with marks");
            }
        }
    }
    return bad;
}

// ---------------------------------------------------------------- naive

NaiveMarkedAncestor::NaiveMarkedAncestor(MaNode root) {
    parent_.assign(static_cast<std::size_t>(root) + 1, -1);
    nkids_.assign(parent_.size(), 0);
    alive_.assign(parent_.size(), false);
    alive_[root] = true;
}

MaNode NaiveMarkedAncestor::add_leaf(MaNode parent) {
    const MaNode id = static_cast<MaNode>(parent_.size());
    add_leaf_with_id(parent, id);
    return id;
}

void NaiveMarkedAncestor::add_leaf_with_id(MaNode parent, MaNode id) {
    if (!contains(parent)) fail(ErrorCode::UnknownNode, "no parent");
    if (contains(id)) fail(ErrorCode::InvalidArgument, "node id in use");
    if (id >= static_cast<MaNode>(parent_.size())) {
        parent_.resize(static_cast<std::size_t>(id) + 1, -1);
        nkids_.resize(parent_.size(), 0);
        alive_.resize(parent_.size(), false);
    }
    parent_[id] = parent;
    alive_[id] = true;
    ++nkids_[parent];
}

void NaiveMarkedAncestor::remove_leaf(MaNode v) {
    if (!contains(v)) fail(ErrorCode::UnknownNode, "no node");
    if (nkids_[v] > 0 || parent_[v] == -1) fail(ErrorCode::RemoveNonLeaf, "not a leaf");
    auto it = marks_.lower_bound({v, 0});
    if (it != marks_.end() && it->first == v) fail(ErrorCode::RemoveMarked, "node is marked");
    --nkids_[parent_[v]];
    alive_[v] = false;
    parent_[v] = -1;
}

void NaiveMarkedAncestor::move_subtree(MaNode v, MaNode new_parent) {
    --nkids_[parent_[v]];
    parent_[v] = new_parent;
    ++nkids_[new_parent];
}

std::optional<MaNode> NaiveMarkedAncestor::lowest_marked_ancestor(MaNode v, int inst) const {
    if (!contains(v)) fail(ErrorCode::UnknownNode, "no node");
    for (MaNode x = v; x != -1; x = parent_[x])
        if (is_marked(x, inst)) return x;
    return std::nullopt;
}

}  // namespace fatloc
