#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "fatloc/counters.hpp"

namespace fatloc {

using MaNode = std::int32_t;

// Lowest-marked-ancestor queries over a dynamic rooted tree, with several
// independent mark "instances" sharing one topology.
//
// Nodes are grouped into micro-trees holding at most tau heavy nodes
// (nodes with two or more children inside the micro-tree). Each micro-tree
// is cut into paths that end at heavy nodes; a path keeps its marked
// positions in an ordered set, and a link-cut forest over the paths (one per
// instance, built on first use) finds the nearest marked path above a path.
class MarkedAncestorForest {
public:
    explicit MarkedAncestorForest(int instances = 1, MaNode root = 0, Counters* counters = nullptr);

    void set_counters(Counters* c) { counters_ = c; }
    int instances() const { return instances_; }
    MaNode root() const { return root_; }
    std::size_t size() const { return nlive_; }
    bool contains(MaNode v) const { return v >= 0 && v < static_cast<MaNode>(nodes_.size()) && nodes_[v].alive; }
    MaNode parent(MaNode v) const;

    MaNode add_leaf(MaNode parent);
    // Caller-chosen id; must be unused.
    void add_leaf_with_id(MaNode parent, MaNode id);
    void remove_leaf(MaNode v);
    // Re-hangs the subtree at v under new_parent (not inside that subtree).
    void move_subtree(MaNode v, MaNode new_parent);

    void mark(MaNode v, int inst = 0);
    void unmark(MaNode v, int inst = 0);
    bool is_marked(MaNode v, int inst = 0) const;
    std::optional<MaNode> lowest_marked_ancestor(MaNode v, int inst = 0);

    // Re-partitions the whole tree for the current size.
    void repartition();
    int tau() const { return tau_; }
    std::size_t micro_count() const { return nmicro_; }
    std::size_t path_count() const;

    std::vector<std::string> check_invariants() const;

private:
    struct Lct {
        std::vector<int> par, l, r;
        std::uint64_t* touched = nullptr;

        int add();
        bool is_root(int x) const { return par[x] == -1 || (l[par[x]] != x && r[par[x]] != x); }
        void rotate(int x);
        void splay(int x);
        void access(int x);
        int find_root(int x);
        void link(int x, int p);
        void cut(int x);
    };
    struct Path {
        std::vector<MaNode> nodes;
        int parent_path = -1;
        bool alive = true;
        std::map<int, std::set<int>> marked;  // instance -> positions
    };
    struct Micro {
        MaNode top = -1;
        std::vector<Path> paths;
        int heavy = 0;
        int dead_paths = 0;
        std::vector<int> marks;  // per instance
        std::map<int, Lct> lct;
        bool alive = false;
    };
    struct Node {
        MaNode parent = -1;
        std::vector<MaNode> kids;
        int micro = -1;
        int path = -1;
        int pos = -1;
        int inkids = 0;  // children in the same micro-tree
        std::vector<int> marks;
        bool alive = false;
    };

    Node& at(MaNode v);
    const Node& at(MaNode v) const;
    int new_micro(MaNode top);
    void free_micro(int m);
    std::vector<MaNode> micro_nodes(int m) const;
    void rebuild_micro(int m);
    void split_micro(int m);
    void partition_from(MaNode top, int micro_of_set);
    Lct& lct_for(int m, int inst);
    void link_path(int m, int p, int inst);
    void refresh_tau();
    void touch(std::uint64_t k = 1) { touched_ += k; }
    void flush_touched();

    int instances_;
    MaNode root_;
    Counters* counters_;
    std::vector<Node> nodes_;
    std::vector<MaNode> free_ids_;
    std::size_t nlive_ = 0;
    std::vector<Micro> micros_;
    std::vector<int> free_micros_;
    std::size_t nmicro_ = 0;
    int tau_ = 4;
    std::size_t epoch_n_ = 1;
    std::uint64_t touched_ = 0;
};

// Walk-up reference.
class NaiveMarkedAncestor {
public:
    explicit NaiveMarkedAncestor(MaNode root = 0);
    MaNode add_leaf(MaNode parent);
    void add_leaf_with_id(MaNode parent, MaNode id);
    void remove_leaf(MaNode v);
    void move_subtree(MaNode v, MaNode new_parent);
    void mark(MaNode v, int inst = 0) { marks_.insert({v, inst}); }
    void unmark(MaNode v, int inst = 0) { marks_.erase({v, inst}); }
    bool is_marked(MaNode v, int inst = 0) const { return marks_.count({v, inst}) > 0; }
    std::optional<MaNode> lowest_marked_ancestor(MaNode v, int inst = 0) const;
    bool contains(MaNode v) const { return v >= 0 && v < static_cast<MaNode>(parent_.size()) && alive_[v]; }
    MaNode parent(MaNode v) const { return parent_[v]; }
    std::size_t child_count(MaNode v) const { return nkids_[v]; }

private:
    std::vector<MaNode> parent_;
    std::vector<int> nkids_;
    std::vector<bool> alive_;
    std::set<std::pair<MaNode, int>> marks_;
};

}  // namespace fatloc
