#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include "fatloc/counters.hpp"
#include "fatloc/geometry.hpp"

namespace fatloc {

using NodeId = std::uint32_t;
using PointId = std::uint32_t;
inline constexpr NodeId kNoNode = 0xFFFFFFFFu;
inline constexpr PointId kNoPoint = 0xFFFFFFFFu;

// Finest subdivision level. Cell coordinates at this depth fit in 64 bits.
inline constexpr int kMaxDepth = 60;

using ZKey = unsigned __int128;

// Integer cell address: coordinates at `depth`, each < 2^depth.
struct CellKey {
    std::uint64_t ix = 0;
    std::uint64_t iy = 0;
    int depth = 0;

    friend bool operator==(const CellKey&, const CellKey&) = default;
};

enum class NodeKind : std::uint8_t { True, B };

struct QuadNode {
    CellKey cell;
    NodeId parent = kNoNode;
    std::array<NodeId, 4> child{kNoNode, kNoNode, kNoNode, kNoNode};
    std::array<NodeId, 8> link{kNoNode, kNoNode, kNoNode, kNoNode, kNoNode, kNoNode, kNoNode, kNoNode};
    std::array<PointId, 2> points{kNoPoint, kNoPoint};  // second slot only used mid-update
    PointId lone = kNoPoint;  // the single point below when occ == 1
    std::uint8_t occ = 0;     // min(points in subtree, 2)
    NodeKind kind = NodeKind::True;
    bool compressed = false;  // child[0] is the compressed child
    bool alive = false;

    bool is_leaf() const { return child[0] == kNoNode; }
};

// Structural notifications. Events arrive while the tree is mid-update; a
// listener may read node cells and parent pointers but should defer anything
// that needs global consistency until after_update().
class TreeObserver {
public:
    virtual ~TreeObserver() = default;
    virtual void node_added(NodeId) {}       // fresh leaf under its parent
    virtual void node_removing(NodeId) {}    // leaf about to be freed
    virtual void node_reparented(NodeId, NodeId /*old_parent*/) {}
    virtual void node_changed(NodeId) {}     // leaf/compressed status or compressed child changed
    virtual void after_update() {}
};

// Dynamic aligned a-compressed quadtree in dimension 1 or 2.
//
// The "true" skeleton is canonical for the stored point set: a node is split
// by data iff its cell holds at least two points, and it is compressed iff the
// smallest cell holding its points is at least log2(a) levels deeper. Cells
// below the skeleton are B-cells, created only to keep true leaves 2-balanced
// and B leaves 4-balanced against larger neighbouring leaves of the same
// component (compressed nodes separate components, as in the usual definition).
class Quadtree {
public:
    Quadtree(int dimension, CellExtent root, int compression = 16, Counters* counters = nullptr);

    int dimension() const { return dim_; }
    int fanout() const { return dim_ == 1 ? 2 : 4; }
    int link_count() const { return dim_ == 1 ? 2 : 8; }
    int compression() const { return a_; }
    const CellExtent& root_extent() const { return root_ext_; }
    NodeId root() const { return root_; }

    void add_observer(TreeObserver* o) { observers_.push_back(o); }
    void set_counters(Counters* c) { counters_ = c; }

    // Stores p under caller-chosen id. hint should be the location node that
    // contains p; any node works but a far hint costs a longer walk.
    NodeId insert_point(PointId id, Point2 p, NodeId hint = kNoNode);
    void delete_point(PointId id);
    // Walks up from the current leaf until the cell side covers the move,
    // across level links, then down.
    NodeId move_point(PointId id, Point2 p_new);

    bool has_point(PointId id) const { return id < pts_.size() && pts_[id].leaf != kNoNode; }
    Point2 point(PointId id) const { return pts_[id].pos; }
    NodeId point_leaf(PointId id) const { return pts_[id].leaf; }
    std::size_t point_count() const { return npoints_; }

    const QuadNode& node(NodeId n) const { return nodes_[n]; }
    bool alive(NodeId n) const { return n < nodes_.size() && nodes_[n].alive; }
    std::size_t node_count() const { return nalive_; }
    std::size_t node_capacity() const { return nodes_.size(); }

    CellExtent extent(NodeId n) const;
    CellExtent extent(const CellKey& c) const;
    double side(NodeId n) const;
    double side_at(int depth) const;
    // Leaf, or compressed node (standing for its cell minus the compressed child).
    bool is_location(NodeId n) const { return nodes_[n].is_leaf() || nodes_[n].compressed; }
    bool is_component_root(NodeId n) const;
    // Compressed child, its parent, or root: where balance components begin.
    NodeId compressed_parent(NodeId n) const;

    // Point/cell addressing at kMaxDepth.
    bool in_root(Point2 p) const;
    CellKey point_cell(Point2 p) const;
    bool cell_contains(const CellKey& outer, const CellKey& inner) const;
    bool node_contains(NodeId n, Point2 p) const { return cell_contains(nodes_[n].cell, point_cell(p)); }
    bool location_contains(NodeId n, Point2 p) const;
    ZKey zkey(const CellKey& c) const;
    ZKey zkey(Point2 p) const { return zkey(point_cell(p)); }
    // Z-order span of a cell at kMaxDepth resolution.
    ZKey zspan(int depth) const;

    // Deepest node whose cell contains q (leaf or compressed gap), searched
    // by walking from start; counts visited nodes into *touched if given.
    NodeId locate_from(NodeId start, Point2 q, std::uint64_t* touched = nullptr) const;
    NodeId locate_naive(Point2 q) const { return locate_from(root_, q); }

    // Neighbour offset index: 1D {-1,+1} -> {0,1}; 2D row-major over
    // {-1,0,1}^2 skipping the centre.
    static int dir_index(int dx, int dy, int dim);
    static std::pair<int, int> dir_offset(int index, int dim);
    std::optional<NodeId> equal_size_neighbor(NodeId n, int dir) const;
    // Node covering the cell adjacent to n in direction dir at n's depth or
    // the nearest coarser level, inside n's component. kNoNode if none.
    NodeId neighbor_at_or_above(NodeId n, int dir) const;

    // Full scan; empty result means every invariant holds.
    std::vector<std::string> check_invariants() const;

    // Test hook for fault injection.
    QuadNode& mutable_node(NodeId n) { return nodes_[n]; }

    // Structural fingerprint of the true skeleton: sorted (depth, ix, iy, compressed) of true-split nodes.
    std::vector<std::tuple<int, std::uint64_t, std::uint64_t, bool>> true_skeleton() const;

private:
    struct PointRec {
        Point2 pos;
        CellKey cell;
        NodeId leaf = kNoNode;
    };

    // node allocation
    NodeId alloc(const CellKey& cell, NodeId parent);
    void free_node(NodeId n);

    // structure primitives
    void split(NodeId n);               // leaf -> regular split with leaf children
    void merge(NodeId n);               // regular node with leaf children -> leaf
    void attach_regular(NodeId parent, NodeId child);
    void compute_links(NodeId n);
    void clear_links(NodeId n);
    void relink_subtree(NodeId n);
    int child_slot(const CellKey& parent, const CellKey& child) const;
    CellKey child_cell(const CellKey& c, int slot) const;
    CellKey ancestor_cell(const CellKey& c, int depth) const;
    CellKey lca_cell(const CellKey& a, const CellKey& b) const;

    // point bookkeeping
    void store_point(NodeId n, PointId id);
    void unstore_point(NodeId n, PointId id);
    void recount(NodeId n);             // occ/lone from children (or stored points)
    void set_child_kinds(NodeId n);

    // canonical skeleton maintenance
    CellKey smallest_cell(NodeId n) const;
    void canonicalize(NodeId top, Point2 focus);
    void teardown(NodeId x, std::vector<NodeId>& kept, std::vector<PointId>& loose);
    void place(NodeId x, std::vector<NodeId>& kept, std::vector<PointId>& loose);

    // balance
    void enqueue_balance(NodeId n);
    void enqueue_neighbors_of(NodeId n);
    void run_balance();
    void enqueue_merge(NodeId n);
    void enqueue_merge_neighborhood(NodeId n);
    bool can_merge(NodeId n) const;
    void run_merges();
    int balance_alpha(NodeId leaf) const { return nodes_[leaf].kind == NodeKind::True ? 2 : 4; }

    void touch(std::uint64_t k = 1) {
        if (counters_) counters_->cells_touched += k;
    }
    void notify_added(NodeId n);
    void notify_removing(NodeId n);
    void notify_reparented(NodeId n, NodeId old_parent);
    void notify_changed(NodeId n);
    void finish_update();

    int dim_;
    int a_;
    int log_a_;
    CellExtent root_ext_;
    NodeId root_ = kNoNode;
    std::vector<QuadNode> nodes_;
    std::vector<NodeId> free_;
    std::size_t nalive_ = 0;
    std::vector<PointRec> pts_;
    std::size_t npoints_ = 0;
    std::vector<TreeObserver*> observers_;
    Counters* counters_ = nullptr;

    std::vector<NodeId> balance_queue_;
    std::vector<NodeId> merge_queue_;
};

}  // namespace fatloc
