#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "fatloc/counters.hpp"
#include "fatloc/edge_oracle.hpp"
#include "fatloc/geometry.hpp"
#include "fatloc/marked_ancestor.hpp"
#include "fatloc/quadtree.hpp"

namespace fatloc {

using RegionHandle = std::uint32_t;

// Disjoint convex beta-thick regions in the plane.
//
// Representative points live in a balanced compressed quadtree. For a region
// R let t(R) be the deepest level whose cell side is still >= |R|/(4 beta).
// The frontier of R is the set of nodes meeting R at depth >= t(R) whose
// parent is above t(R) (the root counts when t(R) = 0). R tags its frontier
// nodes and every location node above t(R) that meets it (a compressed gap
// counts unless R lies inside the compressed child); it marks each
// frontier node C in wedge tree i, where i is the wedge of R's
// representative around C's centre. A query checks the tags on its location
// node plus, per wedge tree, the regions on the lowest marked ancestor.
class RegionStore : public TreeObserver {
public:
    struct Options {
        double beta = 1.0;
        int compression = 16;
        bool debug_checks = false;  // pairwise overlap validation
    };
    struct Assignment {
        std::vector<NodeId> tags;                 // sorted
        std::vector<std::pair<NodeId, int>> marks;  // sorted (node, wedge)
        friend bool operator==(const Assignment&, const Assignment&) = default;
    };

    RegionStore(CellExtent root, Options opt, Counters* counters = nullptr);
    explicit RegionStore(CellExtent root) : RegionStore(root, Options{}) {}
    RegionStore(const RegionStore&) = delete;
    RegionStore& operator=(const RegionStore&) = delete;

    void set_counters(Counters* c);

    std::vector<RegionHandle> build(const std::vector<ConvexRegion>& regions);
    std::optional<RegionHandle> query(Point2 q);
    void local_update(RegionHandle h, const ConvexRegion& next, double rho);
    RegionHandle insert(const ConvexRegion& r);
    void erase(RegionHandle h);

    bool valid(RegionHandle h) const { return h < regions_.size() && regions_[h].alive; }
    const ConvexRegion& region(RegionHandle h) const;
    std::size_t size() const { return live_; }
    double beta() const { return opt_.beta; }
    const WedgeParams& wedges() const { return wedge_; }
    const Quadtree& tree() const { return tree_; }
    const EdgeOracleTree& oracle() const { return eot_; }
    const MarkedAncestorForest& marked_ancestors() const { return ma_; }

    int tag_depth(const ConvexRegion& r) const;
    NodeId storage_node(RegionHandle h) const;
    const Assignment& assignment(RegionHandle h) const { return regions_.at(h).cur; }
    const std::vector<RegionHandle>& tags_at(NodeId n) const;
    const std::vector<std::pair<RegionHandle, int>>& marks_at(NodeId n) const;
    std::size_t tag_entries() const { return ntags_; }
    std::size_t mark_entries() const { return nmarks_; }

    // Assignment by the rules above, scanning every live node.
    Assignment scratch_assignment(RegionHandle h) const;
    std::vector<std::string> check_invariants() const;

    // observer side
    void node_added(NodeId n) override;
    void node_removing(NodeId n) override;
    void node_reparented(NodeId n, NodeId old_parent) override;
    void node_changed(NodeId n) override;
    void after_update() override { process_dirty(); }

private:
    struct Slot {
        ConvexRegion shape = ConvexRegion::disk({0, 0}, 1);
        Assignment cur;
        bool alive = false;
        bool dirty = false;
    };

    void require_valid_shape(const ConvexRegion& r) const;
    void check_free(const ConvexRegion& r, RegionHandle ignore) const;
    RegionHandle fresh_handle();
    void grow_nodes();
    void dirty_from(NodeId n);
    void make_dirty(RegionHandle h);
    void process_dirty();
    Assignment compute(RegionHandle h);
    void apply(RegionHandle h, Assignment next);
    int wedge_of(NodeId n, Point2 rep) const;
    bool gap_meets(NodeId n, const ConvexRegion& r) const;

    CellExtent root_;
    Options opt_;
    WedgeParams wedge_;
    Counters* counters_;
    Quadtree tree_;
    EdgeOracleTree eot_;
    MarkedAncestorForest ma_;

    std::vector<Slot> regions_;
    std::vector<RegionHandle> free_;
    std::size_t live_ = 0;
    std::vector<std::vector<RegionHandle>> node_tags_;
    std::vector<std::vector<std::pair<RegionHandle, int>>> node_marks_;
    std::vector<RegionHandle> dirty_;
    std::size_t ntags_ = 0;
    std::size_t nmarks_ = 0;
};

}  // namespace fatloc
