#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "fatloc/counters.hpp"
#include "fatloc/edge_oracle.hpp"
#include "fatloc/geometry.hpp"
#include "fatloc/quadtree.hpp"

namespace fatloc {

using IntervalHandle = std::uint32_t;

// Disjoint closed intervals. Midpoints live in a 1D compressed quadtree; an
// edge-oracle tree over its leaves answers point location, and the interval
// containing x has its midpoint in x's leaf or a nearby leaf.
class IntervalSet {
public:
    struct Options {
        int r_nbr = 2;              // neighbouring leaves inspected per side
        bool debug_checks = false;  // overlap validation on every update
        int compression = 16;
    };

    IntervalSet(Interval1 root, Options opt, Counters* counters = nullptr);
    explicit IntervalSet(Interval1 root) : IntervalSet(root, Options{}) {}
    IntervalSet(const IntervalSet&) = delete;
    IntervalSet& operator=(const IntervalSet&) = delete;

    void set_counters(Counters* c);

    // Loads an empty set; handles come back in input order.
    std::vector<IntervalHandle> build(const std::vector<Interval1>& intervals);

    std::optional<IntervalHandle> query(double x) const;
    void local_update(IntervalHandle h, Interval1 next, double rho);
    IntervalHandle insert(Interval1 iv);
    void erase(IntervalHandle h);

    bool valid(IntervalHandle h) const { return h < slots_.size() && slots_[h].alive; }
    const Interval1& interval(IntervalHandle h) const;
    std::size_t size() const { return live_; }
    const Quadtree& tree() const { return tree_; }
    const EdgeOracleTree& oracle() const { return eot_; }
    const Options& options() const { return opt_; }

    std::vector<std::string> check_invariants() const;

private:
    struct Slot {
        Interval1 iv;
        bool alive = false;
    };

    void require_inside(const Interval1& iv) const;
    void check_free(const Interval1& iv, IntervalHandle ignore) const;
    IntervalHandle fresh_handle();
    // Part of location node n that holds x, as [lo, hi).
    std::pair<double, double> piece(NodeId n, double x) const;

    Interval1 root_;
    Options opt_;
    Counters* counters_;
    Quadtree tree_;
    EdgeOracleTree eot_;
    std::vector<Slot> slots_;
    std::vector<IntervalHandle> free_;
    std::size_t live_ = 0;
    std::map<double, IntervalHandle> by_lo_;  // kept only with debug_checks
};

}  // namespace fatloc
