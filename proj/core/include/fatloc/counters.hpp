#pragma once

#include <cstdint>

namespace fatloc {

// Instrumentation tallies. Each structure owns one; the harness resets it
// before every public operation and reads it afterwards.
struct Counters {
    std::uint64_t edges_examined = 0;    // edge-oracle comparisons during locate
    std::uint64_t cells_touched = 0;     // quadtree nodes walked, created, removed or reclassified
    std::uint64_t tags_changed = 0;      // tag entries added or removed
    std::uint64_t marks_changed = 0;     // (cell, wedge, region) mark entries added or removed
    std::uint64_t ma_nodes_touched = 0;  // marked-ancestor structure nodes inspected
    std::uint64_t candidates_tested = 0; // regions tested against a query point
    std::uint64_t walk_length = 0;       // nodes visited by a local-update walk
    std::uint64_t eot_steps = 0;         // edge-oracle update work (list and rebuild steps)

    void reset() { *this = Counters{}; }
};

}  // namespace fatloc
