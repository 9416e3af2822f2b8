#pragma once

#include <cstdint>
#include <deque>
#include <string>
#include <vector>

#include "fatloc/counters.hpp"
#include "fatloc/quadtree.hpp"

namespace fatloc {

// Search structure over the quadtree's edges. Each edge parent->child is a
// record keyed by the child's position in Z-order (cell start, then depth);
// a compressed node also owns a record at the end of its compressed child,
// standing for the part of its gap that follows the child. The last record
// at or before q's key is then the deepest node whose cell contains q.
//
// Records live in linked buckets of Theta(log N) size hanging off a (2,4)-tree.
// An update touches one bucket; overfull and underfull buckets are repaired
// by jobs that advance a few list steps per update.
class EdgeOracleTree : public TreeObserver {
public:
    static constexpr int kStepsPerUpdate = 4;

    explicit EdgeOracleTree(const Quadtree& tree, Counters* counters = nullptr);

    void set_counters(Counters* c) { counters_ = c; }

    void on_edge_inserted(NodeId child);
    void on_edge_deleted(NodeId child);
    // Location node (leaf or compressed gap) containing q.
    NodeId locate(Point2 q) const;

    std::size_t record_count() const { return nrecords_; }
    std::size_t bucket_count() const { return nbuckets_; }
    int height() const;
    // Work of the most expensive single update so far (list steps + job steps).
    std::uint64_t max_update_work() const { return max_update_work_; }
    std::size_t pending_jobs() const { return jobs_.size(); }
    // Runs every pending repair job to completion.
    void drain();

    // strict: also require bucket sizes and fan-outs inside their target ranges.
    std::vector<std::string> check_invariants(bool strict = false) const;

    // observer side
    void node_added(NodeId n) override { on_edge_inserted(n); }
    void node_removing(NodeId n) override;
    void node_changed(NodeId n) override { sync_tail(n); }

private:
    struct Key {
        ZKey z = 0;
        int depth = 0;
        bool tail = false;  // ties only occur mid-update
        NodeId node = 0;
    };
    static bool less(const Key& a, const Key& b) {
        if (a.z != b.z) return a.z < b.z;
        if (a.depth != b.depth) return a.depth < b.depth;
        if (a.tail != b.tail) return a.tail < b.tail;
        return a.node < b.node;
    }

    struct Record {
        Key key;
        NodeId node = kNoNode;
        bool tail = false;
        bool alive = false;
        int prev = -1;
        int next = -1;
        int bucket = -1;
    };
    struct Bucket {
        int head = -1;
        int tail = -1;
        int size = 0;
        int parent = -1;
        int fwd = -1;          // merged into this bucket; labels pending
        int split_child = -1;  // split off; labels pending
        bool busy = false;     // a job owns this bucket
        bool alive = false;
    };
    struct Inner {
        int parent = -1;
        bool leaf_level = true;  // kids are buckets
        std::vector<int> kids;
        std::vector<Key> seps;   // seps[0] unused
        bool alive = false;
    };
    enum class JobKind { SplitWalk, SplitRelabel, MergeRelabel, InnerFix };
    struct Job {
        JobKind kind;
        int a = -1;        // bucket / inner
        int b = -1;        // second bucket
        int cursor = -1;   // record
        int count = 0;
    };

    Key node_key(NodeId n) const;
    bool tail_wanted(NodeId n, Key* key) const;
    void sync_tail(NodeId n);

    int insert_record(const Key& k, NodeId node, bool tail, int finger);
    void erase_record(int r);
    int resolve(int r);
    int find_pred(const Key& k, std::uint64_t* cmp) const;  // last record with key <= k (k as query)
    int find_strict_pred(const Key& k) const;

    int new_bucket();
    int new_inner(bool leaf_level);
    int kid_index(int inner, int kid) const;
    bool separator_after(int bucket, Key* sep) const;
    void remove_kid(int inner, int kid);
    void insert_kid_after(int inner, int after, int kid, const Key& sep);
    void set_parent(int kid, bool is_bucket, int parent);

    int lo_size() const;
    int hi_size() const;
    void maybe_schedule(int bucket);
    void run_jobs(int budget);
    bool step(Job& j);  // true when finished
    void fix_inner(int inner);
    void note_cursor_erase(int r);

    const Quadtree& tree_;
    Counters* counters_ = nullptr;

    std::vector<Record> recs_;
    std::vector<int> free_recs_;
    std::vector<Bucket> buckets_;
    std::vector<int> free_buckets_;
    std::vector<Inner> inners_;
    std::vector<int> free_inners_;
    int root_ = -1;
    std::size_t nrecords_ = 0;
    std::size_t nbuckets_ = 0;

    std::vector<int> node_rec_;
    std::vector<int> tail_rec_;

    std::deque<Job> jobs_;
    std::uint64_t work_ = 0;
    std::uint64_t max_update_work_ = 0;
};

}  // namespace fatloc
