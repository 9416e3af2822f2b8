#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "fatloc/counters.hpp"
#include "fatloc/geometry.hpp"

namespace fatloc {

struct SceneConfig {
    int dim = 2;
    CellExtent root{{0.0, 0.0}, 1.0, 0};  // dim 2
    Interval1 root1{0.0, 1.0};            // dim 1
    double beta = 1.0;
    double rho = 4.0;
    int a = 16;
    std::uint64_t seed = 0;
    int r_nbr = 2;

    double side() const { return dim == 1 ? root1.hi - root1.lo : root.side; }
};

struct Scene {
    SceneConfig config;
    std::vector<ConvexRegion> regions;  // dim 2
    std::vector<Interval1> intervals;   // dim 1

    std::size_t size() const { return config.dim == 1 ? intervals.size() : regions.size(); }
};

// JSON-lines scene files. full_check forces the all-pairs overlap scan past 10^4 objects.
Scene parse_scene(std::istream& in, bool full_check = false);
Scene parse_scene_file(const std::string& path, bool full_check = false);
void write_scene(std::ostream& out, const Scene& s);

// Query points: one {"x":f,"y":f} (or {"x":f}) object per line.
std::vector<Point2> parse_points(std::istream& in);

std::optional<std::size_t> oracle_query(const std::vector<ConvexRegion>& regions, Point2 q);
std::optional<std::size_t> oracle_query(const std::vector<Interval1>& intervals, double x);

// Radius (dim 2) or length (dim 1) range for n random objects in a root of the given side.
struct SizeRange {
    double lo;
    double hi;
};
SizeRange size_range(std::size_t n, int dim, double side);

std::vector<ConvexRegion> gen_scene(std::size_t n, double beta, std::uint64_t seed,
                                    CellExtent root = CellExtent{{0.0, 0.0}, 1.0, 0});
std::vector<Interval1> gen_intervals(std::size_t n, std::uint64_t seed, Interval1 root = Interval1{0.0, 1.0});

enum class OpKind { Query, LocalUpdate, Insert, Delete };
const char* op_name(OpKind k);

// Objects are addressed by slot: the initial scene fills 0..n-1 and each
// insert takes the next unused slot.
struct WorkOp {
    OpKind kind = OpKind::Query;
    std::size_t slot = 0;
    Point2 point;                                     // query point (x only in dim 1)
    ConvexRegion region = ConvexRegion::disk({0, 0}, 1);  // update / insert payload, dim 2
    Interval1 interval{0.0, 1.0};                     // update / insert payload, dim 1
};

// Radius/length scale bound s with s(rho + s) <= 2 rho, so a displacement of
// up to (rho-1)/2 |R| with scaling inside [1/s, s] stays rho-similar.
double similar_scale(double rho);

std::vector<WorkOp> gen_workload(const Scene& scene, std::size_t ops, double rho, std::uint64_t seed);

struct ExperimentConfig {
    int dim = 2;
    std::vector<std::size_t> sizes;
    std::size_t ops = 0;
    double beta = 1.0;
    double rho = 4.0;
    std::uint64_t seed = 0;
    int a = 16;
    int r_nbr = 2;
    bool check_structure = false;  // full invariant scan after the workload
    // Replaces the answer of this op (if a query) with a wrong one; for testing the checker.
    std::size_t inject_fault_at = static_cast<std::size_t>(-1);
};

// the eight raw counters plus cells_touched + tags_changed
inline constexpr std::size_t kCounterCount = 9;
const std::array<const char*, kCounterCount>& counter_names();
std::array<std::uint64_t, kCounterCount> counter_values(const Counters& c);

struct ExperimentRow {
    int dim = 2;
    std::size_t n = 0;
    std::uint64_t seed = 0;
    double beta = 1.0;
    double rho = 1.0;
    std::string op_kind;
    std::uint64_t count = 0;
    std::size_t nodes = 0;  // after build
    std::size_t tags = 0;
    std::size_t marks = 0;
    std::array<double, kCounterCount> mean{};
    std::array<std::uint64_t, kCounterCount> max{};
};

// Builds, replays a generated workload and checks every query against the
// linear scan. Throws MismatchError on the first disagreement.
std::vector<ExperimentRow> run_experiment(const ExperimentConfig& cfg);
void write_csv(std::ostream& out, const std::vector<ExperimentRow>& rows);

// Per-size scene and workload seeds.
std::uint64_t scene_seed(std::uint64_t seed, std::size_t n);
std::uint64_t workload_seed(std::uint64_t seed, std::size_t n);

}  // namespace fatloc
