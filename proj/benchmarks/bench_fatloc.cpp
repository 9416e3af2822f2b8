#include <benchmark/benchmark.h>

#include <memory>
#include <vector>

#include "fatloc/harness.hpp"
#include "fatloc/locate1d.hpp"
#include "fatloc/locate2d.hpp"
#include "fatloc/marked_ancestor.hpp"
#include "fatloc/rng.hpp"

using namespace fatloc;

namespace {

const CellExtent kUnit{{0.0, 0.0}, 1.0, 0};

void BM_Build2D(benchmark::State& st) {
    const auto shapes = gen_scene(static_cast<std::size_t>(st.range(0)), 1.0, 1);
    for (auto _ : st) {
        RegionStore s(kUnit);
        benchmark::DoNotOptimize(s.build(shapes));
    }
    st.SetItemsProcessed(st.iterations() * st.range(0));
}

void BM_Query2D(benchmark::State& st) {
    const auto shapes = gen_scene(static_cast<std::size_t>(st.range(0)), 1.0, 2);
    RegionStore s(kUnit);
    s.build(shapes);
    SplitMix64 rng(3);
    std::vector<Point2> pts(4096);
    for (auto& p : pts) p = {rng.uniform(), rng.uniform()};
    std::size_t i = 0;
    for (auto _ : st) benchmark::DoNotOptimize(s.query(pts[i++ & 4095]));
}

void BM_Query1D(benchmark::State& st) {
    IntervalSet s(Interval1{0.0, 1.0});
    s.build(gen_intervals(static_cast<std::size_t>(st.range(0)), 2));
    SplitMix64 rng(3);
    std::vector<double> xs(4096);
    for (auto& x : xs) x = rng.uniform();
    std::size_t i = 0;
    for (auto _ : st) benchmark::DoNotOptimize(s.query(xs[i++ & 4095]));
}

// Replays generated local updates; the workload is regenerated when exhausted.
template <int Dim>
void BM_LocalUpdate(benchmark::State& st) {
    const auto n = static_cast<std::size_t>(st.range(0));
    Scene sc;
    sc.config.dim = Dim;
    if constexpr (Dim == 1)
        sc.intervals = gen_intervals(n, 4);
    else
        sc.regions = gen_scene(n, 1.0, 4);
    std::vector<WorkOp> ups;
    for (const auto& op : gen_workload(sc, 20000, 4.0, 5))
        if (op.kind == OpKind::LocalUpdate) ups.push_back(op);
    // Only updates of untouched slots keep the replay valid without the inserts and deletes.
    std::vector<bool> seen(n, false);
    std::vector<WorkOp> first;
    for (const auto& op : ups)
        if (op.slot < n && !seen[op.slot]) {
            seen[op.slot] = true;
            first.push_back(op);
        }
    for (auto _ : st) {
        st.PauseTiming();
        auto s = [&] {
            if constexpr (Dim == 1)
                return std::make_unique<IntervalSet>(Interval1{0.0, 1.0});
            else
                return std::make_unique<RegionStore>(kUnit);
        }();
        std::vector<std::uint32_t> hs;
        if constexpr (Dim == 1)
            for (auto h : s->build(sc.intervals)) hs.push_back(h);
        else
            for (auto h : s->build(sc.regions)) hs.push_back(h);
        st.ResumeTiming();
        for (const auto& op : first) {
            if constexpr (Dim == 1)
                s->local_update(hs[op.slot], op.interval, 4.0);
            else
                s->local_update(hs[op.slot], op.region, 4.0);
        }
    }
    st.SetItemsProcessed(st.iterations() * static_cast<std::int64_t>(first.size()));
}

void BM_MarkedAncestorQuery(benchmark::State& st) {
    MarkedAncestorForest f(1);
    SplitMix64 rng(6);
    std::vector<MaNode> ids{0};
    while (ids.size() < static_cast<std::size_t>(st.range(0))) ids.push_back(f.add_leaf(ids[rng.below(ids.size())]));
    for (std::size_t i = 0; i < ids.size() / 20; ++i) f.mark(ids[rng.below(ids.size())]);
    for (auto _ : st) benchmark::DoNotOptimize(f.lowest_marked_ancestor(ids[rng.below(ids.size())]));
}

}  // namespace

BENCHMARK(BM_Build2D)->RangeMultiplier(8)->Range(1 << 10, 1 << 16)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Query2D)->RangeMultiplier(8)->Range(1 << 10, 1 << 16);
BENCHMARK(BM_Query1D)->RangeMultiplier(8)->Range(1 << 10, 1 << 16);
BENCHMARK(BM_LocalUpdate<1>)->RangeMultiplier(8)->Range(1 << 10, 1 << 13)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_LocalUpdate<2>)->RangeMultiplier(8)->Range(1 << 10, 1 << 13)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_MarkedAncestorQuery)->RangeMultiplier(8)->Range(1 << 10, 1 << 16);

BENCHMARK_MAIN();
