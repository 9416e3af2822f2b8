#include <algorithm>
#include <cmath>
#include <functional>
#include <sstream>

#include "doctest.h"
#include "fatloc/error.hpp"
#include "fatloc/harness.hpp"

using namespace fatloc;

namespace {

ErrorCode code_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("no error raised");
    return ErrorCode::InvalidArgument;
}

std::string message_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.what();
    }
    return "";
}

const char* kHeader2 = R"({"config":{"dim":2,"root":[0,0,1],"beta":1.0,"a":16}})";

}  // namespace

TEST_CASE("scene parsing") {
    {
        std::istringstream in(std::string(kHeader2) + "\n");
        const Scene s = parse_scene(in);
        CHECK(s.config.dim == 2);
        CHECK(s.size() == 0);
    }
    {
        std::istringstream in(std::string(kHeader2) + "\n{\"type\":\"disk\",\"cx\":0.5,\"cy\":0.25,\"r\":0.1}\n");
        const Scene s = parse_scene(in);
        REQUIRE(s.regions.size() == 1);
        CHECK(s.regions[0].rep().x == 0.5);
        CHECK(s.regions[0].rep().y == 0.25);
    }
    {
        std::istringstream in(std::string(kHeader2) + "\n{\"type\":\"disk\",\"cx\":0.5,\"cy\":0.5,\"r\":0.1}\n{\"type\":\"disk\",\n");
        const std::string msg = message_of([&] { parse_scene(in); });
        CHECK(msg.find("ParseError") != std::string::npos);
        CHECK(msg.find("line 3") != std::string::npos);
    }
    {
        std::istringstream in(std::string(kHeader2) +
                              "\n{\"type\":\"disk\",\"cx\":0.5,\"cy\":0.5,\"r\":0.1}\n{\"type\":\"disk\",\"cx\":0.6,\"cy\":0.5,\"r\":0.1}\n");
        const std::string msg = message_of([&] { parse_scene(in); });
        CHECK(msg.find("ValidationError") != std::string::npos);
        CHECK(msg.find("object 1") != std::string::npos);
    }
    {
        // square: thickness sqrt(2) > 1
        std::istringstream in(std::string(kHeader2) + "\n{\"type\":\"polygon\",\"vertices\":[[0.1,0.1],[0.2,0.1],[0.2,0.2],[0.1,0.2]]}\n");
        CHECK(code_of([&] { parse_scene(in); }) == ErrorCode::ValidationError);
    }
    {
        std::istringstream in("{\"config\":{\"dim\":1,\"root\":[0,1]}}\n{\"type\":\"interval\",\"lo\":0.1,\"hi\":0.2}\n");
        const Scene s = parse_scene(in);
        REQUIRE(s.intervals.size() == 1);
        CHECK(s.intervals[0].hi == 0.2);
    }
    {
        std::istringstream in("{\"config\":{\"dim\":1,\"root\":[0,1]}}\n{\"type\":\"disk\",\"cx\":0.5,\"cy\":0.5,\"r\":0.1}\n");
        CHECK(code_of([&] { parse_scene(in); }) == ErrorCode::ValidationError);
    }
    {
        std::istringstream in("{\"config\":{\"dim\":2,\"a\":4}}\n");
        CHECK(code_of([&] { parse_scene(in); }) == ErrorCode::ValidationError);
    }
}

TEST_CASE("scene files round trip") {
    Scene s;
    s.config.beta = 2.0;
    s.regions = gen_scene(50, 2.0, 3);
    s.regions.push_back(ConvexRegion::polygon({{0.001, 0.001}, {0.004, 0.001}, {0.004, 0.004}, {0.001, 0.004}}));
    std::stringstream io;
    write_scene(io, s);
    const Scene t = parse_scene(io);
    REQUIRE(t.regions.size() == s.regions.size());
    for (std::size_t i = 0; i < s.regions.size(); ++i) {
        CHECK(t.regions[i].rep().x == s.regions[i].rep().x);
        CHECK(t.regions[i].diam() == s.regions[i].diam());
    }
}

TEST_CASE("linear scan oracle") {
    CHECK(!oracle_query(std::vector<ConvexRegion>{}, {0.5, 0.5}).has_value());
    const std::vector<ConvexRegion> two{ConvexRegion::disk({0.2, 0.2}, 0.1), ConvexRegion::disk({0.7, 0.7}, 0.1)};
    CHECK(oracle_query(two, {0.25, 0.2}) == 0u);
    CHECK(oracle_query(two, {0.7, 0.65}) == 1u);
    CHECK(!oracle_query(two, {0.5, 0.5}).has_value());
    const std::vector<Interval1> ivs{{0.1, 0.2}, {0.3, 0.4}};
    CHECK(oracle_query(ivs, 0.35) == 1u);
    CHECK(!oracle_query(ivs, 0.25).has_value());
}

TEST_CASE("scene generation") {
    CHECK(gen_scene(0, 1.0, 5).empty());
    const auto two = gen_scene(2, 1.0, 1);
    REQUIRE(two.size() == 2);
    CHECK(distance(two[0].rep(), two[1].rep()) > two[0].diam() / 2 + two[1].diam() / 2);
    const auto a = gen_scene(200, 1.0, 9), b = gen_scene(200, 1.0, 9);
    REQUIRE(a.size() == 200);
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].rep().x == b[i].rep().x);
        CHECK(a[i].diam() == b[i].diam());
        const double r = a[i].diam() / 2;
        CHECK(r >= std::exp2(-14) * (1 - 1e-12));
        CHECK(r <= std::exp2(-4) * (1 + 1e-12));
    }
    for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t j = i + 1; j < a.size(); ++j)
            REQUIRE(distance(a[i].rep(), a[j].rep()) > a[i].diam() / 2 + a[j].diam() / 2);

    const auto ivs = gen_intervals(500, 4);
    REQUIRE(ivs.size() == 500);
    auto sorted = ivs;
    std::sort(sorted.begin(), sorted.end(), [](auto& x, auto& y) { return x.lo < y.lo; });
    for (std::size_t i = 1; i < sorted.size(); ++i) CHECK(sorted[i - 1].hi < sorted[i].lo);
}

TEST_CASE("workload generation") {
    for (double rho : {1.0, 2.0, 4.0, 32.0}) {
        const double s = similar_scale(rho);
        CHECK(s >= 1.0);
        CHECK(s * (rho + s) <= 2 * rho * (1 + 1e-12));
    }
    for (int dim : {1, 2}) {
        Scene sc;
        sc.config.dim = dim;
        if (dim == 1)
            sc.intervals = gen_intervals(300, 2);
        else
            sc.regions = gen_scene(300, 1.0, 2);
        CHECK(gen_workload(sc, 0, 4.0, 1).empty());
        const auto w = gen_workload(sc, 3000, 4.0, 8);
        const auto w2 = gen_workload(sc, 3000, 4.0, 8);
        REQUIRE(w.size() == 3000);
        REQUIRE(w2.size() == 3000);

        // replay the slot states and validate every op
        std::vector<ConvexRegion> shapes = sc.regions;
        std::vector<Interval1> ivs = sc.intervals;
        std::vector<bool> live(sc.size(), true);
        std::size_t counts[4] = {0, 0, 0, 0};
        for (std::size_t i = 0; i < w.size(); ++i) {
            const WorkOp& op = w[i];
            CHECK(op.kind == w2[i].kind);
            CHECK(op.point.x == w2[i].point.x);
            ++counts[static_cast<int>(op.kind)];
            if (op.kind == OpKind::LocalUpdate) {
                REQUIRE(live[op.slot]);
                if (dim == 1) {
                    REQUIRE(is_rho_similar(ivs[op.slot], op.interval, 4.0));
                    ivs[op.slot] = op.interval;
                } else {
                    REQUIRE(is_rho_similar(shapes[op.slot], op.region, 4.0));
                    shapes[op.slot] = op.region;
                }
            } else if (op.kind == OpKind::Insert) {
                REQUIRE(op.slot == live.size());
                live.push_back(true);
                shapes.push_back(op.region);
                ivs.push_back(op.interval);
            } else if (op.kind == OpKind::Delete) {
                REQUIRE(live[op.slot]);
                live[op.slot] = false;
            }
        }
        CHECK(counts[0] > 1500);
        CHECK(counts[1] > 700);
        CHECK(counts[2] == counts[3]);
        CHECK(counts[2] > 100);
        // final state still disjoint
        for (std::size_t i = 0; i < live.size(); ++i)
            for (std::size_t j = i + 1; j < live.size(); ++j) {
                if (!live[i] || !live[j]) continue;
                if (dim == 1)
                    REQUIRE(!ivs[i].overlaps(ivs[j]));
                else
                    REQUIRE(!regions_intersect(shapes[i], shapes[j]));
            }
    }
}

TEST_CASE("experiments are deterministic and checked") {
    for (int dim : {1, 2}) {
        ExperimentConfig cfg;
        cfg.dim = dim;
        cfg.sizes = {16};
        cfg.ops = 100;
        cfg.seed = 42;
        cfg.check_structure = true;
        std::ostringstream a, b;
        write_csv(a, run_experiment(cfg));
        write_csv(b, run_experiment(cfg));
        CHECK(a.str() == b.str());
        CHECK(a.str().find("\r") == std::string::npos);
        CHECK(a.str().rfind("dim,n,seed", 0) == 0);

        // first query in the workload gets a corrupted answer
        Scene sc;
        sc.config.dim = dim;
        if (dim == 1)
            sc.intervals = gen_intervals(16, scene_seed(42, 16));
        else
            sc.regions = gen_scene(16, 1.0, scene_seed(42, 16));
        const auto ops = gen_workload(sc, 100, 4.0, workload_seed(42, 16));
        std::size_t first = 0;
        while (ops[first].kind != OpKind::Query) ++first;
        cfg.inject_fault_at = first;
        const std::string msg = message_of([&] { run_experiment(cfg); });
        CHECK(msg.find("MismatchError") != std::string::npos);
        CHECK(msg.find("op " + std::to_string(first)) != std::string::npos);
    }
}
