#include <chrono>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "fatloc/error.hpp"
#include "fatloc/harness.hpp"
#include "fatloc/locate1d.hpp"
#include "fatloc/locate2d.hpp"
#include "json.hpp"

using namespace fatloc;

namespace {

constexpr int kOk = 0;
constexpr int kMismatch = 1;
constexpr int kInputError = 2;

int report(const std::vector<std::string>& bad) {
    for (std::size_t i = 0; i < std::min<std::size_t>(bad.size(), 20); ++i) std::cerr << "check: " << bad[i] << '\n';
    return bad.empty() ? kOk : kMismatch;
}

int cmd_build(const std::string& path, const std::string& verify) {
    const bool full = verify == "full";
    const Scene s = parse_scene_file(path, full);
    Counters c;
    nlohmann::json out;
    out["dim"] = s.config.dim;
    out["objects"] = s.size();
    std::vector<std::string> bad;
    if (s.config.dim == 1) {
        IntervalSet set(s.config.root1, {.r_nbr = s.config.r_nbr, .debug_checks = full, .compression = s.config.a}, &c);
        set.build(s.intervals);
        out["nodes"] = set.tree().node_count();
        if (full) bad = set.check_invariants();
    } else {
        RegionStore store(s.config.root, {.beta = s.config.beta, .compression = s.config.a, .debug_checks = full}, &c);
        store.build(s.regions);
        out["nodes"] = store.tree().node_count();
        out["tag_entries"] = store.tag_entries();
        out["mark_entries"] = store.mark_entries();
        if (full) bad = store.check_invariants();
    }
    out["cells_touched"] = c.cells_touched;
    std::cout << out.dump() << '\n';
    return report(bad);
}

int cmd_query(const std::string& scene_path, const std::string& points_path) {
    const Scene s = parse_scene_file(scene_path);
    std::ifstream pin(points_path);
    if (!pin) fail(ErrorCode::ParseError, "cannot open " + points_path);
    const std::vector<Point2> pts = parse_points(pin);
    auto emit = [](Point2 p, int dim, std::optional<std::size_t> hit) {
        nlohmann::json j;
        j["x"] = p.x;
        if (dim == 2) j["y"] = p.y;
        j["region"] = hit ? nlohmann::json(*hit) : nlohmann::json(nullptr);
        std::cout << j.dump() << '\n';
    };
    if (s.config.dim == 1) {
        IntervalSet set(s.config.root1, {.r_nbr = s.config.r_nbr, .debug_checks = false, .compression = s.config.a});
        const auto hs = set.build(s.intervals);
        std::vector<std::size_t> index(hs.size());
        for (std::size_t i = 0; i < hs.size(); ++i) index[hs[i]] = i;
        for (Point2 p : pts) {
            const auto h = set.query(p.x);
            emit(p, 1, h ? std::optional<std::size_t>(index[*h]) : std::nullopt);
        }
    } else {
        RegionStore store(s.config.root, {.beta = s.config.beta, .compression = s.config.a, .debug_checks = false});
        const auto hs = store.build(s.regions);
        std::vector<std::size_t> index(hs.size());
        for (std::size_t i = 0; i < hs.size(); ++i) index[hs[i]] = i;
        for (Point2 p : pts) {
            const auto h = store.query(p);
            emit(p, 2, h ? std::optional<std::size_t>(index[*h]) : std::nullopt);
        }
    }
    return kOk;
}

std::vector<std::size_t> parse_sizes(const std::string& text) {
    std::vector<std::size_t> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            std::size_t used = 0;
            const unsigned long long v = std::stoull(item, &used);
            if (used != item.size()) throw std::invalid_argument(item);
            out.push_back(static_cast<std::size_t>(v));
        } catch (const std::exception&) {
            fail(ErrorCode::InvalidArgument, "bad size '" + item + "'");
        }
    }
    if (out.empty()) fail(ErrorCode::InvalidArgument, "no sizes given");
    return out;
}

int cmd_bench(const ExperimentConfig& cfg, const std::string& csv) {
    const auto rows = run_experiment(cfg);
    if (csv.empty() || csv == "-") {
        write_csv(std::cout, rows);
    } else {
        std::ofstream out(csv, std::ios::binary);
        if (!out) fail(ErrorCode::InvalidArgument, "cannot write " + csv);
        write_csv(out, rows);
    }
    return kOk;
}

int cmd_verify(ExperimentConfig cfg) {
    const auto t0 = std::chrono::steady_clock::now();
    cfg.check_structure = true;
    const auto rows = run_experiment(cfg);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::uint64_t queries = 0;
    for (const auto& r : rows)
        if (r.op_kind == "query") queries += r.count;
    std::cout << "ok: dim " << cfg.dim << ", n " << cfg.sizes.front() << ", " << cfg.ops << " ops, " << queries
              << " queries checked in " << secs << " s\n";
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"fatloc: point location among fat regions"};
    app.require_subcommand(1);

    std::string scene, points, verify = "basic", csv, sizes = "1024,4096,16384,65536";
    ExperimentConfig bench_cfg;
    bench_cfg.ops = 10000;
    ExperimentConfig ver_cfg;
    ver_cfg.ops = 10000;
    std::size_t ver_n = 1000;
    double ver_beta = 0, ver_rho = 4;

    auto* b = app.add_subcommand("build", "parse a scene and build the structure");
    b->add_option("--scene", scene, "scene file (JSON lines)")->required();
    b->add_option("--verify", verify, "basic or full")->check(CLI::IsMember({"basic", "full"}));

    auto* q = app.add_subcommand("query", "answer point queries against a scene");
    q->add_option("--scene", scene, "scene file (JSON lines)")->required();
    q->add_option("--points", points, "query points, one per line")->required();

    auto* be = app.add_subcommand("bench", "run counter experiments and write CSV");
    be->add_option("--dim", bench_cfg.dim)->check(CLI::IsMember({1, 2}))->required();
    be->add_option("--sizes", sizes, "comma separated sizes");
    be->add_option("--ops", bench_cfg.ops);
    be->add_option("--rho", bench_cfg.rho)->check(CLI::Range(1.0, 1e9));
    be->add_option("--beta", bench_cfg.beta)->check(CLI::Range(1.0, 1e9));
    be->add_option("--seed", bench_cfg.seed);
    be->add_option("--a", bench_cfg.a)->check(CLI::Range(8, 1 << 20));
    be->add_option("--r-nbr", bench_cfg.r_nbr)->check(CLI::Range(0, 64));
    be->add_option("--csv", csv, "output path (stdout when omitted)");

    auto* v = app.add_subcommand("verify", "random workload checked against the linear scan");
    v->add_option("--dim", ver_cfg.dim)->check(CLI::IsMember({1, 2}))->required();
    v->add_option("--n", ver_n);
    v->add_option("--ops", ver_cfg.ops);
    v->add_option("--seed", ver_cfg.seed);
    v->add_option("--beta", ver_beta, "default 2 in the plane, 1 on the line")->check(CLI::Range(1.0, 1e9));
    v->add_option("--rho", ver_rho)->check(CLI::Range(1.0, 1e9));

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kInputError;
    }

    try {
        if (*b) return cmd_build(scene, verify);
        if (*q) return cmd_query(scene, points);
        if (*be) {
            bench_cfg.sizes = parse_sizes(sizes);
            return cmd_bench(bench_cfg, csv);
        }
        ver_cfg.sizes = {ver_n};
        ver_cfg.beta = ver_beta > 0 ? ver_beta : (ver_cfg.dim == 2 ? 2.0 : 1.0);
        ver_cfg.rho = ver_rho;
        return cmd_verify(ver_cfg);
    } catch (const Error& e) {
        std::cerr << e.what() << '\n';
        return e.code() == ErrorCode::MismatchError ? kMismatch : kInputError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kInputError;
    }
}
