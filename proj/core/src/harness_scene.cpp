#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

#include "fatloc/error.hpp"
#include "fatloc/harness.hpp"
#include "fatloc/rng.hpp"
#include "json.hpp"

namespace fatloc {

using json = nlohmann::json;

namespace {

double num(const json& j, const char* key, std::size_t line) {
    if (!j.contains(key) || !j[key].is_number())
        fail(ErrorCode::ParseError, "line " + std::to_string(line) + ": missing number '" + key + "'");
    const double v = j[key].get<double>();
    if (!std::isfinite(v)) fail(ErrorCode::ParseError, "line " + std::to_string(line) + ": non-finite '" + key + "'");
    return v;
}

double coord(const json& j, std::size_t line) {
    if (!j.is_number()) fail(ErrorCode::ParseError, "line " + std::to_string(line) + ": expected a number");
    return j.get<double>();
}

SceneConfig parse_config(const json& j, std::size_t line) {
    if (!j.is_object() || !j.contains("config") || !j["config"].is_object())
        fail(ErrorCode::ParseError, "line " + std::to_string(line) + ": first line must hold a config object");
    const json& c = j["config"];
    SceneConfig cfg;
    if (c.contains("dim")) {
        if (!c["dim"].is_number_integer()) fail(ErrorCode::ParseError, "line " + std::to_string(line) + ": dim must be an integer");
        cfg.dim = c["dim"].get<int>();
    }
    if (cfg.dim != 1 && cfg.dim != 2) fail(ErrorCode::ValidationError, "config: dim must be 1 or 2");
    if (c.contains("root")) {
        const json& r = c["root"];
        const std::size_t want = cfg.dim == 1 ? 2 : 3;
        if (!r.is_array() || r.size() != want)
            fail(ErrorCode::ParseError, "line " + std::to_string(line) + ": root needs " + std::to_string(want) + " numbers");
        if (cfg.dim == 1) {
            cfg.root1 = Interval1{coord(r[0], line), coord(r[1], line)};
        } else {
            cfg.root = CellExtent{{coord(r[0], line), coord(r[1], line)}, coord(r[2], line), 0};
            if (!(cfg.root.side > 0)) fail(ErrorCode::ValidationError, "config: root side must be positive");
        }
    }
    if (c.contains("beta")) cfg.beta = num(c, "beta", line);
    if (c.contains("rho")) cfg.rho = num(c, "rho", line);
    if (c.contains("a")) cfg.a = static_cast<int>(num(c, "a", line));
    if (c.contains("seed")) cfg.seed = c["seed"].get<std::uint64_t>();
    if (c.contains("r_nbr")) cfg.r_nbr = static_cast<int>(num(c, "r_nbr", line));
    if (!(cfg.beta >= 1)) fail(ErrorCode::ValidationError, "config: beta must be >= 1");
    if (!(cfg.rho >= 1)) fail(ErrorCode::ValidationError, "config: rho must be >= 1");
    if (cfg.a < 8) fail(ErrorCode::ValidationError, "config: a must be >= 8");
    return cfg;
}

std::string who(std::size_t idx, std::size_t line) {
    return "object " + std::to_string(idx) + " (line " + std::to_string(line) + ")";
}

bool inside_root(const SceneConfig& cfg, const ConvexRegion& r) {
    const CellExtent& e = cfg.root;
    return r.bbox_lo().x >= e.anchor.x && r.bbox_lo().y >= e.anchor.y && r.bbox_hi().x < e.anchor.x + e.side &&
           r.bbox_hi().y < e.anchor.y + e.side;
}

// First overlapping pair by an x-sweep over bounding boxes, as indices.
std::optional<std::pair<std::size_t, std::size_t>> first_overlap(const std::vector<ConvexRegion>& rs) {
    std::vector<std::size_t> order(rs.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return rs[a].bbox_lo().x < rs[b].bbox_lo().x; });
    std::vector<std::size_t> active;
    for (std::size_t i : order) {
        std::erase_if(active, [&](std::size_t j) { return rs[j].bbox_hi().x < rs[i].bbox_lo().x; });
        for (std::size_t j : active) {
            if (rs[j].bbox_hi().y < rs[i].bbox_lo().y || rs[i].bbox_hi().y < rs[j].bbox_lo().y) continue;
            if (regions_intersect(rs[i], rs[j])) return std::pair{std::min(i, j), std::max(i, j)};
        }
        active.push_back(i);
    }
    return std::nullopt;
}

}  // namespace

Scene parse_scene(std::istream& in, bool full_check) {
    Scene s;
    std::string text;
    std::size_t line = 0;
    bool have_config = false;
    std::vector<std::size_t> lines;
    while (std::getline(in, text)) {
        ++line;
        if (text.find_first_not_of(" \t\r") == std::string::npos) continue;
        json j;
        try {
            j = json::parse(text);
        } catch (const json::exception& e) {
            fail(ErrorCode::ParseError, "line " + std::to_string(line) + ": " + e.what());
        }
        if (!have_config) {
            try {
                s.config = parse_config(j, line);
            } catch (const json::exception& e) {
                fail(ErrorCode::ParseError, "line " + std::to_string(line) + ": " + e.what());
            }
            have_config = true;
            continue;
        }
        if (!j.is_object() || !j.contains("type") || !j["type"].is_string())
            fail(ErrorCode::ParseError, "line " + std::to_string(line) + ": object needs a string 'type'");
        const std::string type = j["type"].get<std::string>();
        const std::size_t idx = s.size();
        if ((type == "interval") != (s.config.dim == 1))
            fail(ErrorCode::ValidationError, who(idx, line) + ": type '" + type + "' does not fit dim " + std::to_string(s.config.dim));
        try {
            if (type == "interval") {
                const double lo = num(j, "lo", line), hi = num(j, "hi", line);
                if (!(lo < hi)) fail(ErrorCode::ValidationError, who(idx, line) + ": empty interval");
                if (lo < s.config.root1.lo || hi >= s.config.root1.hi)
                    fail(ErrorCode::ValidationError, who(idx, line) + ": outside the root");
                s.intervals.emplace_back(lo, hi);
            } else if (type == "disk" || type == "polygon") {
                std::optional<ConvexRegion> r;
                if (type == "disk") {
                    const double cx = num(j, "cx", line), cy = num(j, "cy", line), rad = num(j, "r", line);
                    r = ConvexRegion::disk({cx, cy}, rad);
                } else {
                    if (!j.contains("vertices") || !j["vertices"].is_array())
                        fail(ErrorCode::ParseError, "line " + std::to_string(line) + ": polygon needs 'vertices'");
                    std::vector<Point2> vs;
                    for (const json& v : j["vertices"]) {
                        if (!v.is_array() || v.size() != 2) fail(ErrorCode::ParseError, "line " + std::to_string(line) + ": vertex must be [x,y]");
                        vs.push_back({coord(v[0], line), coord(v[1], line)});
                    }
                    r = ConvexRegion::polygon(vs);
                }
                if (!r->is_thick(s.config.beta))
                    fail(ErrorCode::ValidationError, who(idx, line) + ": thickness above beta");
                if (!inside_root(s.config, *r)) fail(ErrorCode::ValidationError, who(idx, line) + ": outside the root");
                s.regions.push_back(*r);
            } else {
                fail(ErrorCode::ParseError, "line " + std::to_string(line) + ": unknown type '" + type + "'");
            }
        } catch (const Error& e) {
            if (e.code() == ErrorCode::ParseError || e.code() == ErrorCode::ValidationError) throw;
            fail(ErrorCode::ValidationError, who(idx, line) + ": " + e.what());
        }
        lines.push_back(line);
    }
    if (!have_config) fail(ErrorCode::ParseError, "line 1: missing config line");

    if (s.config.dim == 1) {
        std::vector<std::size_t> order(s.intervals.size());
        std::iota(order.begin(), order.end(), 0);
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return s.intervals[a].lo < s.intervals[b].lo; });
        for (std::size_t k = 1; k < order.size(); ++k)
            if (s.intervals[order[k - 1]].overlaps(s.intervals[order[k]])) {
                const std::size_t i = std::max(order[k - 1], order[k]);
                fail(ErrorCode::ValidationError, who(i, lines[i]) + ": overlaps object " + std::to_string(std::min(order[k - 1], order[k])));
            }
    } else if (full_check || s.regions.size() <= 10000) {
        if (auto p = first_overlap(s.regions))
            fail(ErrorCode::ValidationError, who(p->second, lines[p->second]) + ": overlaps object " + std::to_string(p->first));
    }
    return s;
}

Scene parse_scene_file(const std::string& path, bool full_check) {
    std::ifstream in(path);
    if (!in) fail(ErrorCode::ParseError, "cannot open " + path);
    return parse_scene(in, full_check);
}

void write_scene(std::ostream& out, const Scene& s) {
    json cfg;
    cfg["dim"] = s.config.dim;
    if (s.config.dim == 1)
        cfg["root"] = {s.config.root1.lo, s.config.root1.hi};
    else
        cfg["root"] = {s.config.root.anchor.x, s.config.root.anchor.y, s.config.root.side};
    cfg["beta"] = s.config.beta;
    cfg["a"] = s.config.a;
    out << json{{"config", cfg}}.dump() << '\n';
    for (const Interval1& iv : s.intervals) out << json{{"type", "interval"}, {"lo", iv.lo}, {"hi", iv.hi}}.dump() << '\n';
    for (const ConvexRegion& r : s.regions) {
        json j;
        if (const auto* d = std::get_if<Disk>(&r.shape())) {
            j = {{"type", "disk"}, {"cx", d->center.x}, {"cy", d->center.y}, {"r", d->radius}};
        } else {
            json vs = json::array();
            for (const Point2& p : std::get<ConvexPolygon>(r.shape()).vertices) vs.push_back({p.x, p.y});
            j = {{"type", "polygon"}, {"vertices", vs}};
        }
        out << j.dump() << '\n';
    }
}

std::vector<Point2> parse_points(std::istream& in) {
    std::vector<Point2> out;
    std::string text;
    std::size_t line = 0;
    while (std::getline(in, text)) {
        ++line;
        if (text.find_first_not_of(" \t\r") == std::string::npos) continue;
        json j;
        try {
            j = json::parse(text);
        } catch (const json::exception& e) {
            fail(ErrorCode::ParseError, "line " + std::to_string(line) + ": " + e.what());
        }
        if (j.is_array()) {
            if (j.empty() || j.size() > 2) fail(ErrorCode::ParseError, "line " + std::to_string(line) + ": point must be [x] or [x,y]");
            out.push_back({coord(j[0], line), j.size() == 2 ? coord(j[1], line) : 0.0});
        } else if (j.is_object()) {
            out.push_back({num(j, "x", line), j.contains("y") ? num(j, "y", line) : 0.0});
        } else {
            fail(ErrorCode::ParseError, "line " + std::to_string(line) + ": expected a point");
        }
    }
    return out;
}

std::optional<std::size_t> oracle_query(const std::vector<ConvexRegion>& regions, Point2 q) {
    for (std::size_t i = 0; i < regions.size(); ++i)
        if (contains_point(regions[i], q)) return i;
    return std::nullopt;
}

std::optional<std::size_t> oracle_query(const std::vector<Interval1>& intervals, double x) {
    for (std::size_t i = 0; i < intervals.size(); ++i)
        if (intervals[i].contains(x)) return i;
    return std::nullopt;
}

SizeRange size_range(std::size_t n, int dim, double side) {
    // shrink with n so the expected covered fraction stays near 1/4 or below
    double f = 1.0;
    if (dim == 2 && n > 256) f = std::sqrt(256.0 / static_cast<double>(n));
    if (dim == 1 && n > 16) f = 16.0 / static_cast<double>(n);
    return {std::exp2(-14.0) * side * f, std::exp2(-4.0) * side * f};
}

std::vector<ConvexRegion> gen_scene(std::size_t n, double beta, std::uint64_t seed, CellExtent root) {
    if (!(beta >= 1)) fail(ErrorCode::InvalidArgument, "beta must be >= 1");
    std::vector<ConvexRegion> out;
    if (n == 0) return out;
    const SizeRange sr = size_range(n, 2, root.side);
    const double cell = 2 * sr.hi;
    const int g = std::max(1, static_cast<int>(std::ceil(root.side / cell)));
    std::vector<std::vector<std::uint32_t>> grid(static_cast<std::size_t>(g) * g);
    std::vector<Disk> disks;
    auto cell_of = [&](double v, double a) { return std::clamp(static_cast<int>((v - a) / cell), 0, g - 1); };
    SplitMix64 rng(seed);
    std::size_t rejects = 0;
    const std::size_t budget = 1000 * n;
    while (disks.size() < n) {
        const double r = rng.log_uniform(sr.lo, sr.hi);
        const Point2 c{rng.uniform(root.anchor.x + r, root.anchor.x + root.side - r),
                       rng.uniform(root.anchor.y + r, root.anchor.y + root.side - r)};
        bool ok = c.x + r < root.anchor.x + root.side && c.y + r < root.anchor.y + root.side && c.x - r >= root.anchor.x &&
                  c.y - r >= root.anchor.y;
        const int gx = cell_of(c.x, root.anchor.x), gy = cell_of(c.y, root.anchor.y);
        for (int y = std::max(0, gy - 1); ok && y <= std::min(g - 1, gy + 1); ++y)
            for (int x = std::max(0, gx - 1); ok && x <= std::min(g - 1, gx + 1); ++x)
                for (std::uint32_t k : grid[static_cast<std::size_t>(y) * g + x])
                    if (distance(c, disks[k].center) <= r + disks[k].radius) {
                        ok = false;
                        break;
                    }
        if (!ok) {
            if (++rejects > budget) fail(ErrorCode::PlacementFailure, "gave up after " + std::to_string(budget) + " rejections");
            continue;
        }
        grid[static_cast<std::size_t>(gy) * g + gx].push_back(static_cast<std::uint32_t>(disks.size()));
        disks.push_back({c, r});
    }
    out.reserve(n);
    for (const Disk& d : disks) out.push_back(ConvexRegion::disk(d.center, d.radius));
    return out;
}

std::vector<Interval1> gen_intervals(std::size_t n, std::uint64_t seed, Interval1 root) {
    std::vector<Interval1> out;
    if (n == 0) return out;
    const double side = root.hi - root.lo;
    const SizeRange sr = size_range(n, 1, side);
    std::map<double, double> placed;  // lo -> hi
    SplitMix64 rng(seed);
    std::size_t rejects = 0;
    const std::size_t budget = 1000 * n;
    while (out.size() < n) {
        const double len = rng.log_uniform(sr.lo, sr.hi);
        const double lo = rng.uniform(root.lo, root.hi - len);
        const double hi = lo + len;
        bool ok = lo < hi && hi < root.hi;
        if (ok) {
            auto it = placed.upper_bound(hi);
            if (it != placed.begin() && std::prev(it)->second >= lo) ok = false;
        }
        if (!ok) {
            if (++rejects > budget) fail(ErrorCode::PlacementFailure, "gave up after " + std::to_string(budget) + " rejections");
            continue;
        }
        placed[lo] = hi;
        out.emplace_back(lo, hi);
    }
    return out;
}

}  // namespace fatloc
