#include "fatloc/geometry.hpp"

#include <algorithm>
#include <array>
#include <limits>

namespace fatloc {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

struct HalfPlane {
    Point2 n;  // outward unit normal
    double b;  // n . x <= b inside
};

std::vector<HalfPlane> edge_halfplanes(const ConvexPolygon& p) {
    std::vector<HalfPlane> out;
    const auto& v = p.vertices;
    out.reserve(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
        Point2 a = v[i];
        Point2 b = v[(i + 1) % v.size()];
        Point2 e = b - a;
        double len = norm(e);
        Point2 n{e.y / len, -e.x / len};
        out.push_back({n, dot(n, a)});
    }
    return out;
}

// Solves n_i . x + r = b_i for three half-planes by Cramer's rule.
bool solve_three(const HalfPlane& p, const HalfPlane& q, const HalfPlane& s, Point2& x, double& r) {
    const double m[3][3] = {{p.n.x, p.n.y, 1.0}, {q.n.x, q.n.y, 1.0}, {s.n.x, s.n.y, 1.0}};
    const double rhs[3] = {p.b, q.b, s.b};
    auto det3 = [](const double a[3][3]) {
        return a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1]) -
               a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0]) +
               a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0]);
    };
    double d = det3(m);
    if (std::abs(d) < 1e-14) return false;
    double sol[3];
    for (int c = 0; c < 3; ++c) {
        double t[3][3];
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) t[i][j] = (j == c) ? rhs[i] : m[i][j];
        sol[c] = det3(t) / d;
    }
    x = {sol[0], sol[1]};
    r = sol[2];
    return true;
}

Point2 support(const ConvexRegion& r, Point2 dir) {
    if (const auto* d = std::get_if<Disk>(&r.shape())) {
        double l = norm(dir);
        return d->center + (d->radius / l) * dir;
    }
    const auto& v = std::get<ConvexPolygon>(r.shape()).vertices;
    Point2 best = v.front();
    for (const auto& p : v)
        if (dot(p, dir) > dot(best, dir)) best = p;
    return best;
}

// Projection interval of a region onto an axis.
std::pair<double, double> project(const ConvexRegion& r, Point2 axis) {
    Point2 neg{-axis.x, -axis.y};
    return {dot(support(r, neg), axis), dot(support(r, axis), axis)};
}

double dist_point_segment(Point2 p, Point2 a, Point2 b) {
    Point2 ab = b - a;
    double t = dot(p - a, ab) / dot(ab, ab);
    t = std::clamp(t, 0.0, 1.0);
    return distance(p, a + t * ab);
}

bool polygon_contains(const ConvexPolygon& p, Point2 q) {
    const auto& v = p.vertices;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (cross(v[(i + 1) % v.size()] - v[i], q - v[i]) < 0.0) return false;
    }
    return true;
}

double dist_point_polygon(const ConvexPolygon& p, Point2 q) {
    if (polygon_contains(p, q)) return 0.0;
    double best = std::numeric_limits<double>::infinity();
    const auto& v = p.vertices;
    for (std::size_t i = 0; i < v.size(); ++i) best = std::min(best, dist_point_segment(q, v[i], v[(i + 1) % v.size()]));
    return best;
}

}  // namespace

Point2 checked_point(double x, double y) {
    if (!std::isfinite(x) || !std::isfinite(y)) fail(ErrorCode::InvalidArgument, "non-finite coordinate");
    return {x, y};
}

Interval1::Interval1(double lo_, double hi_) : lo(lo_), hi(hi_) {
    if (!std::isfinite(lo) || !std::isfinite(hi) || !(lo < hi))
        fail(ErrorCode::DegenerateShape, "interval requires finite lo < hi");
}

Representative compute_representative(const Shape& shape) {
    if (const auto* d = std::get_if<Disk>(&shape)) {
        if (!(d->radius > 0.0)) fail(ErrorCode::DegenerateShape, "disk radius must be positive");
        return {d->center, d->radius, d->radius};
    }
    const auto& poly = std::get<ConvexPolygon>(shape);
    auto hp = edge_halfplanes(poly);
    const std::size_t m = hp.size();

    // The optimum of the inscribed-disk LP sits on a vertex of the (x, y, r)
    // polytope, i.e. is tight on three edge lines. Enumerate them.
    struct Cand {
        Point2 x;
        double r;
    };
    std::vector<Cand> cands;
    double best_r = 0.0;
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = i + 1; j < m; ++j)
            for (std::size_t k = j + 1; k < m; ++k) {
                Point2 x;
                double r;
                if (!solve_three(hp[i], hp[j], hp[k], x, r) || !(r > 0.0)) continue;
                bool ok = true;
                for (const auto& h : hp) {
                    if (dot(h.n, x) + r > h.b + 1e-12 * (1.0 + std::abs(h.b))) {
                        ok = false;
                        break;
                    }
                }
                if (!ok) continue;
                cands.push_back({x, r});
                best_r = std::max(best_r, r);
            }
    if (!(best_r > 0.0)) fail(ErrorCode::DegenerateShape, "polygon has empty interior");

    // Optimal centres form a segment; take its midpoint.
    std::vector<Point2> opt;
    for (const auto& c : cands)
        if (c.r >= best_r * (1.0 - 1e-12)) opt.push_back(c.x);
    Point2 a = opt.front(), b = opt.front();
    double far = 0.0;
    for (std::size_t i = 0; i < opt.size(); ++i)
        for (std::size_t j = i + 1; j < opt.size(); ++j)
            if (distance(opt[i], opt[j]) > far) {
                far = distance(opt[i], opt[j]);
                a = opt[i];
                b = opt[j];
            }
    Point2 rep = 0.5 * (a + b);
    double r_inner = std::numeric_limits<double>::infinity();
    for (const auto& h : hp) r_inner = std::min(r_inner, h.b - dot(h.n, rep));
    double r_outer = 0.0;
    for (const auto& v : poly.vertices) r_outer = std::max(r_outer, distance(rep, v));
    if (!(r_inner > 0.0)) fail(ErrorCode::DegenerateShape, "polygon has empty interior");
    return {rep, r_inner, r_outer};
}

ConvexRegion ConvexRegion::disk(Point2 center, double radius) { return ConvexRegion(Disk{center, radius}); }

ConvexRegion ConvexRegion::polygon(std::vector<Point2> ccw_vertices) {
    return ConvexRegion(ConvexPolygon{std::move(ccw_vertices)});
}

ConvexRegion::ConvexRegion(Shape shape) : shape_(std::move(shape)) {
    if (const auto* d = std::get_if<Disk>(&shape_)) {
        checked_point(d->center.x, d->center.y);
        if (!std::isfinite(d->radius) || !(d->radius > 0.0))
            fail(ErrorCode::DegenerateShape, "disk radius must be positive");
        diam_ = 2.0 * d->radius;
        bbox_lo_ = {d->center.x - d->radius, d->center.y - d->radius};
        bbox_hi_ = {d->center.x + d->radius, d->center.y + d->radius};
    } else {
        const auto& v = std::get<ConvexPolygon>(shape_).vertices;
        if (v.size() < 3) fail(ErrorCode::DegenerateShape, "polygon needs at least 3 vertices");
        for (const auto& p : v) checked_point(p.x, p.y);
        for (std::size_t i = 0; i < v.size(); ++i) {
            Point2 a = v[i], b = v[(i + 1) % v.size()], c = v[(i + 2) % v.size()];
            if (!(cross(b - a, c - b) > 0.0))
                fail(ErrorCode::DegenerateShape, "polygon must be strictly convex and counterclockwise");
        }
        bbox_lo_ = bbox_hi_ = v.front();
        for (const auto& p : v) {
            bbox_lo_ = {std::min(bbox_lo_.x, p.x), std::min(bbox_lo_.y, p.y)};
            bbox_hi_ = {std::max(bbox_hi_.x, p.x), std::max(bbox_hi_.y, p.y)};
            for (const auto& q : v) diam_ = std::max(diam_, distance(p, q));
        }
    }
    auto rep = compute_representative(shape_);
    rep_ = rep.rep;
    r_inner_ = rep.r_inner;
    r_outer_ = rep.r_outer;
}

double union_diameter(const ConvexRegion& a, const ConvexRegion& b) {
    const auto* da = std::get_if<Disk>(&a.shape());
    const auto* db = std::get_if<Disk>(&b.shape());
    double best = std::max(a.diam(), b.diam());
    if (da && db) return std::max(best, distance(da->center, db->center) + da->radius + db->radius);
    if (!da && !db) {
        for (const auto& p : std::get<ConvexPolygon>(a.shape()).vertices)
            for (const auto& q : std::get<ConvexPolygon>(b.shape()).vertices) best = std::max(best, distance(p, q));
        return best;
    }
    const Disk& d = da ? *da : *db;
    const auto& poly = std::get<ConvexPolygon>((da ? b : a).shape());
    for (const auto& p : poly.vertices) best = std::max(best, distance(p, d.center) + d.radius);
    return best;
}

bool is_rho_similar(const ConvexRegion& a, const ConvexRegion& b, double rho) {
    return union_diameter(a, b) <= rho * std::min(a.diam(), b.diam());
}

double union_diameter(const Interval1& a, const Interval1& b) {
    return std::max(a.hi, b.hi) - std::min(a.lo, b.lo);
}

bool is_rho_similar(const Interval1& a, const Interval1& b, double rho) {
    return union_diameter(a, b) <= rho * std::min(a.diameter(), b.diameter());
}

bool contains_point(const ConvexRegion& r, Point2 q) {
    if (const auto* d = std::get_if<Disk>(&r.shape())) return distance(q, d->center) <= d->radius;
    return polygon_contains(std::get<ConvexPolygon>(r.shape()), q);
}

bool region_intersects_cell(const ConvexRegion& r, const CellExtent& c) {
    const double x0 = c.anchor.x, y0 = c.anchor.y, x1 = x0 + c.side, y1 = y0 + c.side;
    if (const auto* d = std::get_if<Disk>(&r.shape())) {
        double cx = std::clamp(d->center.x, x0, x1);
        double cy = std::clamp(d->center.y, y0, y1);
        return distance({cx, cy}, d->center) <= d->radius;
    }
    if (r.bbox_hi().x < x0 || r.bbox_lo().x > x1 || r.bbox_hi().y < y0 || r.bbox_lo().y > y1) return false;
    // Remaining separating axes are the polygon's edge normals.
    const auto& v = std::get<ConvexPolygon>(r.shape()).vertices;
    const std::array<Point2, 4> sq{Point2{x0, y0}, Point2{x1, y0}, Point2{x1, y1}, Point2{x0, y1}};
    for (std::size_t i = 0; i < v.size(); ++i) {
        Point2 e = v[(i + 1) % v.size()] - v[i];
        Point2 n{e.y, -e.x};
        double b = dot(n, v[i]);
        bool all_out = true;
        for (const auto& s : sq)
            if (dot(n, s) <= b) {
                all_out = false;
                break;
            }
        if (all_out) return false;
    }
    return true;
}

bool regions_intersect(const ConvexRegion& a, const ConvexRegion& b) {
    const auto* da = std::get_if<Disk>(&a.shape());
    const auto* db = std::get_if<Disk>(&b.shape());
    if (da && db) return distance(da->center, db->center) <= da->radius + db->radius;
    if (da || db) {
        const Disk& d = da ? *da : *db;
        return dist_point_polygon(std::get<ConvexPolygon>((da ? b : a).shape()), d.center) <= d.radius;
    }
    for (const ConvexRegion* r : {&a, &b}) {
        const auto& v = std::get<ConvexPolygon>(r->shape()).vertices;
        for (std::size_t i = 0; i < v.size(); ++i) {
            Point2 e = v[(i + 1) % v.size()] - v[i];
            Point2 axis{e.y, -e.x};
            auto [alo, ahi] = project(a, axis);
            auto [blo, bhi] = project(b, axis);
            if (ahi < blo || bhi < alo) return false;
        }
    }
    return true;
}

bool ray_hits_region(const ConvexRegion& r, Point2 origin, Point2 dir) {
    if (const auto* d = std::get_if<Disk>(&r.shape())) {
        Point2 to = d->center - origin;
        double t = std::max(0.0, dot(to, dir) / dot(dir, dir));
        return distance(origin + t * dir, d->center) <= d->radius;
    }
    // Clip the parametric ray against every edge half-plane.
    double tlo = 0.0, thi = std::numeric_limits<double>::infinity();
    const auto& v = std::get<ConvexPolygon>(r.shape()).vertices;
    for (std::size_t i = 0; i < v.size(); ++i) {
        Point2 e = v[(i + 1) % v.size()] - v[i];
        Point2 n{e.y, -e.x};
        double num = dot(n, v[i]) - dot(n, origin);
        double den = dot(n, dir);
        if (den == 0.0) {
            if (num < 0.0) return false;
        } else if (den > 0.0) {
            thi = std::min(thi, num / den);
        } else {
            tlo = std::max(tlo, num / den);
        }
        if (tlo > thi) return false;
    }
    return true;
}

WedgeParams WedgeParams::for_beta(double beta) {
    if (!(beta >= 1.0)) fail(ErrorCode::InvalidArgument, "beta must be >= 1");
    WedgeParams w;
    w.beta = beta;
    w.k = static_cast<int>(std::ceil(13.0 * beta));
    w.phi = kTwoPi / w.k;
    return w;
}

int wedge_index(Point2 c, Point2 m, const WedgeParams& w) {
    if (c == m) fail(ErrorCode::CoincidentPoints, "wedge of a point around itself");
    double a = std::atan2(m.y - c.y, m.x - c.x);
    if (a < 0.0) a += kTwoPi;
    if (a >= kTwoPi) a = 0.0;
    int i = static_cast<int>(std::floor(a / w.phi));
    return std::clamp(i, 0, w.k - 1);
}

}  // namespace fatloc
