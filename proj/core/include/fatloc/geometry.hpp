#pragma once

#include <cmath>
#include <numbers>
#include <span>
#include <variant>
#include <vector>

#include "fatloc/error.hpp"

namespace fatloc {

struct Point2 {
    double x = 0.0;
    double y = 0.0;

    friend bool operator==(const Point2&, const Point2&) = default;
};

inline Point2 operator+(Point2 a, Point2 b) { return {a.x + b.x, a.y + b.y}; }
inline Point2 operator-(Point2 a, Point2 b) { return {a.x - b.x, a.y - b.y}; }
inline Point2 operator*(double s, Point2 a) { return {s * a.x, s * a.y}; }
inline double dot(Point2 a, Point2 b) { return a.x * b.x + a.y * b.y; }
inline double cross(Point2 a, Point2 b) { return a.x * b.y - a.y * b.x; }
inline double norm(Point2 a) { return std::hypot(a.x, a.y); }
inline double distance(Point2 a, Point2 b) { return norm(a - b); }

// Throws InvalidArgument on NaN/inf coordinates.
Point2 checked_point(double x, double y);

struct Interval1 {
    double lo = 0.0;
    double hi = 0.0;

    Interval1() = default;
    Interval1(double lo_, double hi_);

    double diameter() const { return hi - lo; }
    double midpoint() const { return lo + 0.5 * (hi - lo); }
    bool contains(double x) const { return lo <= x && x <= hi; }
    bool overlaps(const Interval1& o) const { return lo <= o.hi && o.lo <= hi; }
    friend bool operator==(const Interval1&, const Interval1&) = default;
};

// Half-open axis-aligned square [x, x+side) x [y, y+side).
struct CellExtent {
    Point2 anchor;
    double side = 1.0;
    int depth = 0;

    Point2 center() const { return {anchor.x + 0.5 * side, anchor.y + 0.5 * side}; }
    bool contains(Point2 q) const {
        return q.x >= anchor.x && q.x < anchor.x + side && q.y >= anchor.y && q.y < anchor.y + side;
    }
};

struct Disk {
    Point2 center;
    double radius = 0.0;
};

struct ConvexPolygon {
    std::vector<Point2> vertices;  // counterclockwise, strictly convex
};

using Shape = std::variant<Disk, ConvexPolygon>;

struct Representative {
    Point2 rep;
    double r_inner = 0.0;
    double r_outer = 0.0;
};

// Chebyshev center for polygons; the disk's own center otherwise.
Representative compute_representative(const Shape& shape);

class ConvexRegion {
public:
    static ConvexRegion disk(Point2 center, double radius);
    static ConvexRegion polygon(std::vector<Point2> ccw_vertices);
    explicit ConvexRegion(Shape shape);

    const Shape& shape() const { return shape_; }
    bool is_disk() const { return std::holds_alternative<Disk>(shape_); }
    Point2 rep() const { return rep_; }
    double r_inner() const { return r_inner_; }
    double r_outer() const { return r_outer_; }
    double diam() const { return diam_; }
    double thickness() const { return r_outer_ / r_inner_; }
    bool is_thick(double beta) const { return thickness() <= beta; }

    // Bounding box corners.
    Point2 bbox_lo() const { return bbox_lo_; }
    Point2 bbox_hi() const { return bbox_hi_; }

private:
    Shape shape_;
    Point2 rep_;
    double r_inner_ = 0.0;
    double r_outer_ = 0.0;
    double diam_ = 0.0;
    Point2 bbox_lo_;
    Point2 bbox_hi_;
};

double union_diameter(const ConvexRegion& a, const ConvexRegion& b);
bool is_rho_similar(const ConvexRegion& a, const ConvexRegion& b, double rho);

// 1D regions are intervals; similarity uses interval length as diameter.
double union_diameter(const Interval1& a, const Interval1& b);
bool is_rho_similar(const Interval1& a, const Interval1& b, double rho);

// Closed-set semantics for both predicates.
bool contains_point(const ConvexRegion& r, Point2 q);
bool region_intersects_cell(const ConvexRegion& r, const CellExtent& c);
bool regions_intersect(const ConvexRegion& a, const ConvexRegion& b);

// Ray from origin in direction dir (unit or not) meets the closed region.
bool ray_hits_region(const ConvexRegion& r, Point2 origin, Point2 dir);

struct WedgeParams {
    double beta = 1.0;
    int k = 13;
    double phi = 2.0 * std::numbers::pi / 13.0;

    static WedgeParams for_beta(double beta);
};

// Index i with angle(m - c) in [i*phi, (i+1)*phi), angle normalised to [0, 2pi).
int wedge_index(Point2 c, Point2 m, const WedgeParams& w);

}  // namespace fatloc
