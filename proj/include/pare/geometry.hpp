#pragma once

// Planar polygon geometry in miles: containment, areal discretization and the
// extended (quantile) Hausdorff distance between regions.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <span>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include "pare/error.hpp"

namespace pare {

struct Point {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Point&, const Point&) = default;
};

inline double distance(Point a, Point b) { return std::hypot(a.x - b.x, a.y - b.y); }

/// Closed ring; the closing vertex is implicit (first != last).
using Ring = std::vector<Point>;

struct Polygon {
  Ring outer;
  std::vector<Ring> holes;
};

/// One areal unit. Several parts make a multipolygon.
struct Region {
  std::string id;
  std::vector<Polygon> parts;
};

struct BoundingBox {
  double min_x = std::numeric_limits<double>::infinity();
  double min_y = std::numeric_limits<double>::infinity();
  double max_x = -std::numeric_limits<double>::infinity();
  double max_y = -std::numeric_limits<double>::infinity();

  void extend(Point p) {
    min_x = std::min(min_x, p.x);
    min_y = std::min(min_y, p.y);
    max_x = std::max(max_x, p.x);
    max_y = std::max(max_y, p.y);
  }
  void extend(const BoundingBox& o) {
    extend(Point{o.min_x, o.min_y});
    extend(Point{o.max_x, o.max_y});
  }
  bool empty() const { return min_x > max_x; }
};

enum class Location { Outside, Boundary, Inside };

namespace detail {

inline constexpr double kBoundaryTol = 1e-9;

inline double signed_area(const Ring& ring) {
  double twice = 0.0;
  const std::size_t n = ring.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Point& a = ring[i];
    const Point& b = ring[(i + 1) % n];
    twice += a.x * b.y - b.x * a.y;
  }
  return 0.5 * twice;
}

inline double point_segment_distance(Point p, Point a, Point b) {
  const double dx = b.x - a.x;
  const double dy = b.y - a.y;
  const double len2 = dx * dx + dy * dy;
  if (len2 == 0.0) return distance(p, a);
  double t = ((p.x - a.x) * dx + (p.y - a.y) * dy) / len2;
  t = std::clamp(t, 0.0, 1.0);
  return distance(p, Point{a.x + t * dx, a.y + t * dy});
}

inline Location locate_in_ring(const Ring& ring, Point p) {
  const std::size_t n = ring.size();
  bool inside = false;
  for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
    const Point& a = ring[i];
    const Point& b = ring[j];
    if (point_segment_distance(p, a, b) <= kBoundaryTol) return Location::Boundary;
    if ((a.y > p.y) != (b.y > p.y)) {
      const double x_cross = (b.x - a.x) * (p.y - a.y) / (b.y - a.y) + a.x;
      if (p.x < x_cross) inside = !inside;
    }
  }
  return inside ? Location::Inside : Location::Outside;
}

inline int orientation(Point a, Point b, Point c) {
  const double v = (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x);
  if (v > 0.0) return 1;
  if (v < 0.0) return -1;
  return 0;
}

// True when the open segments cross at a single interior point.
inline bool proper_crossing(Point a, Point b, Point c, Point d) {
  const int o1 = orientation(a, b, c);
  const int o2 = orientation(a, b, d);
  const int o3 = orientation(c, d, a);
  const int o4 = orientation(c, d, b);
  return o1 * o2 < 0 && o3 * o4 < 0;
}

}  // namespace detail

inline double area(const Polygon& poly) {
  double a = std::abs(detail::signed_area(poly.outer));
  for (const Ring& h : poly.holes) a -= std::abs(detail::signed_area(h));
  return a;
}

inline double area(const Region& region) {
  double a = 0.0;
  for (const Polygon& p : region.parts) a += area(p);
  return a;
}

inline BoundingBox bounding_box(const Region& region) {
  BoundingBox box;
  for (const Polygon& p : region.parts)
    for (Point q : p.outer) box.extend(q);
  return box;
}

inline Location locate(const Polygon& poly, Point p) {
  const Location outer = detail::locate_in_ring(poly.outer, p);
  if (outer != Location::Inside) return outer;
  for (const Ring& h : poly.holes) {
    const Location in_hole = detail::locate_in_ring(h, p);
    if (in_hole == Location::Boundary) return Location::Boundary;
    if (in_hole == Location::Inside) return Location::Outside;
  }
  return Location::Inside;
}

inline Location locate(const Region& region, Point p) {
  Location best = Location::Outside;
  for (const Polygon& part : region.parts) {
    const Location l = locate(part, p);
    if (l == Location::Inside) return l;
    if (l == Location::Boundary) best = l;
  }
  return best;
}

/// Closed containment (boundary counts as inside).
inline bool contains(const Region& region, Point p) { return locate(region, p) != Location::Outside; }

/// Ordered collection of non-overlapping regions in a shared planar frame (miles).
class RegionSet {
 public:
  RegionSet() = default;
  explicit RegionSet(std::vector<Region> regions) : regions_(std::move(regions)) { validate(); }

  std::size_t size() const { return regions_.size(); }
  const Region& operator[](std::size_t i) const { return regions_[i]; }
  auto begin() const { return regions_.begin(); }
  auto end() const { return regions_.end(); }
  std::span<const Region> regions() const { return regions_; }

  BoundingBox bounding_box() const {
    BoundingBox box;
    for (const Region& r : regions_) box.extend(pare::bounding_box(r));
    return box;
  }

 private:
  void validate() const {
    if (regions_.empty()) throw Error(Errc::InvalidArgument, "region set is empty");
    std::unordered_set<std::string> ids;
    for (const Region& r : regions_) {
      if (!ids.insert(r.id).second) throw Error(Errc::InvalidArgument, "duplicate region id '" + r.id + "'");
      if (r.parts.empty()) throw Error(Errc::DegeneratePolygon, "region '" + r.id + "' has no polygons");
      for (const Polygon& p : r.parts) {
        if (p.outer.size() < 3 || !(area(p) > 0.0))
          throw Error(Errc::DegeneratePolygon, "region '" + r.id + "' has a zero-area polygon");
      }
      check_simple(r);
    }
    for (std::size_t i = 0; i < regions_.size(); ++i)
      for (std::size_t j = i + 1; j < regions_.size(); ++j) check_disjoint(regions_[i], regions_[j]);
  }

  static std::vector<std::pair<Point, Point>> edges(const Region& r) {
    std::vector<std::pair<Point, Point>> out;
    auto add = [&out](const Ring& ring) {
      for (std::size_t k = 0; k < ring.size(); ++k) out.emplace_back(ring[k], ring[(k + 1) % ring.size()]);
    };
    for (const Polygon& p : r.parts) {
      add(p.outer);
      for (const Ring& h : p.holes) add(h);
    }
    return out;
  }

  static void check_simple(const Region& r) {
    const auto e = edges(r);
    for (std::size_t i = 0; i < e.size(); ++i)
      for (std::size_t j = i + 1; j < e.size(); ++j)
        if (detail::proper_crossing(e[i].first, e[i].second, e[j].first, e[j].second))
          throw Error(Errc::InvalidArgument, "region '" + r.id + "' is self-intersecting");
  }

  static void check_disjoint(const Region& a, const Region& b) {
    const auto ea = edges(a);
    const auto eb = edges(b);
    for (const auto& [p, q] : ea)
      for (const auto& [s, t] : eb)
        if (detail::proper_crossing(p, q, s, t))
          throw Error(Errc::InvalidArgument, "regions '" + a.id + "' and '" + b.id + "' overlap");
    for (const Polygon& part : a.parts)
      for (Point v : part.outer)
        if (locate(b, v) == Location::Inside)
          throw Error(Errc::InvalidArgument, "regions '" + a.id + "' and '" + b.id + "' overlap");
    for (const Polygon& part : b.parts)
      for (Point v : part.outer)
        if (locate(a, v) == Location::Inside)
          throw Error(Errc::InvalidArgument, "regions '" + a.id + "' and '" + b.id + "' overlap");
  }

  std::vector<Region> regions_;
};

/// Local equirectangular projection of WGS84 lon/lat onto a plane in miles.
class LocalProjection {
 public:
  static constexpr double kEarthRadiusMiles = 3958.8;

  LocalProjection(double lon0, double lat0) : lon0_(lon0), lat0_(lat0), cos_lat0_(std::cos(radians(lat0))) {}

  Point forward(double lon, double lat) const {
    return {kEarthRadiusMiles * cos_lat0_ * radians(lon - lon0_), kEarthRadiusMiles * radians(lat - lat0_)};
  }
  /// Inverse of forward: {lon, lat} in degrees.
  std::pair<double, double> inverse(Point p) const {
    return {lon0_ + degrees(p.x / (kEarthRadiusMiles * cos_lat0_)), lat0_ + degrees(p.y / kEarthRadiusMiles)};
  }
  double lon0() const { return lon0_; }
  double lat0() const { return lat0_; }

 private:
  static double radians(double deg) { return deg * std::numbers::pi / 180.0; }
  static double degrees(double rad) { return rad * 180.0 / std::numbers::pi; }
  double lon0_;
  double lat0_;
  double cos_lat0_;
};

/// Points covering a region: lattice points at integer multiples of `pitch`
/// inside the region (closed), plus samples every `pitch` along each ring.
/// The lattice is anchored at the origin, so regions share one discretization.
inline std::vector<Point> discretize(const Region& region, double pitch) {
  if (!(pitch > 0.0)) throw Error(Errc::InvalidArgument, "discretization pitch must be positive");
  if (!(area(region) > 0.0)) throw Error(Errc::DegeneratePolygon, "region '" + region.id + "' has zero area");
  std::vector<Point> pts;
  const BoundingBox box = bounding_box(region);
  const auto i0 = static_cast<long long>(std::ceil(box.min_x / pitch));
  const auto i1 = static_cast<long long>(std::floor(box.max_x / pitch));
  const auto j0 = static_cast<long long>(std::ceil(box.min_y / pitch));
  const auto j1 = static_cast<long long>(std::floor(box.max_y / pitch));
  for (long long i = i0; i <= i1; ++i)
    for (long long j = j0; j <= j1; ++j) {
      const Point p{static_cast<double>(i) * pitch, static_cast<double>(j) * pitch};
      if (contains(region, p)) pts.push_back(p);
    }
  auto sample_ring = [&](const Ring& ring) {
    for (std::size_t k = 0; k < ring.size(); ++k) {
      const Point a = ring[k];
      const Point b = ring[(k + 1) % ring.size()];
      const double len = distance(a, b);
      const auto steps = std::max<long long>(1, static_cast<long long>(std::ceil(len / pitch)));
      for (long long s = 0; s < steps; ++s) {
        const double t = static_cast<double>(s) / static_cast<double>(steps);
        pts.push_back({a.x + t * (b.x - a.x), a.y + t * (b.y - a.y)});
      }
    }
  };
  for (const Polygon& p : region.parts) {
    sample_ring(p.outer);
    for (const Ring& h : p.holes) sample_ring(h);
  }
  return pts;
}

/// Uniform bucket grid for nearest-neighbour distance queries on a fixed point set.
class NearestNeighbor {
 public:
  NearestNeighbor(std::span<const Point> points, double cell) : points_(points.begin(), points.end()), cell_(cell) {
    if (points_.empty()) throw Error(Errc::InvalidArgument, "nearest-neighbour index over empty set");
    for (Point p : points_) box_.extend(p);
    if (!(cell_ > 0.0)) cell_ = 1.0;
    nx_ = static_cast<std::size_t>(std::floor((box_.max_x - box_.min_x) / cell_)) + 1;
    ny_ = static_cast<std::size_t>(std::floor((box_.max_y - box_.min_y) / cell_)) + 1;
    buckets_.resize(nx_ * ny_);
    for (std::size_t k = 0; k < points_.size(); ++k) buckets_[bucket_of(points_[k])].push_back(k);
  }

  /// Euclidean distance from q to the nearest indexed point.
  double distance_to(Point q) const {
    const long long cx = clamp_cell((q.x - box_.min_x) / cell_, nx_);
    const long long cy = clamp_cell((q.y - box_.min_y) / cell_, ny_);
    // q projects onto the box at p; for x in the box |q-x|^2 >= |q-p|^2 + |p-x|^2.
    const double ox = std::max({box_.min_x - q.x, 0.0, q.x - box_.max_x});
    const double oy = std::max({box_.min_y - q.y, 0.0, q.y - box_.max_y});
    const double outside2 = ox * ox + oy * oy;
    const auto nx = static_cast<long long>(nx_);
    const auto ny = static_cast<long long>(ny_);
    double best2 = std::numeric_limits<double>::infinity();
    auto scan = [&](long long ix, long long iy) {
      if (ix < 0 || ix >= nx || iy < 0 || iy >= ny) return;
      for (std::size_t k : buckets_[static_cast<std::size_t>(ix) * ny_ + static_cast<std::size_t>(iy)]) {
        const double dx = points_[k].x - q.x;
        const double dy = points_[k].y - q.y;
        best2 = std::min(best2, dx * dx + dy * dy);
      }
    };
    const long long max_ring = std::max(nx, ny);
    for (long long ring = 0; ring <= max_ring; ++ring) {
      // Cells in ring `ring` are at least (ring - 1) * cell_ away from p.
      const double lower = std::max(0.0, static_cast<double>(ring - 1) * cell_);
      if (ring > 0 && outside2 + lower * lower > best2) break;
      if (ring == 0) {
        scan(cx, cy);
        continue;
      }
      for (long long ix = cx - ring; ix <= cx + ring; ++ix) {
        scan(ix, cy - ring);
        scan(ix, cy + ring);
      }
      for (long long iy = cy - ring + 1; iy <= cy + ring - 1; ++iy) {
        scan(cx - ring, iy);
        scan(cx + ring, iy);
      }
    }
    return std::sqrt(best2);
  }

 private:
  static long long clamp_cell(double v, std::size_t n) {
    const auto c = static_cast<long long>(std::floor(v));
    return std::clamp<long long>(c, 0, static_cast<long long>(n) - 1);
  }
  std::size_t bucket_of(Point p) const {
    return static_cast<std::size_t>(clamp_cell((p.x - box_.min_x) / cell_, nx_)) * ny_ +
           static_cast<std::size_t>(clamp_cell((p.y - box_.min_y) / cell_, ny_));
  }

  std::vector<Point> points_;
  double cell_;
  BoundingBox box_;
  std::size_t nx_ = 0;
  std::size_t ny_ = 0;
  std::vector<std::vector<std::size_t>> buckets_;
};

/// Lower empirical f-quantile: the ceil(f*m)-th smallest value (f in (0,1]).
inline double lower_quantile(std::vector<double> values, double f) {
  if (values.empty()) throw Error(Errc::InvalidArgument, "quantile of empty set");
  if (!(f > 0.0 && f <= 1.0)) throw Error(Errc::InvalidArgument, "quantile fraction must lie in (0,1]");
  const auto m = values.size();
  auto k = static_cast<std::size_t>(std::ceil(f * static_cast<double>(m)));
  k = std::clamp<std::size_t>(k, 1, m) - 1;
  std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(k), values.end());
  return values[k];
}

/// Extended Hausdorff distance between two point sets:
/// max(q_f{d(a,B) : a in A}, q_f{d(b,A) : b in B}). f = 1 is the classical Hausdorff distance.
inline double extended_hausdorff(std::span<const Point> a, std::span<const Point> b, double f) {
  if (!(f > 0.0 && f <= 1.0)) throw Error(Errc::InvalidArgument, "Hausdorff fraction must lie in (0,1]");
  if (a.empty() || b.empty()) throw Error(Errc::DegeneratePolygon, "empty point set");
  auto directed = [f](std::span<const Point> from, std::span<const Point> to) {
    BoundingBox box;
    for (Point p : to) box.extend(p);
    const double extent = std::max(box.max_x - box.min_x, box.max_y - box.min_y);
    const double cell = std::max(extent / std::sqrt(static_cast<double>(to.size())), 1e-9);
    const NearestNeighbor index(to, cell);
    std::vector<double> d;
    d.reserve(from.size());
    for (Point p : from) d.push_back(index.distance_to(p));
    return lower_quantile(std::move(d), f);
  };
  return std::max(directed(a, b), directed(b, a));
}

/// Default discretization pitch for areal Hausdorff distances, in miles.
inline constexpr double kDefaultHausdorffPitch = 0.25;

inline double extended_hausdorff(const Region& a, const Region& b, double f, double pitch = kDefaultHausdorffPitch) {
  const auto pa = discretize(a, pitch);
  const auto pb = discretize(b, pitch);
  return extended_hausdorff(pa, pb, f);
}

}  // namespace pare
