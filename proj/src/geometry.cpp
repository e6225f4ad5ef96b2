#include "swarmpath/geometry.hpp"

#include "swarmpath/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

namespace swarmpath {

namespace {

constexpr double kMinEdgeLength = 1e-9;

std::string loop_name(std::size_t id)
{
  return id == 0 ? std::string("outer") : "hole " + std::to_string(id - 1);
}

// Even-odd ray casting; boundary points are undetermined here.
bool inside_loop(std::span<const Vec2> loop, const Vec2 & p)
{
  bool inside        = false;
  const std::size_t n = loop.size();
  for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
    const Vec2 & a = loop[i];
    const Vec2 & b = loop[j];
    if ((a.y() > p.y()) != (b.y() > p.y())) {
      const double x = a.x() + (p.y() - a.y()) * (b.x() - a.x()) / (b.y() - a.y());
      if (p.x() < x) { inside = !inside; }
    }
  }
  return inside;
}

double loop_distance(std::span<const Vec2> loop, const Vec2 & p)
{
  double best         = std::numeric_limits<double>::infinity();
  const std::size_t n = loop.size();
  for (std::size_t i = 0; i < n; ++i) {
    best = std::min(best, point_segment_distance(p, loop[i], loop[(i + 1) % n]));
  }
  return best;
}

// Closed-segment intersection including touching and collinear overlap.
bool segments_touch(const Vec2 & a, const Vec2 & b, const Vec2 & c, const Vec2 & d)
{
  const double tol = kBoundaryTolerance;
  return point_segment_distance(a, c, d) <= tol || point_segment_distance(b, c, d) <= tol
      || point_segment_distance(c, a, b) <= tol || point_segment_distance(d, a, b) <= tol
      || segments_cross(a, b, c, d, 0.0);
}

}  // namespace

double signed_area(std::span<const Vec2> loop)
{
  double area         = 0.0;
  const std::size_t n = loop.size();
  for (std::size_t i = 0; i < n; ++i) { area += cross(loop[i], loop[(i + 1) % n]); }
  return 0.5 * area;
}

PartSlice::LoopData PartSlice::make_loop(Polyline pts)
{
  LoopData data;
  data.cumulative.reserve(pts.size() + 1);
  data.cumulative.push_back(0.0);
  for (std::size_t i = 0; i < pts.size(); ++i) {
    data.cumulative.push_back(data.cumulative.back() + (pts[(i + 1) % pts.size()] - pts[i]).norm());
    data.bounds.extend(pts[i]);
  }
  data.points = std::move(pts);
  return data;
}

PartSlice PartSlice::from_loops(Polyline outer, std::vector<Polyline> holes)
{
  const std::string where = "geometry::validate";
  std::vector<Polyline> all;
  all.reserve(holes.size() + 1);
  all.push_back(std::move(outer));
  for (auto & h : holes) { all.push_back(std::move(h)); }

  for (std::size_t id = 0; id < all.size(); ++id) {
    const Polyline & loop = all[id];
    const std::size_t n   = loop.size();
    if (n < 3) { throw ValidationError(where, loop_name(id) + " loop has fewer than 3 vertices"); }
    for (std::size_t i = 0; i < n; ++i) {
      if (!loop[i].allFinite()) {
        throw ValidationError(where, loop_name(id) + " vertex " + std::to_string(i) + " is not finite");
      }
      if ((loop[(i + 1) % n] - loop[i]).norm() <= kMinEdgeLength) {
        throw ValidationError(
          where, loop_name(id) + " vertex " + std::to_string(i) + " duplicates its successor (zero-length edge)");
      }
    }
    // Simplicity: non-adjacent edges must not touch.
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 2; j < n; ++j) {
        if (i == 0 && j == n - 1) { continue; }
        if (segments_touch(loop[i], loop[(i + 1) % n], loop[j], loop[(j + 1) % n])) {
          throw ValidationError(
            where, loop_name(id) + " is self-intersecting at edges starting at vertex " + std::to_string(i) + " and "
                     + std::to_string(j));
        }
      }
    }
    const double area = signed_area(loop);
    if (id == 0 && area <= 0.0) {
      throw ValidationError(where, "outer loop must be counterclockwise (vertex 0 onward)");
    }
    if (id > 0 && area >= 0.0) {
      throw ValidationError(where, loop_name(id) + " must be clockwise (vertex 0 onward)");
    }
  }

  const Polyline & out = all.front();
  for (std::size_t id = 1; id < all.size(); ++id) {
    const Polyline & hole = all[id];
    for (std::size_t i = 0; i < hole.size(); ++i) {
      if (!inside_loop(out, hole[i]) || loop_distance(out, hole[i]) <= kBoundaryTolerance) {
        throw ValidationError(
          where, loop_name(id) + " vertex " + std::to_string(i) + " is not strictly inside the outer loop");
      }
    }
    for (std::size_t other = id + 1; other < all.size(); ++other) {
      const Polyline & h2 = all[other];
      for (std::size_t i = 0; i < hole.size(); ++i) {
        for (std::size_t j = 0; j < h2.size(); ++j) {
          if (segments_touch(hole[i], hole[(i + 1) % hole.size()], h2[j], h2[(j + 1) % h2.size()])) {
            throw ValidationError(
              where, loop_name(id) + " vertex " + std::to_string(i) + " overlaps " + loop_name(other));
          }
        }
      }
      if (inside_loop(h2, hole.front()) || inside_loop(hole, h2.front())) {
        throw ValidationError(where, loop_name(id) + " vertex 0 overlaps " + loop_name(other));
      }
    }
  }

  std::vector<LoopData> loops;
  loops.reserve(all.size());
  for (auto & l : all) { loops.push_back(make_loop(std::move(l))); }
  return PartSlice(std::move(loops));
}

std::size_t PartSlice::edge_at(const BoundaryCursor & c) const
{
  const auto & cum = loops_.at(c.loop_id).cumulative;
  auto it          = std::upper_bound(cum.begin(), cum.end(), c.arc_length);
  auto e           = static_cast<std::size_t>(std::distance(cum.begin(), it));
  e                = e == 0 ? 0 : e - 1;
  return std::min(e, cum.size() - 2);
}

Vec2 PartSlice::to_point(const BoundaryCursor & c) const
{
  const auto & data = loops_.at(c.loop_id);
  const std::size_t e = edge_at(c);
  const std::size_t n = data.points.size();
  const double len    = data.cumulative[e + 1] - data.cumulative[e];
  const double t      = std::clamp((c.arc_length - data.cumulative[e]) / len, 0.0, 1.0);
  return data.points[e] + t * (data.points[(e + 1) % n] - data.points[e]);
}

Vec2 PartSlice::tangent(const BoundaryCursor & c) const
{
  const auto & data = loops_.at(c.loop_id);
  const std::size_t e = edge_at(c);
  const std::size_t n = data.points.size();
  return (data.points[(e + 1) % n] - data.points[e]).normalized();
}

double PartSlice::area() const
{
  double a = 0.0;
  for (const auto & l : loops_) { a += signed_area(l.points); }
  return a;
}

bool contains(const PartSlice & slice, const Vec2 & p)
{
  bool inside = slice.bounds().exteriorDistance(p) == 0.0 && inside_loop(slice.outer(), p);
  if (inside) {
    for (std::size_t id = 1; id < slice.loop_count(); ++id) {
      if (slice.loop_bounds(id).exteriorDistance(p) == 0.0 && inside_loop(slice.loop(id), p)) {
        inside = false;
        break;
      }
    }
  }
  if (inside) { return true; }
  for (std::size_t id = 0; id < slice.loop_count(); ++id) {
    if (slice.loop_bounds(id).exteriorDistance(p) > kBoundaryTolerance) { continue; }
    if (loop_distance(slice.loop(id), p) <= kBoundaryTolerance) { return true; }
  }
  return false;
}

Vec2 closest_point_on_segment(const Vec2 & p, const Vec2 & a, const Vec2 & b)
{
  const Vec2 ab   = b - a;
  const double l2 = ab.squaredNorm();
  if (l2 == 0.0) { return a; }
  const double t = std::clamp((p - a).dot(ab) / l2, 0.0, 1.0);
  return a + t * ab;
}

std::pair<BoundaryCursor, double> project_to_loop(const PartSlice & slice, std::size_t loop_id, const Vec2 & p)
{
  const Polyline & loop = slice.loop(loop_id);
  const std::size_t n   = loop.size();
  double best           = std::numeric_limits<double>::infinity();
  BoundaryCursor cursor{loop_id, 0.0};
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2 & a  = loop[i];
    const Vec2 & b  = loop[(i + 1) % n];
    const Vec2 ab   = b - a;
    const double t  = std::clamp((p - a).dot(ab) / ab.squaredNorm(), 0.0, 1.0);
    const double d  = (p - (a + t * ab)).norm();
    if (d < best) {
      best   = d;
      cursor = {loop_id, slice.vertex_arc(loop_id, i) + t * ab.norm()};
    }
  }
  if (cursor.arc_length >= slice.perimeter(loop_id)) { cursor.arc_length = 0.0; }
  return {cursor, best};
}

std::pair<BoundaryCursor, double> project_to_boundary(const PartSlice & slice, const Vec2 & p)
{
  auto best = project_to_loop(slice, 0, p);
  for (std::size_t id = 1; id < slice.loop_count(); ++id) {
    auto candidate = project_to_loop(slice, id, p);
    if (candidate.second < best.second) { best = candidate; }
  }
  return best;
}

BoundaryCursor cursor_advance(const PartSlice & slice, const BoundaryCursor & c, double ds)
{
  const double perimeter = slice.perimeter(c.loop_id);
  double s               = std::fmod(c.arc_length + ds, perimeter);
  if (s < 0.0) { s += perimeter; }
  if (s >= perimeter) { s = 0.0; }
  return {c.loop_id, s};
}

double arc_distance(const PartSlice & slice, const BoundaryCursor & a, const BoundaryCursor & b)
{
  const double perimeter = slice.perimeter(a.loop_id);
  const double d         = std::fmod(std::abs(a.arc_length - b.arc_length), perimeter);
  return std::min(d, perimeter - d);
}

std::optional<SegmentHit> segment_hits_loop(const PartSlice & slice, std::size_t loop_id, const Vec2 & a, const Vec2 & b)
{
  Box2 seg_box(a);
  seg_box.extend(b);
  if (slice.loop_bounds(loop_id).exteriorDistance(seg_box.center()) > 0.5 * seg_box.diagonal().norm() + kBoundaryTolerance) {
    return std::nullopt;
  }

  const Polyline & loop = slice.loop(loop_id);
  const std::size_t n   = loop.size();
  const Vec2 r          = b - a;
  const double r2       = r.squaredNorm();
  std::optional<SegmentHit> best;

  auto offer = [&](double t, const Vec2 & point) {
    if (!best || t < best->parameter) { best = SegmentHit{loop_id, point, t}; }
  };
  auto param_of = [&](const Vec2 & q) { return r2 == 0.0 ? 0.0 : std::clamp((q - a).dot(r) / r2, 0.0, 1.0); };

  for (std::size_t i = 0; i < n; ++i) {
    const Vec2 & q0 = loop[i];
    const Vec2 & q1 = loop[(i + 1) % n];
    const Vec2 s    = q1 - q0;
    const double denom = cross(r, s);
    if (denom != 0.0) {
      const double t = cross(q0 - a, s) / denom;
      const double u = cross(q0 - a, r) / denom;
      if (t >= 0.0 && t <= 1.0 && u >= 0.0 && u <= 1.0) { offer(t, a + t * r); }
    }
    // Near-touching cases.
    if (point_segment_distance(a, q0, q1) <= kBoundaryTolerance) { offer(0.0, a); }
    if (point_segment_distance(b, q0, q1) <= kBoundaryTolerance) { offer(1.0, b); }
    if (point_segment_distance(q0, a, b) <= kBoundaryTolerance) { offer(param_of(q0), q0); }
    if (point_segment_distance(q1, a, b) <= kBoundaryTolerance) { offer(param_of(q1), q1); }
  }
  return best;
}

std::optional<SegmentHit> segment_hits(const PartSlice & slice, const Vec2 & a, const Vec2 & b)
{
  std::optional<SegmentHit> best;
  for (std::size_t id = 0; id < slice.loop_count(); ++id) {
    auto hit = segment_hits_loop(slice, id, a, b);
    if (hit && (!best || hit->parameter < best->parameter)) { best = hit; }
  }
  return best;
}

double point_polyline_distance(const Vec2 & p, std::span<const Vec2> q)
{
  if (q.size() == 1) { return (p - q.front()).norm(); }
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j + 1 < q.size(); ++j) { best = std::min(best, point_segment_distance(p, q[j], q[j + 1])); }
  return best;
}

std::vector<double> polyline_pair_min_distance(std::span<const Vec2> p, std::span<const Vec2> q)
{
  std::vector<double> out;
  out.reserve(p.size());
  for (const Vec2 & pt : p) { out.push_back(point_polyline_distance(pt, q)); }
  return out;
}

bool segments_cross(const Vec2 & a, const Vec2 & b, const Vec2 & c, const Vec2 & d, double tolerance)
{
  const Vec2 ab = b - a;
  const Vec2 cd = d - c;
  const double lab = ab.norm();
  const double lcd = cd.norm();
  if (lab == 0.0 || lcd == 0.0) { return false; }
  // Signed distances of each endpoint from the other segment's line.
  const double dc = cross(ab, c - a) / lab;
  const double dd = cross(ab, d - a) / lab;
  const double da = cross(cd, a - c) / lcd;
  const double db = cross(cd, b - c) / lcd;
  if (tolerance == 0.0) {
    return ((dc > 0 && dd < 0) || (dc < 0 && dd > 0)) && ((da > 0 && db < 0) || (da < 0 && db > 0));
  }
  return dc * dd < 0.0 && da * db < 0.0 && std::min({std::abs(dc), std::abs(dd), std::abs(da), std::abs(db)}) > tolerance;
}

Polyline polygonize_circle(const Vec2 & center, double radius, double chord_tolerance, bool clockwise)
{
  const double ratio = std::clamp(1.0 - chord_tolerance / radius, -1.0, 1.0);
  const auto n       = std::max<std::size_t>(8, static_cast<std::size_t>(std::ceil(std::numbers::pi / std::acos(ratio))));
  Polyline pts;
  pts.reserve(n);
  const double sign = clockwise ? -1.0 : 1.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double angle = std::numbers::pi + sign * 2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(n);
    pts.emplace_back(center.x() + radius * std::cos(angle), center.y() + radius * std::sin(angle));
  }
  return pts;
}

PartSlice make_rectangle(double length, double width)
{
  return PartSlice::from_loops({{0.0, 0.0}, {length, 0.0}, {length, width}, {0.0, width}});
}

PartSlice make_open_hole_specimen(double length, double width, double hole_diameter, double chord_tolerance)
{
  return PartSlice::from_loops(
    {{0.0, 0.0}, {length, 0.0}, {length, width}, {0.0, width}},
    {polygonize_circle({0.5 * length, 0.5 * width}, 0.5 * hole_diameter, chord_tolerance, true)});
}

}  // namespace swarmpath
