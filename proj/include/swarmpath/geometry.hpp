#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <cstddef>
#include <optional>
#include <span>
#include <utility>
#include <vector>

namespace swarmpath {

using Vec2 = Eigen::Vector2d;
using Box2 = Eigen::AlignedBox2d;
using Polyline = std::vector<Vec2>;

/// Distance below which a point counts as lying on a boundary.
inline constexpr double kBoundaryTolerance = 1e-9;

/// Counterclockwise rotation by 90 degrees.
inline Vec2 perp(const Vec2 & a) { return {-a.y(), a.x()}; }

/// z-component of the 3-D cross product.
inline double cross(const Vec2 & a, const Vec2 & b) { return a.x() * b.y() - a.y() * b.x(); }

struct Segment
{
  Vec2 a;
  Vec2 b;

  double length() const { return (b - a).norm(); }
};

/// Position on a boundary loop, parametrized by arc length.
///
/// Loop 0 is the outer loop, loop `k >= 1` is hole `k - 1`.
struct BoundaryCursor
{
  std::size_t loop_id = 0;
  double arc_length   = 0.0;
};

/**
 * @brief A planar printable domain: one counterclockwise outer loop and any
 * number of clockwise holes, in millimetres.
 *
 * Instances are immutable and always valid; the factory rejects
 * self-intersecting loops, wrong orientations, holes that leave the outer
 * loop or touch each other, and degenerate edges. Each loop stores its
 * cumulative edge lengths so cursor lookups are a binary search.
 */
class PartSlice
{
public:
  /// Validates and builds a slice. Throws ValidationError naming the loop and
  /// vertex index of the first violation found.
  static PartSlice from_loops(Polyline outer, std::vector<Polyline> holes = {});

  std::size_t loop_count() const { return loops_.size(); }
  std::size_t hole_count() const { return loops_.size() - 1; }

  const Polyline & outer() const { return loops_.front().points; }
  const Polyline & loop(std::size_t id) const { return loops_.at(id).points; }
  double perimeter(std::size_t id) const { return loops_.at(id).cumulative.back(); }
  const Box2 & loop_bounds(std::size_t id) const { return loops_.at(id).bounds; }
  const Box2 & bounds() const { return loops_.front().bounds; }

  Vec2 to_point(const BoundaryCursor & c) const;
  /// Unit direction of travel along the loop at the cursor (edge containing it).
  Vec2 tangent(const BoundaryCursor & c) const;
  /// Index of the edge containing the cursor; edge e runs from vertex e to e+1.
  std::size_t edge_at(const BoundaryCursor & c) const;
  /// Arc length of vertex `v` on loop `id`.
  double vertex_arc(std::size_t id, std::size_t v) const { return loops_.at(id).cumulative.at(v); }

  /// Total enclosed area (outer minus holes), mm^2.
  double area() const;

private:
  struct LoopData
  {
    Polyline points;
    std::vector<double> cumulative;  // size points.size() + 1, cumulative[0] == 0
    Box2 bounds;
  };

  explicit PartSlice(std::vector<LoopData> loops) : loops_(std::move(loops)) {}
  static LoopData make_loop(Polyline pts);

  std::vector<LoopData> loops_;
};

/// Signed area, positive for counterclockwise loops.
double signed_area(std::span<const Vec2> loop);

/// True iff `p` is inside the outer loop and outside every hole. Points within
/// kBoundaryTolerance of any boundary count as inside.
bool contains(const PartSlice & slice, const Vec2 & p);

/// Closest boundary point over all loops, with its distance. Ties resolve to
/// the lowest loop id, then the lowest arc length.
std::pair<BoundaryCursor, double> project_to_boundary(const PartSlice & slice, const Vec2 & p);

/// Closest point on one loop.
std::pair<BoundaryCursor, double> project_to_loop(const PartSlice & slice, std::size_t loop_id, const Vec2 & p);

/// Moves the cursor by `ds` along its loop, wrapping modulo the perimeter.
BoundaryCursor cursor_advance(const PartSlice & slice, const BoundaryCursor & c, double ds);

/// Shortest arc distance between two cursors on the same loop.
double arc_distance(const PartSlice & slice, const BoundaryCursor & a, const BoundaryCursor & b);

struct SegmentHit
{
  std::size_t loop_id;
  Vec2 point;
  double parameter;  ///< position along a->b in [0, 1]
};

/// First crossing of the segment a->b with any boundary loop, ordered by the
/// parameter from `a`. Touching within kBoundaryTolerance counts as a hit.
std::optional<SegmentHit> segment_hits(const PartSlice & slice, const Vec2 & a, const Vec2 & b);

/// Same as segment_hits restricted to one loop.
std::optional<SegmentHit> segment_hits_loop(const PartSlice & slice, std::size_t loop_id, const Vec2 & a, const Vec2 & b);

/// Closest point to `p` on segment [a, b].
Vec2 closest_point_on_segment(const Vec2 & p, const Vec2 & a, const Vec2 & b);

inline double point_segment_distance(const Vec2 & p, const Vec2 & a, const Vec2 & b)
{
  return (p - closest_point_on_segment(p, a, b)).norm();
}

/// Distance from `p` to the nearest point of polyline `q` (a single point if
/// `q` has one vertex).
double point_polyline_distance(const Vec2 & p, std::span<const Vec2> q);

/// For each point of `p`, the distance to the nearest point on `q`.
std::vector<double> polyline_pair_min_distance(std::span<const Vec2> p, std::span<const Vec2> q);

/// Proper (transversal) crossing test: both segments straddle each other's
/// supporting line by more than `tolerance`.
bool segments_cross(const Vec2 & a, const Vec2 & b, const Vec2 & c, const Vec2 & d, double tolerance = 1e-6);

// Part builders ------------------------------------------------------------

/// Circle as a polygon whose chords deviate from the arc by at most
/// `chord_tolerance`. Orientation is clockwise when `clockwise` is set.
Polyline polygonize_circle(const Vec2 & center, double radius, double chord_tolerance = 0.01, bool clockwise = true);

/// Axis-aligned rectangle [0, length] x [0, width].
PartSlice make_rectangle(double length, double width);

/// Open-hole tensile specimen: `length` x `width` rectangle with a centered
/// circular hole of the given diameter.
PartSlice make_open_hole_specimen(
  double length = 150.0, double width = 36.0, double hole_diameter = 6.0, double chord_tolerance = 0.01);

}  // namespace swarmpath
