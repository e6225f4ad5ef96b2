#include "swarmpath/errors.hpp"
#include "swarmpath/geometry.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

using namespace swarmpath;

namespace {

PartSlice square_with_square_hole()
{
  return PartSlice::from_loops({{0, 0}, {10, 0}, {10, 10}, {0, 10}}, {{{4, 4}, {4, 6}, {6, 6}, {6, 4}}});
}

}  // namespace

TEST(Geometry, ContainsSpecimen)
{
  const PartSlice s = make_open_hole_specimen();
  EXPECT_FALSE(contains(s, Vec2(75, 18))) << "hole centre lies in the hole";
  for (const Vec2 & v : s.outer()) { EXPECT_TRUE(contains(s, v)); }
  EXPECT_FALSE(contains(s, Vec2(-1, -1)));
  EXPECT_TRUE(contains(s, Vec2(10, 10)));
  EXPECT_TRUE(contains(s, Vec2(75, 10)));
}

TEST(Geometry, RejectsBadLoops)
{
  // clockwise outer loop
  EXPECT_THROW(PartSlice::from_loops({{0, 0}, {0, 10}, {10, 10}, {10, 0}}), ValidationError);
  // bow tie
  EXPECT_THROW(PartSlice::from_loops({{0, 0}, {10, 10}, {10, 0}, {0, 10}}), ValidationError);
  // counterclockwise hole
  EXPECT_THROW(PartSlice::from_loops({{0, 0}, {10, 0}, {10, 10}, {0, 10}}, {{{4, 4}, {6, 4}, {6, 6}, {4, 6}}}),
               ValidationError);
  // hole leaving the outer loop
  EXPECT_THROW(PartSlice::from_loops({{0, 0}, {10, 0}, {10, 10}, {0, 10}}, {{{8, 4}, {8, 6}, {12, 6}, {12, 4}}}),
               ValidationError);
  // too few vertices
  EXPECT_THROW(PartSlice::from_loops({{0, 0}, {10, 0}}), ValidationError);
}

TEST(Geometry, SpecimenAreaAndPerimeters)
{
  const PartSlice s = make_open_hole_specimen();
  EXPECT_EQ(s.hole_count(), 1u);
  EXPECT_NEAR(s.perimeter(0), 2 * (150 + 36), 1e-9);
  EXPECT_NEAR(s.perimeter(1), 2 * std::numbers::pi * 3.0, 0.05);
  EXPECT_NEAR(s.area(), 150 * 36 + signed_area(s.loop(1)), 1e-9);
  // the inscribed polygon misses about 2/3 * sagitta * perimeter of the disc
  EXPECT_NEAR(s.area(), 150 * 36 - std::numbers::pi * 9.0, 0.15);
  EXPECT_GT(signed_area(s.outer()), 0.0);
  EXPECT_LT(signed_area(s.loop(1)), 0.0);
}

TEST(Geometry, ProjectToBoundary)
{
  const PartSlice s = make_open_hole_specimen();
  const Vec2 on_edge(40.0, 0.0);
  const auto [c, d] = project_to_boundary(s, on_edge);
  EXPECT_EQ(c.loop_id, 0u);
  EXPECT_NEAR(d, 0.0, 1e-12);
  EXPECT_NEAR((s.to_point(c) - on_edge).norm(), 0.0, 1e-12);

  // polygon vertices lie on the circle, chords cut in by at most 0.01 mm
  const auto [hc, hd] = project_to_boundary(s, Vec2(75, 18));
  EXPECT_EQ(hc.loop_id, 1u);
  EXPECT_LE(hd, 3.0 + 1e-12);
  EXPECT_GE(hd, 3.0 - 0.0101);
}

TEST(Geometry, ProjectTieGoesToLowerLoop)
{
  const PartSlice s = square_with_square_hole();
  const auto [c, d] = project_to_boundary(s, Vec2(2, 5));
  EXPECT_EQ(c.loop_id, 0u);
  EXPECT_NEAR(d, 2.0, 1e-12);
}

TEST(Geometry, CursorAdvance)
{
  const PartSlice s = make_rectangle(2.5, 2.5);  // perimeter 10
  const BoundaryCursor c{0, 3.3};
  EXPECT_DOUBLE_EQ(cursor_advance(s, c, 0.0).arc_length, 3.3);
  EXPECT_NEAR(cursor_advance(s, c, s.perimeter(0)).arc_length, 3.3, 1e-12);
  EXPECT_NEAR(cursor_advance(s, BoundaryCursor{0, 0.1}, -0.4).arc_length, 9.7, 1e-12);
  EXPECT_NEAR(arc_distance(s, BoundaryCursor{0, 0.1}, BoundaryCursor{0, 9.7}), 0.4, 1e-12);
}

TEST(Geometry, CursorPointAndTangent)
{
  const PartSlice s = make_rectangle(4.0, 2.0);
  EXPECT_TRUE(s.to_point(BoundaryCursor{0, 1.0}).isApprox(Vec2(1, 0)));
  EXPECT_TRUE(s.to_point(BoundaryCursor{0, 5.0}).isApprox(Vec2(4, 1)));
  EXPECT_TRUE(s.tangent(BoundaryCursor{0, 5.0}).isApprox(Vec2(0, 1)));
  EXPECT_EQ(s.edge_at(BoundaryCursor{0, 5.0}), 1u);
}

TEST(Geometry, SegmentHits)
{
  const PartSlice s = make_open_hole_specimen();
  EXPECT_FALSE(segment_hits(s, Vec2(10, 10), Vec2(20, 20)).has_value());

  const auto hit = segment_hits(s, Vec2(75, 18), Vec2(75, 100));
  ASSERT_TRUE(hit.has_value());
  EXPECT_EQ(hit->loop_id, 1u);
  EXPECT_NEAR(hit->point.y(), 21.0, 0.011);

  // passes within 1e-10 of the vertex (10, 0)
  const PartSlice r = make_rectangle(10, 10);
  const auto touch  = segment_hits(r, Vec2(9, -1 - 1e-10), Vec2(11, 1 - 1e-10));
  ASSERT_TRUE(touch.has_value());
  EXPECT_NEAR((touch->point - Vec2(10, 0)).norm(), 0.0, 1e-8);
}

TEST(Geometry, PolylineDistances)
{
  const Polyline a{{0, 0}, {1, 0}, {2, 0}, {3, 0}};
  const Polyline b{{0, 0.4}, {3, 0.4}};
  for (double d : polyline_pair_min_distance(a, b)) { EXPECT_NEAR(d, 0.4, 1e-12); }
  for (double d : polyline_pair_min_distance(a, a)) { EXPECT_EQ(d, 0.0); }
  const Polyline single{{1, 2}};
  const auto one = polyline_pair_min_distance(single, a);
  ASSERT_EQ(one.size(), 1u);
  EXPECT_NEAR(one[0], 2.0, 1e-12);
  EXPECT_NEAR(point_polyline_distance(Vec2(5, 5), single), std::hypot(4.0, 3.0), 1e-12);
}

TEST(Geometry, SegmentsCross)
{
  EXPECT_TRUE(segments_cross(Vec2(0, 0), Vec2(1, 1), Vec2(0, 1), Vec2(1, 0)));
  EXPECT_FALSE(segments_cross(Vec2(0, 0), Vec2(1, 1), Vec2(1, 1), Vec2(2, 0))) << "shared endpoint";
  EXPECT_FALSE(segments_cross(Vec2(0, 0), Vec2(1, 0), Vec2(0, 0.4), Vec2(1, 0.4)));
  EXPECT_FALSE(segments_cross(Vec2(0, 0), Vec2(2, 0), Vec2(1, 0), Vec2(3, 0))) << "collinear overlap";
}

TEST(Geometry, PolygonizedCircle)
{
  const Polyline c = polygonize_circle(Vec2(1, 2), 3.0, 0.01, true);
  EXPECT_LT(signed_area(c), 0.0);
  for (const Vec2 & v : c) { EXPECT_NEAR((v - Vec2(1, 2)).norm(), 3.0, 1e-12); }
  const double chord  = (c[1] - c[0]).norm();
  const double sagitta = 3.0 - std::sqrt(9.0 - 0.25 * chord * chord);
  EXPECT_LE(sagitta, 0.01 + 1e-12);
}
