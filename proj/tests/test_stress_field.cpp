#include "swarmpath/errors.hpp"
#include "swarmpath/stress_field.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>

using namespace swarmpath;

namespace {

// Textbook polar form of the Kirsch solution, rotated into Cartesian axes.
Eigen::Matrix2d kirsch_oracle(double s, double a, const Vec2 & center, const Vec2 & p)
{
  const Vec2 d     = p - center;
  const double r   = d.norm();
  const double th  = std::atan2(d.y(), d.x());
  const double a2  = a * a / (r * r);
  const double a4  = a2 * a2;
  const double srr = 0.5 * s * (1 - a2) + 0.5 * s * (1 - 4 * a2 + 3 * a4) * std::cos(2 * th);
  const double stt = 0.5 * s * (1 + a2) - 0.5 * s * (1 + 3 * a4) * std::cos(2 * th);
  const double srt = -0.5 * s * (1 + 2 * a2 - 3 * a4) * std::sin(2 * th);
  Eigen::Matrix2d rot;
  rot << std::cos(th), -std::sin(th), std::sin(th), std::cos(th);
  Eigen::Matrix2d polar;
  polar << srr, srt, srt, stt;
  return rot * polar * rot.transpose();
}

std::filesystem::path write_temp(const std::string & name, const std::string & text)
{
  const auto path = std::filesystem::temp_directory_path() / ("swarmpath_test_" + name);
  std::ofstream(path) << text;
  return path;
}

}  // namespace

TEST(StressField, KirschMatchesPolarOracle)
{
  const Vec2 c(75, 18);
  const KirschField field(2.0, 3.0, c);
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> r(3.0, 40.0);
  std::uniform_real_distribution<double> th(-std::numbers::pi, std::numbers::pi);
  for (int i = 0; i < 500; ++i) {
    const double rr = r(rng);
    const double tt = th(rng);
    const Vec2 p    = c + rr * Vec2(std::cos(tt), std::sin(tt));
    const Eigen::Matrix2d expect = kirsch_oracle(2.0, 3.0, c, p);
    EXPECT_LT((field.tensor(p) - expect).cwiseAbs().maxCoeff(), 1e-12) << "at r=" << rr << " theta=" << tt;
  }
}

TEST(StressField, KirschFarFieldOnLoadAxis)
{
  const KirschField field(1.0, 3.0, Vec2(75, 18));
  const StressSample s = field.sample(Vec2(75 + 20 * 3.0, 18));
  EXPECT_NEAR(std::abs(s.direction.x()), 1.0, 1e-9);
  EXPECT_NEAR(s.magnitude, 1.0, 0.01);
}

TEST(StressField, KirschRimConcentration)
{
  const KirschField field(1.0, 3.0, Vec2(75, 18));
  for (const double sign : {1.0, -1.0}) {
    const StressSample s = field.sample(Vec2(75, 18 + sign * 3.0));
    EXPECT_NEAR(s.magnitude, 3.0, 3.0 * 1e-3);
    EXPECT_NEAR(std::abs(s.direction.x()), 1.0, 1e-9) << "hoop stress is tangential";
  }
  EXPECT_DOUBLE_EQ(field.max_magnitude(), 3.0);
}

TEST(StressField, KirschDomain)
{
  const KirschField field(1.0, 3.0, Vec2(0, 0));
  EXPECT_FALSE(field.in_domain(Vec2(0, 0)));
  EXPECT_FALSE(field.in_domain(Vec2(2.9, 0)));
  EXPECT_TRUE(field.in_domain(Vec2(2.97, 0)));
  EXPECT_THROW(field.principal_vector(Vec2(1, 0)), QueryOutsideDomain);
  EXPECT_THROW(KirschField(1.0, -1.0, Vec2(0, 0)), ValidationError);
}

TEST(StressField, CanonicalDirectionIsSignFree)
{
  for (const Vec2 & v : {Vec2(3, -4), Vec2(0, -2), Vec2(-1, 0), Vec2(-0.5, 0.5)}) {
    const StressSample a = canonicalize(v);
    const StressSample b = canonicalize(-v);
    EXPECT_EQ(a.direction, b.direction);
    EXPECT_EQ(a.magnitude, b.magnitude);
    EXPECT_NEAR(a.direction.norm(), 1.0, 1e-15);
  }
  const StressSample zero = canonicalize(Vec2::Zero());
  EXPECT_EQ(zero.magnitude, 0.0);
  EXPECT_EQ(zero.direction, Vec2::UnitX());
}

TEST(StressField, DominantPrincipalVector)
{
  Eigen::Matrix2d t;
  t << 1.0, 0.0, 0.0, -4.0;
  const Vec2 v = dominant_principal_vector(t);
  EXPECT_NEAR(v.norm(), 4.0, 1e-12);
  EXPECT_NEAR(std::abs(v.y()), 4.0, 1e-12);
}

TEST(StressField, VirtualMass)
{
  const UniformField field(Vec2(0, 8));
  EXPECT_DOUBLE_EQ(virtual_mass(field, StressSample{Vec2::UnitY(), 8.0}), 1.0);
  EXPECT_DOUBLE_EQ(virtual_mass(field, StressSample{Vec2::UnitY(), 0.0}), kMinVirtualMass);
  EXPECT_DOUBLE_EQ(virtual_mass(field, StressSample{Vec2::UnitY(), 4.0}), 0.5);
}

TEST(StressField, UniformGrid)
{
  std::vector<GridNode> nodes;
  for (int i = 0; i <= 4; ++i) {
    for (int j = 0; j <= 4; ++j) { nodes.push_back({Vec2(i, j), Vec2(0, (i + j) % 2 == 0 ? 5 : -5)}); }
  }
  const GridField field = GridField::from_nodes(nodes);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 4.0);
  for (int k = 0; k < 200; ++k) {
    const StressSample s = field.sample(Vec2(u(rng), u(rng)));
    EXPECT_NEAR(s.direction.y(), 1.0, 1e-12);
    EXPECT_NEAR(s.magnitude, 5.0, 1e-12);
  }
  EXPECT_FALSE(field.in_domain(Vec2(5, 5)));
  EXPECT_THROW(field.sample(Vec2(5, 5)), QueryOutsideDomain);
}

TEST(StressField, GridInterpolatesLinearField)
{
  std::vector<GridNode> nodes;
  for (int i = 0; i <= 6; ++i) {
    for (int j = 0; j <= 6; ++j) { nodes.push_back({Vec2(i, j), Vec2(1.0 + 0.5 * i, 0.0)}); }
  }
  const GridField field = GridField::from_nodes(nodes);
  EXPECT_NEAR(field.sample(Vec2(2.25, 3.7)).magnitude, 1.0 + 0.5 * 2.25, 1e-12);
  EXPECT_DOUBLE_EQ(field.max_magnitude(), 4.0);
}

TEST(StressField, LoadGridFile)
{
  const auto ok = write_temp("square.csv", "x,y,sx,sy\n0,0,2,0\n1,0,2,0\n1,1,-2,0\n0,1,2,0\n");
  const GridField field = load_grid_field(ok);
  EXPECT_EQ(field.hull().size(), 4u);
  EXPECT_NEAR(std::abs(signed_area(field.hull())), 1.0, 1e-12);
  EXPECT_DOUBLE_EQ(field.max_magnitude(), 2.0);

  const auto bad = write_temp("bad.csv", "x,y,sx,sy\n# comment\n0,0,1,0\n1,0,1,0\n1,1,1,0\n0,1,1,0\n2,2,abc,0\n");
  try {
    load_grid_field(bad);
    FAIL() << "expected ParseError";
  } catch (const ParseError & e) {
    EXPECT_NE(std::string(e.what()).find("line 7"), std::string::npos) << e.what();
  }

  const auto zero = write_temp("zero.csv", "x,y,sx,sy\n0,0,0,0\n1,0,0,0\n1,1,0,0\n");
  EXPECT_THROW(load_grid_field(zero), DegenerateField);
  EXPECT_THROW(load_grid_field("/nonexistent/field.csv"), ParseError);
}

TEST(StressField, DegenerateNodes)
{
  EXPECT_THROW(GridField::from_nodes({{Vec2(0, 0), Vec2(1, 0)}, {Vec2(1, 0), Vec2(1, 0)}}), DegenerateField);
  EXPECT_THROW(GridField::from_nodes({{Vec2(0, 0), Vec2(1, 0)}, {Vec2(1, 0), Vec2(1, 0)}, {Vec2(2, 0), Vec2(1, 0)}}),
               DegenerateField);
}

TEST(StressField, DelaunayEmptyCircumcircles)
{
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.0, 10.0);
  std::vector<Vec2> pts;
  for (int i = 0; i < 150; ++i) { pts.emplace_back(u(rng), u(rng)); }
  const auto tris = delaunay_triangulate(pts);
  double area = 0.0;
  for (const auto & t : tris) {
    const Vec2 & a = pts[static_cast<std::size_t>(t[0])];
    const Vec2 & b = pts[static_cast<std::size_t>(t[1])];
    const Vec2 & c = pts[static_cast<std::size_t>(t[2])];
    const double ar = 0.5 * cross(b - a, c - a);
    ASSERT_GT(ar, 0.0);
    area += ar;
    // circumcircle emptiness via the in-circle determinant
    for (std::size_t k = 0; k < pts.size(); ++k) {
      if (static_cast<int>(k) == t[0] || static_cast<int>(k) == t[1] || static_cast<int>(k) == t[2]) { continue; }
      Eigen::Matrix3d m;
      const Vec2 pa = a - pts[k];
      const Vec2 pb = b - pts[k];
      const Vec2 pc = c - pts[k];
      m << pa.x(), pa.y(), pa.squaredNorm(), pb.x(), pb.y(), pb.squaredNorm(), pc.x(), pc.y(), pc.squaredNorm();
      EXPECT_LE(m.determinant(), 1e-9);
    }
  }
  EXPECT_GT(area, 0.0);
}

TEST(StressField, NegatedFieldSamplesIdentically)
{
  auto base = std::make_shared<KirschField>(1.0, 3.0, Vec2(0, 0));
  const NegatedField neg(base);
  const Vec2 p(5.0, 2.0);
  EXPECT_EQ(base->sample(p).direction, neg.sample(p).direction);
  EXPECT_EQ(base->sample(p).magnitude, neg.sample(p).magnitude);
}
