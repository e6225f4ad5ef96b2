#include "swarmpath/stress_field.hpp"

#include <algorithm>
#include <map>
#include <utility>

namespace swarmpath {

namespace {

struct Triangle
{
  std::array<int, 3> v;
  Vec2 center;
  double radius2;
  bool alive = true;
};

Triangle make_triangle(const std::vector<Vec2> & pts, int a, int b, int c)
{
  // Enforce counterclockwise order.
  if (cross(pts[static_cast<std::size_t>(b)] - pts[static_cast<std::size_t>(a)],
            pts[static_cast<std::size_t>(c)] - pts[static_cast<std::size_t>(a)])
      < 0.0) {
    std::swap(b, c);
  }
  const Vec2 & pa = pts[static_cast<std::size_t>(a)];
  const Vec2 ab   = pts[static_cast<std::size_t>(b)] - pa;
  const Vec2 ac   = pts[static_cast<std::size_t>(c)] - pa;
  const double d  = 2.0 * cross(ab, ac);
  const Vec2 off(
    (ac.y() * ab.squaredNorm() - ab.y() * ac.squaredNorm()) / d,
    (ab.x() * ac.squaredNorm() - ac.x() * ab.squaredNorm()) / d);
  return {{a, b, c}, pa + off, off.squaredNorm(), true};
}

}  // namespace

std::vector<std::array<int, 3>> delaunay_triangulate(const std::vector<Vec2> & input)
{
  const int n = static_cast<int>(input.size());
  std::vector<Vec2> pts = input;

  Box2 box;
  for (const auto & p : pts) { box.extend(p); }
  const double span = std::max(box.sizes().maxCoeff(), 1e-12);
  const Vec2 mid    = box.center();
  pts.emplace_back(mid.x() - 1e3 * span, mid.y() - 1e3 * span);
  pts.emplace_back(mid.x() + 1e3 * span, mid.y() - 1e3 * span);
  pts.emplace_back(mid.x(), mid.y() + 1e3 * span);

  std::vector<Triangle> tris;
  tris.push_back(make_triangle(pts, n, n + 1, n + 2));

  // Insert in lexicographic order; keeps cavities small and output deterministic.
  std::vector<int> order(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) { order[static_cast<std::size_t>(i)] = i; }
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    const Vec2 & pa = pts[static_cast<std::size_t>(a)];
    const Vec2 & pb = pts[static_cast<std::size_t>(b)];
    return pa.x() < pb.x() || (pa.x() == pb.x() && pa.y() < pb.y());
  });

  std::map<std::pair<int, int>, int> edge_count;
  std::vector<std::pair<int, int>> cavity_edges;
  for (int idx : order) {
    const Vec2 & p = pts[static_cast<std::size_t>(idx)];
    edge_count.clear();
    cavity_edges.clear();
    for (auto & t : tris) {
      if (!t.alive) { continue; }
      if ((p - t.center).squaredNorm() < t.radius2 * (1.0 - 1e-12)) {
        t.alive = false;
        for (int e = 0; e < 3; ++e) {
          const int a = t.v[static_cast<std::size_t>(e)];
          const int b = t.v[static_cast<std::size_t>((e + 1) % 3)];
          cavity_edges.emplace_back(a, b);
          ++edge_count[{std::min(a, b), std::max(a, b)}];
        }
      }
    }
    for (const auto & [a, b] : cavity_edges) {
      if (edge_count[{std::min(a, b), std::max(a, b)}] == 1) { tris.push_back(make_triangle(pts, a, b, idx)); }
    }
    if (tris.size() > 4 * static_cast<std::size_t>(n) + 64) {
      std::erase_if(tris, [](const Triangle & t) { return !t.alive; });
    }
  }

  std::vector<std::array<int, 3>> out;
  for (const auto & t : tris) {
    if (!t.alive) { continue; }
    if (t.v[0] >= n || t.v[1] >= n || t.v[2] >= n) { continue; }
    const double area = cross(
      pts[static_cast<std::size_t>(t.v[1])] - pts[static_cast<std::size_t>(t.v[0])],
      pts[static_cast<std::size_t>(t.v[2])] - pts[static_cast<std::size_t>(t.v[0])]);
    if (area <= 0.0) { continue; }
    out.push_back(t.v);
  }
  return out;
}

}  // namespace swarmpath
