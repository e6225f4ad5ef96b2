#include "swarmpath/stress_field.hpp"

#include "swarmpath/errors.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>

namespace swarmpath {

StressSample canonicalize(const Vec2 & raw)
{
  const double magnitude = std::hypot(raw.x(), raw.y());
  if (magnitude == 0.0) { return {Vec2::UnitX(), 0.0}; }
  Vec2 dir = raw / magnitude;
  if (dir.x() < 0.0 || (dir.x() == 0.0 && dir.y() < 0.0)) { dir = -dir; }
  // -0.0 would break bitwise comparisons between mirrored inputs.
  if (dir.x() == 0.0) { dir.x() = 0.0; }
  if (dir.y() == 0.0) { dir.y() = 0.0; }
  return {dir, magnitude};
}

namespace {

Vec2 eigenvector_for(const Eigen::Matrix2d & t, double lambda)
{
  const Vec2 v1(t(0, 1), lambda - t(0, 0));
  const Vec2 v2(lambda - t(1, 1), t(1, 0));
  const Vec2 & v = v1.squaredNorm() >= v2.squaredNorm() ? v1 : v2;
  const double n = v.norm();
  return n == 0.0 ? Vec2::UnitX() : Vec2(v / n);
}

bool canonical_before(const Vec2 & a, const Vec2 & b)
{
  const Vec2 ca = canonicalize(a).direction;
  const Vec2 cb = canonicalize(b).direction;
  return ca.x() > cb.x() || (ca.x() == cb.x() && ca.y() > cb.y());
}

}  // namespace

Vec2 dominant_principal_vector(const Eigen::Matrix2d & t)
{
  const double mean   = 0.5 * (t(0, 0) + t(1, 1));
  const double diff   = 0.5 * (t(0, 0) - t(1, 1));
  const double radius = std::hypot(diff, t(0, 1));
  if (radius == 0.0) { return std::abs(mean) * Vec2::UnitX(); }

  if (mean > 0.0) { return (mean + radius) * eigenvector_for(t, mean + radius); }
  if (mean < 0.0) { return -(mean - radius) * eigenvector_for(t, mean - radius); }

  // Pure shear: both eigenvalues have magnitude `radius`; pick a direction
  // that does not depend on the tensor's sign.
  const Vec2 up   = eigenvector_for(t, radius);
  const Vec2 down = eigenvector_for(t, -radius);
  return radius * (canonical_before(up, down) ? up : down);
}

double virtual_mass(const StressField & field, const StressSample & s)
{
  return std::clamp(s.magnitude / field.max_magnitude(), kMinVirtualMass, 1.0);
}

// UniformField ---------------------------------------------------------------

UniformField::UniformField(const Vec2 & s) : s_(s)
{
  if (!(s.norm() > 0.0) || !s.allFinite()) {
    throw DegenerateField("stress_field::UniformField", "constant field must have a nonzero finite vector");
  }
}

// KirschField ----------------------------------------------------------------

KirschField::KirschField(double far_stress, double hole_radius, const Vec2 & hole_center, double rim_tolerance)
    : far_stress_(far_stress), radius_(hole_radius), center_(hole_center), rim_tolerance_(rim_tolerance)
{
  if (!(far_stress > 0.0)) { throw ValidationError("stress_field::KirschField", "far-field stress must be > 0"); }
  if (!(hole_radius > 0.0)) { throw ValidationError("stress_field::KirschField", "hole radius must be > 0"); }
  if (!(rim_tolerance >= 0.0) || rim_tolerance >= hole_radius) {
    throw ValidationError("stress_field::KirschField", "rim tolerance must lie in [0, hole radius)");
  }
}

bool KirschField::in_domain(const Vec2 & p) const
{
  return p.allFinite() && (p - center_).norm() >= radius_ - rim_tolerance_;
}

Eigen::Matrix2d KirschField::tensor(const Vec2 & p) const
{
  if (!in_domain(p)) { throw QueryOutsideDomain("stress_field::sample", "point lies inside the Kirsch hole"); }
  const Vec2 d   = p - center_;
  const double r = std::max(d.norm(), radius_);
  const double theta = std::atan2(d.y(), d.x());

  const double a2 = (radius_ * radius_) / (r * r);
  const double a4 = a2 * a2;
  const double c2 = std::cos(2.0 * theta);
  const double s2 = std::sin(2.0 * theta);
  const double h  = 0.5 * far_stress_;

  const double srr = h * (1.0 - a2) + h * (1.0 - 4.0 * a2 + 3.0 * a4) * c2;
  const double stt = h * (1.0 + a2) - h * (1.0 + 3.0 * a4) * c2;
  const double srt = -h * (1.0 + 2.0 * a2 - 3.0 * a4) * s2;

  const double c = std::cos(theta);
  const double s = std::sin(theta);
  Eigen::Matrix2d out;
  out(0, 0) = srr * c * c + stt * s * s - 2.0 * srt * s * c;
  out(1, 1) = srr * s * s + stt * c * c + 2.0 * srt * s * c;
  out(0, 1) = out(1, 0) = (srr - stt) * s * c + srt * (c * c - s * s);
  return out;
}

Vec2 KirschField::principal_vector(const Vec2 & p) const { return dominant_principal_vector(tensor(p)); }

// GridField ------------------------------------------------------------------

namespace {

Polyline convex_hull(std::vector<Vec2> pts)
{
  std::sort(pts.begin(), pts.end(), [](const Vec2 & a, const Vec2 & b) {
    return a.x() < b.x() || (a.x() == b.x() && a.y() < b.y());
  });
  Polyline hull(2 * pts.size());
  std::size_t k = 0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    while (k >= 2 && cross(hull[k - 1] - hull[k - 2], pts[i] - hull[k - 2]) <= 0) { --k; }
    hull[k++] = pts[i];
  }
  for (std::size_t i = pts.size() - 1, t = k + 1; i > 0; --i) {
    while (k >= t && cross(hull[k - 1] - hull[k - 2], pts[i - 1] - hull[k - 2]) <= 0) { --k; }
    hull[k++] = pts[i - 1];
  }
  hull.resize(k - 1);
  return hull;
}

}  // namespace

GridField GridField::from_nodes(std::vector<GridNode> nodes)
{
  const std::string where = "stress_field::load_grid_field";
  if (nodes.size() < 3) { throw DegenerateField(where, "need at least 3 nodes"); }

  std::vector<Vec2> pts;
  pts.reserve(nodes.size());
  double max_mag = 0.0;
  for (const auto & n : nodes) {
    if (!n.position.allFinite() || !n.stress.allFinite()) { throw DegenerateField(where, "non-finite node value"); }
    pts.push_back(n.position);
    max_mag = std::max(max_mag, n.stress.norm());
  }
  if (!(max_mag > 0.0)) { throw DegenerateField(where, "all node stress vectors are zero"); }

  std::vector<std::size_t> order(pts.size());
  for (std::size_t i = 0; i < order.size(); ++i) { order[i] = i; }
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return pts[a].x() < pts[b].x() || (pts[a].x() == pts[b].x() && pts[a].y() < pts[b].y());
  });
  for (std::size_t i = 1; i < order.size(); ++i) {
    if (pts[order[i]] == pts[order[i - 1]]) {
      throw DegenerateField(where, "duplicate node at row " + std::to_string(order[i] + 1));
    }
  }

  GridField field;
  field.hull_ = convex_hull(pts);
  if (field.hull_.size() < 3 || std::abs(signed_area(field.hull_)) <= 1e-12 * field.hull_.size()) {
    throw DegenerateField(where, "nodes are collinear");
  }
  field.triangles_     = delaunay_triangulate(pts);
  field.nodes_         = std::move(nodes);
  field.max_magnitude_ = max_mag;
  if (field.triangles_.empty()) { throw DegenerateField(where, "triangulation is empty"); }

  for (const auto & p : pts) { field.bounds_.extend(p); }
  const auto side  = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(field.triangles_.size()))));
  field.cells_x_   = std::max(1, side);
  field.cells_y_   = std::max(1, side);
  field.buckets_.assign(static_cast<std::size_t>(field.cells_x_ * field.cells_y_), {});
  const Vec2 extent = field.bounds_.sizes().cwiseMax(1e-300);
  auto cell_of      = [&](const Vec2 & p, int & cx, int & cy) {
    cx = std::clamp(static_cast<int>((p.x() - field.bounds_.min().x()) / extent.x() * field.cells_x_), 0, field.cells_x_ - 1);
    cy = std::clamp(static_cast<int>((p.y() - field.bounds_.min().y()) / extent.y() * field.cells_y_), 0, field.cells_y_ - 1);
  };
  for (std::size_t t = 0; t < field.triangles_.size(); ++t) {
    Box2 box;
    for (int v : field.triangles_[t]) { box.extend(field.nodes_[static_cast<std::size_t>(v)].position); }
    int x0, y0, x1, y1;
    cell_of(box.min(), x0, y0);
    cell_of(box.max(), x1, y1);
    for (int cy = y0; cy <= y1; ++cy) {
      for (int cx = x0; cx <= x1; ++cx) {
        field.buckets_[static_cast<std::size_t>(cy * field.cells_x_ + cx)].push_back(static_cast<int>(t));
      }
    }
  }
  return field;
}

GridField::Location GridField::locate(const Vec2 & p) const
{
  constexpr double kTol = 1e-9;
  Location loc;
  if (!p.allFinite() || bounds_.exteriorDistance(p) > kBoundaryTolerance) { return loc; }
  const Vec2 extent = bounds_.sizes().cwiseMax(1e-300);
  const int cx = std::clamp(static_cast<int>((p.x() - bounds_.min().x()) / extent.x() * cells_x_), 0, cells_x_ - 1);
  const int cy = std::clamp(static_cast<int>((p.y() - bounds_.min().y()) / extent.y() * cells_y_), 0, cells_y_ - 1);
  for (int t : buckets_[static_cast<std::size_t>(cy * cells_x_ + cx)]) {
    const auto & tri = triangles_[static_cast<std::size_t>(t)];
    const Vec2 & a   = nodes_[static_cast<std::size_t>(tri[0])].position;
    const Vec2 & b   = nodes_[static_cast<std::size_t>(tri[1])].position;
    const Vec2 & c   = nodes_[static_cast<std::size_t>(tri[2])].position;
    const double area = cross(b - a, c - a);
    Eigen::Vector3d bc(cross(b - p, c - p) / area, cross(c - p, a - p) / area, 0.0);
    bc(2) = 1.0 - bc(0) - bc(1);
    if (bc.minCoeff() >= -kTol) {
      bc = bc.cwiseMax(0.0);
      loc.triangle    = t;
      loc.barycentric = bc / bc.sum();
      return loc;
    }
  }
  return loc;
}

bool GridField::in_domain(const Vec2 & p) const { return locate(p).triangle >= 0; }

Vec2 GridField::principal_vector(const Vec2 & p) const
{
  const Location loc = locate(p);
  if (loc.triangle < 0) { throw QueryOutsideDomain("stress_field::sample", "point lies outside the node hull"); }
  const auto & tri = triangles_[static_cast<std::size_t>(loc.triangle)];

  std::array<Vec2, 3> v;
  for (int j = 0; j < 3; ++j) { v[static_cast<std::size_t>(j)] = nodes_[static_cast<std::size_t>(tri[static_cast<std::size_t>(j)])].stress; }
  const Vec2 * reference = nullptr;
  for (const auto & vj : v) {
    if (vj.squaredNorm() > 0.0) {
      reference = &vj;
      break;
    }
  }
  if (reference == nullptr) { return Vec2::Zero(); }
  const Vec2 ref = *reference;

  Vec2 blended     = Vec2::Zero();
  double magnitude = 0.0;
  std::size_t heaviest = 0;
  for (std::size_t j = 0; j < 3; ++j) {
    const Vec2 vj = v[j].dot(ref) < 0.0 ? Vec2(-v[j]) : v[j];
    blended += loc.barycentric(static_cast<Eigen::Index>(j)) * vj;
    magnitude += loc.barycentric(static_cast<Eigen::Index>(j)) * v[j].norm();
    if (loc.barycentric(static_cast<Eigen::Index>(j)) > loc.barycentric(static_cast<Eigen::Index>(heaviest))) { heaviest = j; }
  }
  const double n = blended.norm();
  if (n == 0.0) {
    const Vec2 & fallback = v[heaviest];
    return fallback.norm() == 0.0 ? Vec2::Zero() : Vec2(fallback.normalized() * magnitude);
  }
  return blended / n * magnitude;
}

namespace {

std::string_view trim(std::string_view s)
{
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) { s.remove_prefix(1); }
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) { s.remove_suffix(1); }
  return s;
}

}  // namespace

GridField load_grid_field(const std::filesystem::path & path)
{
  const std::string where = "stress_field::load_grid_field";
  std::ifstream in(path);
  if (!in) { throw ParseError(where, "cannot open " + path.string()); }

  std::vector<GridNode> nodes;
  std::string line;
  std::size_t line_no = 0;
  bool header_seen    = false;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view body = trim(line);
    if (body.empty() || body.front() == '#') { continue; }

    std::array<std::string_view, 4> fields;
    std::size_t count = 0;
    std::size_t start = 0;
    while (true) {
      const std::size_t comma = body.find(',', start);
      const std::string_view token = trim(body.substr(start, comma == std::string_view::npos ? body.npos : comma - start));
      if (count < fields.size()) { fields[count] = token; }
      ++count;
      if (comma == std::string_view::npos) { break; }
      start = comma + 1;
    }
    if (count != 4) {
      throw ParseError(where, "line " + std::to_string(line_no) + ": expected 4 fields, got " + std::to_string(count));
    }
    if (!header_seen) {
      if (fields[0] != "x" || fields[1] != "y" || fields[2] != "sx" || fields[3] != "sy") {
        throw ParseError(where, "line " + std::to_string(line_no) + ": expected header x,y,sx,sy");
      }
      header_seen = true;
      continue;
    }
    std::array<double, 4> values{};
    for (std::size_t i = 0; i < 4; ++i) {
      const auto token = fields[i];
      const auto res   = std::from_chars(token.data(), token.data() + token.size(), values[i]);
      if (res.ec != std::errc() || res.ptr != token.data() + token.size() || token.empty()) {
        throw ParseError(
          where, "line " + std::to_string(line_no) + ": non-numeric token '" + std::string(token) + "'");
      }
    }
    nodes.push_back({Vec2(values[0], values[1]), Vec2(values[2], values[3])});
  }
  if (!header_seen) { throw ParseError(where, "missing header x,y,sx,sy"); }
  return GridField::from_nodes(std::move(nodes));
}

}  // namespace swarmpath
