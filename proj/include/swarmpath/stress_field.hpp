#pragma once

#include "swarmpath/geometry.hpp"

#include <Eigen/Core>

#include <array>
#include <filesystem>
#include <memory>
#include <vector>

namespace swarmpath {

/// Local principal stress: a canonical unit direction (first nonzero
/// component >= 0) and a nonnegative magnitude |sigma_1|.
struct StressSample
{
  Vec2 direction = Vec2::UnitX();
  double magnitude = 0.0;
};

/// Lower clamp on virtual mass so no agent is ever fully free.
inline constexpr double kMinVirtualMass = 1e-6;

/// Normalizes a raw principal vector. A zero vector yields magnitude 0 and
/// direction +x.
StressSample canonicalize(const Vec2 & raw);

/// Dominant principal stress of a symmetric 2x2 tensor as a raw vector
/// sigma_1 * e_1 (orientation unspecified). The eigenpair with the larger
/// |eigenvalue| wins.
Vec2 dominant_principal_vector(const Eigen::Matrix2d & tensor);

/**
 * @brief Source of the local principal stress vector s = sigma_1 e_1.
 *
 * Implementations return the raw vector; sample() canonicalizes it so that
 * every consumer sees direction, not orientation. Fields are immutable and
 * safe to share across threads.
 */
class StressField
{
public:
  virtual ~StressField() = default;

  /// Raw principal vector at p. Throws QueryOutsideDomain outside the domain.
  virtual Vec2 principal_vector(const Vec2 & p) const = 0;
  virtual bool in_domain(const Vec2 & p) const = 0;
  /// Largest |sigma_1| over the field, strictly positive.
  virtual double max_magnitude() const = 0;

  StressSample sample(const Vec2 & p) const { return canonicalize(principal_vector(p)); }
};

inline StressSample sample(const StressField & field, const Vec2 & p) { return field.sample(p); }

/// magnitude / max_magnitude, clamped to [kMinVirtualMass, 1].
double virtual_mass(const StressField & field, const StressSample & s);

/// Constant field, valid everywhere.
class UniformField final : public StressField
{
public:
  explicit UniformField(const Vec2 & s);

  Vec2 principal_vector(const Vec2 &) const override { return s_; }
  bool in_domain(const Vec2 &) const override { return true; }
  double max_magnitude() const override { return s_.norm(); }

private:
  Vec2 s_;
};

/**
 * @brief Plane-stress Kirsch solution for an infinite plate with a circular
 * hole under uniaxial tension along +x.
 *
 * Queries closer to the center than `hole_radius - rim_tolerance` are invalid;
 * inside the rim band the radius is clamped to the hole radius so that
 * polygonized rims (whose chords cut slightly into the circle) stay sampleable.
 */
class KirschField final : public StressField
{
public:
  KirschField(double far_stress, double hole_radius, const Vec2 & hole_center, double rim_tolerance = 0.05);

  /// Cartesian Cauchy stress [sxx sxy; sxy syy] at p.
  Eigen::Matrix2d tensor(const Vec2 & p) const;

  Vec2 principal_vector(const Vec2 & p) const override;
  bool in_domain(const Vec2 & p) const override;
  double max_magnitude() const override { return 3.0 * far_stress_; }

  double far_stress() const { return far_stress_; }
  double hole_radius() const { return radius_; }
  const Vec2 & hole_center() const { return center_; }

private:
  double far_stress_;
  double radius_;
  Vec2 center_;
  double rim_tolerance_;
};

/// A node of a scattered FEA export.
struct GridNode
{
  Vec2 position;
  Vec2 stress;  ///< raw s = sigma_1 e_1, any orientation
};

/**
 * @brief Scattered principal-stress samples, Delaunay-triangulated and
 * linearly interpolated.
 *
 * Within each triangle the vertex vectors are flipped into the half-plane of
 * the first vertex before blending, which keeps the 180-degree ambiguity from
 * cancelling vectors out. Direction comes from the blended vector, magnitude
 * from the blended node magnitudes.
 */
class GridField final : public StressField
{
public:
  /// Throws DegenerateField for fewer than 3 nodes, collinear or duplicate
  /// nodes, or all-zero vectors.
  static GridField from_nodes(std::vector<GridNode> nodes);

  Vec2 principal_vector(const Vec2 & p) const override;
  bool in_domain(const Vec2 & p) const override;
  double max_magnitude() const override { return max_magnitude_; }

  const std::vector<GridNode> & nodes() const { return nodes_; }
  const std::vector<std::array<int, 3>> & triangles() const { return triangles_; }
  /// Convex hull of the nodes, counterclockwise.
  const Polyline & hull() const { return hull_; }

private:
  GridField() = default;

  struct Location
  {
    int triangle = -1;
    Eigen::Vector3d barycentric;
  };
  Location locate(const Vec2 & p) const;

  std::vector<GridNode> nodes_;
  std::vector<std::array<int, 3>> triangles_;
  Polyline hull_;
  double max_magnitude_ = 0.0;

  // Uniform bucket grid over the node bounding box for point location.
  Box2 bounds_;
  int cells_x_ = 1;
  int cells_y_ = 1;
  std::vector<std::vector<int>> buckets_;
};

/// Reads a CSV export with header `x,y,sx,sy`; `#` starts a comment line.
/// Throws ParseError (with line number) or DegenerateField.
GridField load_grid_field(const std::filesystem::path & path);

/// Delaunay triangulation (Bowyer-Watson) of distinct, not all collinear
/// points. Triangles are counterclockwise index triples.
std::vector<std::array<int, 3>> delaunay_triangulate(const std::vector<Vec2> & points);

/// The input field with every principal vector negated.
class NegatedField final : public StressField
{
public:
  explicit NegatedField(std::shared_ptr<const StressField> inner) : inner_(std::move(inner)) {}

  Vec2 principal_vector(const Vec2 & p) const override { return -inner_->principal_vector(p); }
  bool in_domain(const Vec2 & p) const override { return inner_->in_domain(p); }
  double max_magnitude() const override { return inner_->max_magnitude(); }

private:
  std::shared_ptr<const StressField> inner_;
};

}  // namespace swarmpath
