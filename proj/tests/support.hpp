#pragma once

// Helpers shared by the unit tests and the acceptance runner: an independent
// QP oracle, a random block-tridiagonal problem generator and the standard
// test geometries.

#include "swarmpath/qp_solver.hpp"
#include "swarmpath/swarm.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <random>

namespace swarmpath::testing {

inline constexpr double kSpecimenLength = 150.0;
inline constexpr double kSpecimenWidth  = 36.0;
inline constexpr double kHoleRadius     = 3.0;
inline const Vec2 kHoleCenter{75.0, 18.0};
// The plain rectangle has no hole; its Kirsch centre sits 4 mm above the top edge.
inline const Vec2 kRectangleKirschCenter{75.0, 40.0};

/// Dense form of a box QP, used only by the oracle.
struct DenseQp
{
  Eigen::MatrixXd q;
  Eigen::VectorXd c;
  Eigen::VectorXd lo;
  Eigen::VectorXd hi;
  double constant = 0.0;

  explicit DenseQp(const BoxQp<double> & qp)
      : q(Eigen::MatrixXd(qp.quadratic)), c(qp.linear), lo(qp.lower), hi(qp.upper), constant(qp.constant)
  {}

  double value(const Eigen::VectorXd & x) const { return 0.5 * x.dot(q * x) + c.dot(x) + constant; }
  Eigen::VectorXd clamp(const Eigen::VectorXd & x) const { return x.cwiseMax(lo).cwiseMin(hi); }
};

/**
 * Reference minimizer that shares no code with the production solver.
 *
 * Stage one is a long accelerated projected-gradient run with fixed step 1/L
 * and adaptive restart. Stage two refines coordinate by coordinate: each
 * variable is minimized exactly on its interval with the others frozen,
 * and the sweep repeats until nothing moves. Returns the best objective seen.
 */
inline double oracle_minimum(const BoxQp<double> & problem, double tolerance, Eigen::VectorXd * argmin = nullptr)
{
  const DenseQp qp(problem);
  const Eigen::Index n = qp.c.size();
  if (n == 0) { return qp.constant; }

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(qp.q, Eigen::EigenvaluesOnly);
  const double lipschitz = std::max(eig.eigenvalues().maxCoeff(), 1e-12);
  const double step      = 1.0 / lipschitz;

  Eigen::VectorXd x = qp.clamp(Eigen::VectorXd::Zero(n));
  Eigen::VectorXd y = x;
  double t          = 1.0;
  double fx         = qp.value(x);
  for (int k = 0; k < 50000; ++k) {
    const Eigen::VectorXd next = qp.clamp(y - step * (qp.q * y + qp.c));
    const double fn            = qp.value(next);
    if (fn > fx) {
      // restart momentum
      y = x;
      t = 1.0;
      continue;
    }
    const double tn = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    y               = next + ((t - 1.0) / tn) * (next - x);
    x               = next;
    fx              = fn;
    t               = tn;
    const Eigen::VectorXd g = qp.q * x + qp.c;
    if ((qp.clamp(x - g) - x).cwiseAbs().maxCoeff() < 0.1 * tolerance) { break; }
  }

  for (int sweep = 0; sweep < 20000; ++sweep) {
    double moved = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) {
      const double gj  = qp.q.row(j).dot(x) + qp.c(j);
      const double qjj = qp.q(j, j);
      double target;
      if (qjj > 0.0) {
        target = x(j) - gj / qjj;
      } else {
        target = gj > 0.0 ? qp.lo(j) : (gj < 0.0 ? qp.hi(j) : x(j));
      }
      target = std::clamp(target, qp.lo(j), qp.hi(j));
      moved  = std::max(moved, std::abs(target - x(j)));
      x(j)   = target;
    }
    if (moved < 1e-14) { break; }
  }
  fx = std::min(fx, qp.value(x));
  if (argmin != nullptr) { *argmin = x; }
  return fx;
}

/// Random block-tridiagonal PSD box QP of dimension 2..max_dim, built from
/// blocks of size 1 or 2 coupled like consecutive swarm agents. Blocks
/// without a diagonal term leave some problems only semidefinite.
inline BoxQp<double> random_block_tridiagonal_qp(std::mt19937_64 & rng, int max_dim)
{
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  std::uniform_real_distribution<double> pos(0.0, 1.0);
  std::uniform_int_distribution<int> size_pick(1, 2);

  std::vector<int> sizes;
  int dim = 0;
  const int target_dim = std::uniform_int_distribution<int>(2, max_dim)(rng);
  while (dim < target_dim) {
    const int s = std::min(size_pick(rng), target_dim - dim);
    sizes.push_back(s);
    dim += s;
  }
  std::vector<int> offset(sizes.size(), 0);
  for (std::size_t b = 1; b < sizes.size(); ++b) { offset[b] = offset[b - 1] + sizes[b - 1]; }

  Eigen::MatrixXd q = Eigen::MatrixXd::Zero(dim, dim);
  Eigen::VectorXd c = Eigen::VectorXd::Zero(dim);
  for (std::size_t b = 0; b < sizes.size(); ++b) {
    // Diagonal block: sum of rank-one terms, sometimes absent.
    if (pos(rng) < 0.8) {
      const double w = std::pow(10.0, 2.0 * pos(rng) - 1.0);
      for (int a = 0; a < sizes[b]; ++a) { q(offset[b] + a, offset[b] + a) += w; }
    }
    if (b + 1 < sizes.size()) {
      for (int term = 0; term < 2; ++term) {
        Eigen::VectorXd g = Eigen::VectorXd::Zero(dim);
        for (int a = 0; a < sizes[b]; ++a) { g(offset[b] + a) = unit(rng); }
        for (int a = 0; a < sizes[b + 1]; ++a) { g(offset[b + 1] + a) = unit(rng); }
        q += 2.0 * g * g.transpose();
        c += 2.0 * unit(rng) * g;
      }
    }
  }
  for (int j = 0; j < dim; ++j) { c(j) += 0.5 * unit(rng); }

  BoxQp<double> qp;
  qp.quadratic = q.sparseView();
  qp.linear    = c;
  qp.lower.resize(dim);
  qp.upper.resize(dim);
  for (int j = 0; j < dim; ++j) {
    const double a = unit(rng);
    const double w = 0.05 + pos(rng);
    qp.lower(j)    = a - w;
    qp.upper(j)    = a + w;
  }
  qp.constant = pos(rng);
  return qp;
}

/// Dense random PSD problem A'A of fixed dimension with a random box.
inline BoxQp<double> random_dense_qp(std::mt19937_64 & rng, int dim)
{
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  Eigen::MatrixXd a(dim, dim);
  for (int i = 0; i < dim; ++i) {
    for (int j = 0; j < dim; ++j) { a(i, j) = unit(rng); }
  }
  BoxQp<double> qp;
  Eigen::MatrixXd q = a.transpose() * a;
  qp.quadratic      = q.sparseView();
  qp.linear.resize(dim);
  qp.lower.resize(dim);
  qp.upper.resize(dim);
  for (int j = 0; j < dim; ++j) {
    qp.linear(j)   = 2.0 * unit(rng);
    const double m = unit(rng);
    const double w = 0.1 + std::abs(unit(rng));
    qp.lower(j)    = m - w;
    qp.upper(j)    = m + w;
  }
  return qp;
}

}  // namespace swarmpath::testing
