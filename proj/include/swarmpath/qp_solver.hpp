#pragma once

#include "swarmpath/errors.hpp"

#include <Eigen/Core>
#include <Eigen/Eigenvalues>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

namespace swarmpath {

template<typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

/**
 * @brief Convex quadratic program with finite per-variable bounds:
 *
 *   minimize  1/2 x' Q x + c' x + constant   s.t.  lower <= x <= upper
 *
 * `quadratic` holds the full symmetric matrix (both triangles).
 */
template<typename Scalar>
struct BoxQp
{
  Eigen::SparseMatrix<Scalar> quadratic;
  VectorX<Scalar> linear;
  VectorX<Scalar> lower;
  VectorX<Scalar> upper;
  Scalar constant = Scalar(0);

  Eigen::Index dim() const { return linear.size(); }
};

enum class QpStatus { Optimal, MaxIter };

template<typename Scalar>
struct QpSolution
{
  VectorX<Scalar> x;
  Scalar objective     = Scalar(0);
  QpStatus status      = QpStatus::MaxIter;
  Scalar kkt_residual  = Scalar(0);
  int iterations       = 0;
};

struct QpSettings
{
  /// absolute bound on the projected-gradient residual
  double tolerance = 1e-8;
  /// outer iterations before giving up
  int max_iter = 10000;
  /// check symmetry and positive semidefiniteness before solving
#ifdef NDEBUG
  bool validate = false;
#else
  bool validate = true;
#endif
};

/// Raised when the solver runs out of iterations; carries the best iterate.
class SolverFailure : public Error
{
public:
  SolverFailure(const std::string & what, QpSolution<double> best)
      : Error("qp_solver::solve", what), best_(std::move(best))
  {}

  const QpSolution<double> & best() const { return best_; }

private:
  QpSolution<double> best_;
};

template<typename Scalar>
Scalar objective(const BoxQp<Scalar> & qp, const VectorX<Scalar> & x)
{
  return Scalar(0.5) * x.dot(qp.quadratic * x) + qp.linear.dot(x) + qp.constant;
}

template<typename Scalar>
VectorX<Scalar> gradient(const BoxQp<Scalar> & qp, const VectorX<Scalar> & x)
{
  return qp.quadratic * x + qp.linear;
}

template<typename Scalar>
VectorX<Scalar> project(const BoxQp<Scalar> & qp, const VectorX<Scalar> & x)
{
  return x.cwiseMax(qp.lower).cwiseMin(qp.upper);
}

/// max_j |clamp(x_j - g_j) - x_j|
template<typename Scalar>
Scalar kkt_residual(const BoxQp<Scalar> & qp, const VectorX<Scalar> & x, const VectorX<Scalar> & g)
{
  if (x.size() == 0) { return Scalar(0); }
  return (project(qp, VectorX<Scalar>(x - g)) - x).cwiseAbs().maxCoeff();
}

/// Throws ValidationError unless the problem is well formed: matching sizes,
/// finite ordered bounds, symmetric PSD quadratic.
template<typename Scalar>
void validate(const BoxQp<Scalar> & qp)
{
  const std::string where = "qp_solver::solve";
  const Eigen::Index n    = qp.dim();
  if (qp.quadratic.rows() != n || qp.quadratic.cols() != n || qp.lower.size() != n || qp.upper.size() != n) {
    throw ValidationError(where, "dimension mismatch");
  }
  if (!qp.lower.allFinite() || !qp.upper.allFinite()) { throw ValidationError(where, "bounds must be finite"); }
  if ((qp.lower.array() > qp.upper.array()).any()) { throw ValidationError(where, "lower bound exceeds upper bound"); }
  if (n == 0) { return; }
  using Dense = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  const Dense q(qp.quadratic);
  const Scalar scale = std::max(Scalar(1), q.cwiseAbs().maxCoeff());
  if ((q - q.transpose()).cwiseAbs().maxCoeff() > Scalar(1e-12) * scale) {
    throw ValidationError(where, "quadratic term is not symmetric");
  }
  Eigen::SelfAdjointEigenSolver<Dense> eig(Dense(Scalar(0.5) * (q + q.transpose())), Eigen::EigenvaluesOnly);
  if (eig.eigenvalues().minCoeff() < Scalar(-1e-10) * scale) {
    throw ValidationError(where, "quadratic term is not positive semidefinite");
  }
}

namespace detail {

/// Newton direction on the free face: solves Q_FF d_F = -g_F, zero elsewhere.
template<typename Scalar>
std::optional<VectorX<Scalar>> face_newton_direction(
  const BoxQp<Scalar> & qp, const VectorX<Scalar> & x, const VectorX<Scalar> & g)
{
  const Eigen::Index n = qp.dim();
  std::vector<int> map(static_cast<std::size_t>(n), -1);
  std::vector<Eigen::Index> free;
  for (Eigen::Index j = 0; j < n; ++j) {
    if (x(j) > qp.lower(j) && x(j) < qp.upper(j)) {
      map[static_cast<std::size_t>(j)] = static_cast<int>(free.size());
      free.push_back(j);
    }
  }
  if (free.empty()) { return std::nullopt; }

  const auto m = static_cast<Eigen::Index>(free.size());
  std::vector<Eigen::Triplet<Scalar>> triplets;
  triplets.reserve(static_cast<std::size_t>(qp.quadratic.nonZeros()));
  Scalar diag_scale = Scalar(0);
  for (Eigen::Index fj = 0; fj < m; ++fj) {
    const Eigen::Index j = free[static_cast<std::size_t>(fj)];
    for (typename Eigen::SparseMatrix<Scalar>::InnerIterator it(qp.quadratic, j); it; ++it) {
      const int fi = map[static_cast<std::size_t>(it.row())];
      if (fi >= 0) {
        triplets.emplace_back(fi, static_cast<int>(fj), it.value());
        if (fi == fj) { diag_scale = std::max(diag_scale, std::abs(it.value())); }
      }
    }
  }
  const Scalar reg = Scalar(1e-12) * (Scalar(1) + diag_scale);
  for (Eigen::Index i = 0; i < m; ++i) { triplets.emplace_back(static_cast<int>(i), static_cast<int>(i), reg); }
  Eigen::SparseMatrix<Scalar> reduced(m, m);
  reduced.setFromTriplets(triplets.begin(), triplets.end());

  VectorX<Scalar> rhs(m);
  for (Eigen::Index i = 0; i < m; ++i) { rhs(i) = -g(free[static_cast<std::size_t>(i)]); }

  // The swarm problems are banded, so natural ordering keeps fill-in minimal.
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<Scalar>, Eigen::Lower, Eigen::NaturalOrdering<int>> ldlt(reduced);
  if (ldlt.info() != Eigen::Success) { return std::nullopt; }
  const VectorX<Scalar> step = ldlt.solve(rhs);
  if (ldlt.info() != Eigen::Success || !step.allFinite()) { return std::nullopt; }

  VectorX<Scalar> d = VectorX<Scalar>::Zero(n);
  for (Eigen::Index i = 0; i < m; ++i) { d(free[static_cast<std::size_t>(i)]) = step(i); }
  return d;
}

}  // namespace detail

/**
 * @brief Solves a convex box-constrained QP to a projected-gradient KKT
 * residual below `settings.tolerance`.
 *
 * Each outer iteration takes one projected-gradient step (exact line search
 * along the steepest-descent ray, then backtracking on the projection arc)
 * followed by a Newton step on the face of free variables, solved with a
 * sparse LDL' factorization in natural ordering. Once the active set
 * settles the Newton step lands on the optimum. Everything is deterministic.
 *
 * Throws SolverFailure (carrying the best iterate) when max_iter is reached.
 */
template<typename Scalar>
QpSolution<Scalar> solve(
  const BoxQp<Scalar> & qp, const QpSettings & settings = {}, const VectorX<Scalar> * warm_start = nullptr)
{
  if (settings.validate) { validate(qp); }
  const Scalar tol   = static_cast<Scalar>(settings.tolerance);
  const Scalar armijo = Scalar(1e-4);

  QpSolution<Scalar> sol;
  VectorX<Scalar> x = warm_start != nullptr && warm_start->size() == qp.dim()
                      ? project(qp, *warm_start)
                      : project(qp, VectorX<Scalar>(VectorX<Scalar>::Zero(qp.dim())));
  VectorX<Scalar> g = gradient(qp, x);
  Scalar f          = objective(qp, x);

  auto accept_slack = [](Scalar value) { return Scalar(1e-14) * (Scalar(1) + std::abs(value)); };

  for (int iter = 0;; ++iter) {
    sol.kkt_residual = kkt_residual(qp, x, g);
    sol.iterations   = iter;
    if (sol.kkt_residual <= tol) {
      sol.status = QpStatus::Optimal;
      break;
    }
    if (iter >= settings.max_iter) {
      sol.status = QpStatus::MaxIter;
      break;
    }

    // Projected gradient step. Components blocked by an active bound are dropped
    // from the search ray.
    VectorX<Scalar> d = -g;
    for (Eigen::Index j = 0; j < d.size(); ++j) {
      if ((x(j) <= qp.lower(j) && d(j) < 0) || (x(j) >= qp.upper(j) && d(j) > 0)) { d(j) = 0; }
    }
    const Scalar dd  = d.squaredNorm();
    const Scalar dqd = d.dot(qp.quadratic * d);
    Scalar alpha;
    if (dqd > Scalar(0)) {
      alpha = dd / dqd;
    } else {
      const Scalar span = (qp.upper - qp.lower).cwiseAbs().maxCoeff();
      alpha             = (span + Scalar(1)) / std::sqrt(std::max(dd, std::numeric_limits<Scalar>::min()));
    }
    for (int k = 0; k < 60; ++k) {
      VectorX<Scalar> trial = project(qp, VectorX<Scalar>(x + alpha * d));
      const Scalar ft       = objective(qp, trial);
      if (ft <= f + armijo * g.dot(trial - x) + accept_slack(f)) {
        if (ft <= f) {
          x = std::move(trial);
          f = ft;
        }
        break;
      }
      alpha *= Scalar(0.5);
    }
    g = gradient(qp, x);

    // Newton step on the current face.
    if (auto newton = detail::face_newton_direction(qp, x, g)) {
      Scalar t = Scalar(1);
      for (int k = 0; k < 40; ++k) {
        VectorX<Scalar> trial = project(qp, VectorX<Scalar>(x + t * *newton));
        const Scalar ft       = objective(qp, trial);
        if (ft <= f + armijo * g.dot(trial - x) + accept_slack(f)) {
          if (ft <= f) {
            x = std::move(trial);
            f = ft;
            g = gradient(qp, x);
          }
          break;
        }
        t *= Scalar(0.5);
      }
    }
  }

  sol.x         = std::move(x);
  sol.objective = objective(qp, sol.x);
  if (sol.status != QpStatus::Optimal) {
    QpSolution<double> best;
    best.x            = sol.x.template cast<double>();
    best.objective    = static_cast<double>(sol.objective);
    best.status       = sol.status;
    best.kkt_residual = static_cast<double>(sol.kkt_residual);
    best.iterations   = sol.iterations;
    throw SolverFailure(
      "no convergence after " + std::to_string(settings.max_iter) + " iterations (residual "
        + std::to_string(best.kkt_residual) + ")",
      std::move(best));
  }
  return sol;
}

}  // namespace swarmpath
