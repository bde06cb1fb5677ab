#pragma once

#include <optional>
#include <span>
#include <string_view>

#include <Eigen/Dense>

#include "abcd/problem.hpp"

namespace abcd::local {

struct LocalConfig {
  double grad_step = 1e-7;  // relative forward-difference step
  int max_iters = 200;
  double pg_tol = 1e-8;  // on ||P(x - g) - x||_inf
  // Two accepted steps in a row that lower f by at most f_tol * max(1, |f|)
  // also count as stationary; finite-difference noise rarely lets pg_tol hit.
  double f_tol = 1e-12;
  double armijo_c = 1e-4;
  int max_backtracks = 30;
  int qp_iters = 50;  // projected-gradient sweeps per QP solve

  void validate() const;
};

enum class LocalStatus { Stationary, IterCap, BudgetExhausted, LineSearchFailure };

std::string_view to_string(LocalStatus s);

struct LocalResult {
  Point x;
  double f = 0.0;
  int iterations = 0;
  LocalStatus status = LocalStatus::IterCap;
  // Set when status == BudgetExhausted.
  std::optional<BudgetKind> budget;
};

// Forward differences with h_i = grad_step * max(1, |x_i|), falling back to
// a backward difference when x_i + h_i leaves the box. `fx` is f(x); costs
// exactly n evaluations.
Eigen::VectorXd fd_gradient(const Problem& problem, std::span<const double> x,
                            double fx, double grad_step, EvalCounter& counter);

double qp_value(const Eigen::VectorXd& g, const Eigen::MatrixXd& model,
                const Eigen::VectorXd& p);

// Approximate minimizer of g.p + p'Bp/2 subject to lower <= x + p <= upper.
// Starts at the generalized Cauchy point along the projected steepest-descent
// path, tries a Newton step on the free variables, then polishes with
// projected-gradient sweeps. Every stage is accepted only if it lowers the
// model, so the result never does worse than the Cauchy point.
Eigen::VectorXd box_qp_step(const Eigen::VectorXd& g, const Eigen::MatrixXd& model,
                            std::span<const double> x, const Bounds& bounds,
                            int sweeps = 50);

// Damped-BFGS projected quasi-Newton descent from x0. Never returns a point
// worse than x0.
LocalResult sqp_local(const Problem& problem, std::span<const double> x0,
                      const LocalConfig& config, EvalCounter& counter);

}  // namespace abcd::local
