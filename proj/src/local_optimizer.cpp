#include "abcd/local_optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace abcd::local {
namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

double clamp_to(double v, double lo, double hi) { return std::min(std::max(v, lo), hi); }

// Keeps x + p inside [lower, upper] in floating point, not just in exact
// arithmetic.
void make_feasible(VectorXd& p, std::span<const double> x, const Bounds& bounds) {
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    const auto k = static_cast<std::size_t>(i);
    p[i] = clamp_to(p[i], bounds.lower[k] - x[k], bounds.upper[k] - x[k]);
    while (x[k] + p[i] > bounds.upper[k]) p[i] = std::nextafter(p[i], -INFINITY);
    while (x[k] + p[i] < bounds.lower[k]) p[i] = std::nextafter(p[i], INFINITY);
  }
}

VectorXd project(const VectorXd& p, const VectorXd& lo, const VectorXd& hi) {
  return p.cwiseMax(lo).cwiseMin(hi);
}

// Minimizer of the model along t -> P(-t g) on the box [lo, hi] (lo <= 0 <= hi).
VectorXd cauchy_point(const VectorXd& g, const MatrixXd& model, const VectorXd& lo,
                      const VectorXd& hi) {
  const Eigen::Index n = g.size();
  std::vector<double> breaks(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    double t = std::numeric_limits<double>::infinity();
    if (g[i] > 0.0) t = -lo[i] / g[i];
    if (g[i] < 0.0) t = -hi[i] / g[i];
    breaks[static_cast<std::size_t>(i)] = t;
  }
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
  std::sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
    return breaks[static_cast<std::size_t>(a)] < breaks[static_cast<std::size_t>(b)];
  });

  VectorXd p = VectorXd::Zero(n);
  VectorXd d = -g;
  double t_prev = 0.0;
  std::size_t next = 0;
  // Variables with a zero breakpoint never move.
  while (next < order.size() && breaks[static_cast<std::size_t>(order[next])] <= 0.0) {
    d[order[next]] = 0.0;
    ++next;
  }
  while (d.squaredNorm() > 0.0) {
    const double t_end = next < order.size()
                             ? breaks[static_cast<std::size_t>(order[next])]
                             : std::numeric_limits<double>::infinity();
    const double slope = g.dot(d) + p.dot(model * d);
    const double curvature = d.dot(model * d);
    if (slope >= 0.0) break;
    const double dt = curvature > 0.0 ? -slope / curvature
                                      : std::numeric_limits<double>::infinity();
    if (dt < t_end - t_prev) {
      p += dt * d;
      break;
    }
    if (std::isinf(t_end)) break;  // unbounded along d; cannot happen on a box
    p += (t_end - t_prev) * d;
    t_prev = t_end;
    while (next < order.size() &&
           breaks[static_cast<std::size_t>(order[next])] <= t_end) {
      const Eigen::Index i = order[next];
      p[i] = g[i] > 0.0 ? lo[i] : hi[i];
      d[i] = 0.0;
      ++next;
    }
  }
  return project(p, lo, hi);
}

}  // namespace

void LocalConfig::validate() const {
  if (!(grad_step > 0.0)) throw ConfigError("local: grad_step must be positive");
  if (!(pg_tol > 0.0)) throw ConfigError("local: pg_tol must be positive");
  if (!(f_tol >= 0.0)) throw ConfigError("local: f_tol must be nonnegative");
  if (!(armijo_c > 0.0 && armijo_c < 1.0)) {
    throw ConfigError("local: armijo_c must lie in (0, 1)");
  }
  if (max_iters < 1) throw ConfigError("local: max_iters must be positive");
  if (max_backtracks < 1) throw ConfigError("local: max_backtracks must be positive");
}

std::string_view to_string(LocalStatus s) {
  switch (s) {
    case LocalStatus::Stationary: return "Stationary";
    case LocalStatus::IterCap: return "IterCap";
    case LocalStatus::BudgetExhausted: return "BudgetExhausted";
    case LocalStatus::LineSearchFailure: return "LineSearchFailure";
  }
  return "unknown";
}

VectorXd fd_gradient(const Problem& problem, std::span<const double> x, double fx,
                     double grad_step, EvalCounter& counter) {
  const std::size_t n = x.size();
  VectorXd grad(static_cast<Eigen::Index>(n));
  Point probe(x.begin(), x.end());
  for (std::size_t i = 0; i < n; ++i) {
    const double h = grad_step * std::max(1.0, std::abs(x[i]));
    const bool backward = x[i] + h > problem.bounds.upper[i];
    probe[i] = backward ? x[i] - h : x[i] + h;
    const double step = probe[i] - x[i];
    const double fh = evaluate_counted(problem, probe, counter);
    grad[static_cast<Eigen::Index>(i)] = (fh - fx) / step;
    probe[i] = x[i];
  }
  return grad;
}

double qp_value(const VectorXd& g, const MatrixXd& model, const VectorXd& p) {
  return g.dot(p) + 0.5 * p.dot(model * p);
}

VectorXd box_qp_step(const VectorXd& g, const MatrixXd& model,
                     std::span<const double> x, const Bounds& bounds, int sweeps) {
  const Eigen::Index n = g.size();
  VectorXd lo(n), hi(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto k = static_cast<std::size_t>(i);
    lo[i] = std::min(0.0, bounds.lower[k] - x[k]);
    hi[i] = std::max(0.0, bounds.upper[k] - x[k]);
  }

  VectorXd p = cauchy_point(g, model, lo, hi);
  double best = qp_value(g, model, p);

  // Newton step on the variables the Cauchy point left free.
  std::vector<Eigen::Index> free;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (p[i] > lo[i] && p[i] < hi[i]) free.push_back(i);
  }
  if (!free.empty()) {
    const auto m = static_cast<Eigen::Index>(free.size());
    MatrixXd reduced(m, m);
    VectorXd rhs(m);
    const VectorXd grad_at_p = g + model * p;
    for (Eigen::Index a = 0; a < m; ++a) {
      rhs[a] = -grad_at_p[free[static_cast<std::size_t>(a)]];
      for (Eigen::Index b = 0; b < m; ++b) {
        reduced(a, b) = model(free[static_cast<std::size_t>(a)], free[static_cast<std::size_t>(b)]);
      }
    }
    const Eigen::LLT<MatrixXd> llt(reduced);
    if (llt.info() == Eigen::Success) {
      const VectorXd step = llt.solve(rhs);
      VectorXd direction = VectorXd::Zero(n);
      for (Eigen::Index a = 0; a < m; ++a) direction[free[static_cast<std::size_t>(a)]] = step[a];
      for (double alpha = 1.0; alpha > 1e-6; alpha *= 0.5) {
        const VectorXd trial = project(p + alpha * direction, lo, hi);
        const double value = qp_value(g, model, trial);
        if (value < best) {
          p = trial;
          best = value;
          break;
        }
      }
    }
  }

  // Projected-gradient polish; 1/L with L from Gershgorin bounds the step so
  // each sweep is monotone.
  const double lipschitz = model.cwiseAbs().rowwise().sum().maxCoeff();
  if (lipschitz > 0.0) {
    for (int sweep = 0; sweep < sweeps; ++sweep) {
      const VectorXd trial = project(p - (g + model * p) / lipschitz, lo, hi);
      const double value = qp_value(g, model, trial);
      if (!(value < best)) break;
      p = trial;
      best = value;
    }
  }

  make_feasible(p, x, bounds);
  if (qp_value(g, model, p) > 0.0) p.setZero();
  return p;
}

LocalResult sqp_local(const Problem& problem, std::span<const double> x0,
                      const LocalConfig& config, EvalCounter& counter) {
  config.validate();
  if (!problem.bounds.contains(x0)) throw DomainError("sqp_local: start point outside bounds");
  const std::size_t n = x0.size();
  const auto dim = static_cast<Eigen::Index>(n);
  const Bounds& bounds = problem.bounds;

  LocalResult result;
  result.x.assign(x0.begin(), x0.end());
  Point x = result.x;
  bool have_value = false;

  try {
    double fx = evaluate_counted(problem, x, counter);
    result.f = fx;
    have_value = true;
    VectorXd g = fd_gradient(problem, x, fx, config.grad_step, counter);
    MatrixXd model = MatrixXd::Identity(dim, dim);
    bool model_is_identity = true;
    bool scaled = false;
    int flat_steps = 0;

    for (;;) {
      if (result.iterations >= config.max_iters) {
        result.status = LocalStatus::IterCap;
        break;
      }
      double pg = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        const auto k = static_cast<Eigen::Index>(i);
        pg = std::max(pg, std::abs(clamp_to(x[i] - g[k], bounds.lower[i], bounds.upper[i]) - x[i]));
      }
      if (pg <= config.pg_tol) {
        result.status = LocalStatus::Stationary;
        break;
      }
      ++result.iterations;

      const VectorXd p = box_qp_step(g, model, x, bounds, config.qp_iters);
      const double slope = g.dot(p);
      Point trial(n);
      double f_trial = 0.0;
      bool accepted = false;
      if (slope < 0.0) {
        double alpha = 1.0;
        for (int k = 0; k < config.max_backtracks; ++k, alpha *= 0.5) {
          for (std::size_t i = 0; i < n; ++i) {
            trial[i] = clamp_to(x[i] + alpha * p[static_cast<Eigen::Index>(i)],
                                bounds.lower[i], bounds.upper[i]);
          }
          try {
            f_trial = evaluate_counted(problem, trial, counter);
          } catch (const NonFiniteObjective&) {
            continue;
          }
          if (f_trial <= fx + config.armijo_c * alpha * slope) {
            accepted = true;
            break;
          }
        }
      }
      if (!accepted) {
        if (!model_is_identity) {
          // Retry from a steepest-descent model before giving up.
          model.setIdentity();
          model_is_identity = true;
          scaled = false;
          continue;
        }
        result.status = LocalStatus::LineSearchFailure;
        break;
      }

      if (f_trial < result.f) {
        result.f = f_trial;
        result.x = trial;
      }
      flat_steps = fx - f_trial <= config.f_tol * std::max(1.0, std::abs(fx)) ? flat_steps + 1 : 0;
      if (flat_steps >= 2) {
        result.status = LocalStatus::Stationary;
        break;
      }
      VectorXd g_trial;
      try {
        g_trial = fd_gradient(problem, trial, f_trial, config.grad_step, counter);
      } catch (const NonFiniteObjective&) {
        result.status = LocalStatus::LineSearchFailure;
        break;
      }

      VectorXd s(dim);
      for (std::size_t i = 0; i < n; ++i) {
        s[static_cast<Eigen::Index>(i)] = trial[i] - x[i];
      }
      const VectorXd y = g_trial - g;
      if (!scaled) {
        const double sy = s.dot(y);
        if (sy > 0.0) model *= y.squaredNorm() / sy;
        scaled = true;
      }
      // Powell-damped BFGS keeps the model positive definite.
      const VectorXd bs = model * s;
      const double sbs = s.dot(bs);
      if (sbs > std::numeric_limits<double>::min()) {
        const double sy = s.dot(y);
        const double theta = sy >= 0.2 * sbs ? 1.0 : 0.8 * sbs / (sbs - sy);
        const VectorXd r = theta * y + (1.0 - theta) * bs;
        const double sr = s.dot(r);
        if (sr > std::numeric_limits<double>::min()) {
          model += r * r.transpose() / sr - bs * bs.transpose() / sbs;
          model_is_identity = false;
        }
      }
      x = trial;
      fx = f_trial;
      g = g_trial;
    }
  } catch (const BudgetExhausted& e) {
    result.status = LocalStatus::BudgetExhausted;
    result.budget = e.kind();
    if (!have_value) result.f = std::numeric_limits<double>::infinity();
  } catch (const NonFiniteObjective&) {
    if (!have_value) throw;
    result.status = LocalStatus::LineSearchFailure;
  }
  return result;
}

}  // namespace abcd::local
