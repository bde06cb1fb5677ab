#include "abcd/problem.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <utility>

namespace abcd {

bool Bounds::contains(std::span<const double> x) const {
  if (x.size() != dim()) return false;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] >= lower[i] && x[i] <= upper[i])) return false;
  }
  return true;
}

void Bounds::validate() const {
  if (lower.empty()) throw ConfigError("bounds: dimension must be at least 1");
  if (lower.size() != upper.size()) {
    std::ostringstream msg;
    msg << "bounds: lower has " << lower.size() << " entries, upper has "
        << upper.size();
    throw ConfigError(msg.str());
  }
  for (std::size_t i = 0; i < lower.size(); ++i) {
    if (!std::isfinite(lower[i]) || !std::isfinite(upper[i]) ||
        !(lower[i] < upper[i])) {
      std::ostringstream msg;
      msg << "bounds: dimension " << i << " needs finite lower < upper, got ["
          << lower[i] << ", " << upper[i] << "]";
      throw ConfigError(msg.str());
    }
  }
}

EvalCounter::EvalCounter(std::optional<std::int64_t> cap,
                         std::optional<Clock::time_point> deadline)
    : cap_(cap), deadline_(deadline) {
  if (cap_ && *cap_ < 1) throw ConfigError("evaluation cap must be positive");
}

std::int64_t EvalCounter::remaining() const noexcept {
  if (!cap_) return std::numeric_limits<std::int64_t>::max();
  return *cap_ > count_ ? *cap_ - count_ : 0;
}

void EvalCounter::charge() {
  if (exhausted()) throw BudgetExhausted(BudgetKind::Evaluations);
  if (deadline_ && Clock::now() >= *deadline_) {
    throw BudgetExhausted(BudgetKind::WallTime);
  }
  ++count_;
}

EvalCounter EvalCounter::child(std::optional<std::int64_t> cap) const {
  EvalCounter nested;
  nested.deadline_ = deadline_;
  if (cap_) nested.cap_ = remaining();
  if (cap) nested.cap_ = nested.cap_ ? std::min(*nested.cap_, *cap) : *cap;
  return nested;
}

void EvalCounter::merge(const EvalCounter& child) { count_ += child.count_; }

double evaluate_counted(const Problem& problem, std::span<const double> x,
                        EvalCounter& counter) {
  counter.charge();
  const double value = problem.objective(x);
  if (!std::isfinite(value)) {
    std::ostringstream msg;
    msg << "objective";
    if (!problem.name.empty()) msg << " '" << problem.name << "'";
    msg << " returned a non-finite value";
    throw NonFiniteObjective(msg.str());
  }
  return value;
}

NormalizedProblem::NormalizedProblem(Problem source) : source_(std::move(source)) {
  source_.bounds.validate();
}

Point NormalizedProblem::to_user(std::span<const double> z) const {
  return denormalize(z, source_.bounds);
}

Point NormalizedProblem::to_unit(std::span<const double> x) const {
  return normalize_point(x, source_.bounds);
}

double NormalizedProblem::evaluate(std::span<const double> z,
                                   EvalCounter& counter) const {
  const Point x = to_user(z);
  return evaluate_counted(source_, x, counter);
}

Problem NormalizedProblem::unit_problem() const {
  const std::size_t n = dim();
  Problem unit;
  unit.bounds = Bounds{Point(n, 0.0), Point(n, 1.0)};
  unit.known_optimum = source_.known_optimum;
  unit.name = source_.name;
  unit.objective = [src = source_](std::span<const double> z) {
    return src.objective(denormalize(z, src.bounds));
  };
  return unit;
}

NormalizedProblem normalize(const Problem& problem) {
  return NormalizedProblem(problem);
}

Point denormalize(std::span<const double> z, const Bounds& bounds) {
  if (z.size() != bounds.dim()) {
    throw DomainError("denormalize: dimension mismatch");
  }
  Point x(z.size());
  for (std::size_t i = 0; i < z.size(); ++i) {
    if (!(z[i] >= 0.0 && z[i] <= 1.0)) {
      std::ostringstream msg;
      msg << "denormalize: component " << i << " = " << z[i]
          << " lies outside [0, 1]";
      throw DomainError(msg.str());
    }
    // Corners map exactly onto the bounds.
    if (z[i] == 1.0) {
      x[i] = bounds.upper[i];
    } else {
      x[i] = bounds.lower[i] + z[i] * bounds.width(i);
    }
  }
  return x;
}

Point normalize_point(std::span<const double> x, const Bounds& bounds) {
  Point z(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    z[i] = (x[i] - bounds.lower[i]) / bounds.width(i);
  }
  return z;
}

}  // namespace abcd
