#pragma once

#include <chrono>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace abcd {

using Point = std::vector<double>;
using Objective = std::function<double(std::span<const double>)>;

// Invalid bounds, dimensions, or solver settings.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A point handed to a map whose domain it does not belong to.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Raised by the objective boundary when f returns NaN or +-Inf.
class NonFiniteObjective : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class BudgetKind { Evaluations, WallTime };

// Thrown from evaluate_counted() when no further evaluation is allowed.
// Solvers catch it and finish with the best point found so far.
class BudgetExhausted : public std::runtime_error {
 public:
  explicit BudgetExhausted(BudgetKind kind)
      : std::runtime_error(kind == BudgetKind::Evaluations
                               ? "evaluation budget exhausted"
                               : "wall-time budget exhausted"),
        kind_(kind) {}
  BudgetKind kind() const noexcept { return kind_; }

 private:
  BudgetKind kind_;
};

struct Bounds {
  Point lower;
  Point upper;

  std::size_t dim() const noexcept { return lower.size(); }
  double width(std::size_t i) const { return upper[i] - lower[i]; }
  bool contains(std::span<const double> x) const;
  // Throws ConfigError unless 1 <= n, sizes match and lower < upper strictly.
  void validate() const;
};

struct Problem {
  Objective objective;
  Bounds bounds;
  std::optional<double> known_optimum;
  std::string name;

  std::size_t dim() const noexcept { return bounds.dim(); }
};

// Per-run evaluation bookkeeping. Not shared between runs.
class EvalCounter {
 public:
  using Clock = std::chrono::steady_clock;

  EvalCounter() = default;
  explicit EvalCounter(std::optional<std::int64_t> cap,
                       std::optional<Clock::time_point> deadline = std::nullopt);

  std::int64_t count() const noexcept { return count_; }
  std::optional<std::int64_t> cap() const noexcept { return cap_; }
  std::optional<Clock::time_point> deadline() const noexcept { return deadline_; }
  bool exhausted() const noexcept { return cap_ && count_ >= *cap_; }
  std::int64_t remaining() const noexcept;

  // Throws BudgetExhausted if another evaluation is not allowed.
  void charge();

  // A counter for a nested run: its cap is the tighter of `cap` and what is
  // left here, and it shares this counter's deadline. Fold it back with
  // merge() once the nested run is over.
  EvalCounter child(std::optional<std::int64_t> cap) const;
  void merge(const EvalCounter& child);

 private:
  std::int64_t count_ = 0;
  std::optional<std::int64_t> cap_;
  std::optional<Clock::time_point> deadline_;
};

// f(x) with counting and the finite-value check. On a spent budget no
// evaluation is performed.
double evaluate_counted(const Problem& problem, std::span<const double> x,
                        EvalCounter& counter);

// The same problem seen through the affine map [0,1]^n -> [lower, upper].
class NormalizedProblem {
 public:
  explicit NormalizedProblem(Problem source);

  const Problem& source() const noexcept { return source_; }
  const Bounds& bounds() const noexcept { return source_.bounds; }
  std::size_t dim() const noexcept { return source_.dim(); }

  Point to_user(std::span<const double> z) const;
  Point to_unit(std::span<const double> x) const;
  double evaluate(std::span<const double> z, EvalCounter& counter) const;
  // Unit-cube Problem whose objective is f(lower + z*(upper-lower)).
  Problem unit_problem() const;

 private:
  Problem source_;
};

NormalizedProblem normalize(const Problem& problem);

// lower + z*(upper-lower); DomainError when z leaves the unit cube.
Point denormalize(std::span<const double> z, const Bounds& bounds);

// (x-lower)/(upper-lower) without domain checks.
Point normalize_point(std::span<const double> x, const Bounds& bounds);

}  // namespace abcd
