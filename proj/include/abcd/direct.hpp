#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <utility>
#include <vector>

#include "abcd/problem.hpp"
#include "abcd/report.hpp"

namespace abcd::direct {

// Deepest trisection level per dimension; 3^38 still fits a signed 64-bit
// cell index.
inline constexpr int kMaxLevel = 38;

// Group keys: measures rounded to 12 decimal digits.
std::int64_t measure_key(double measure);

// Center-to-vertex distance 0.5*sqrt(sum_i 3^(-2*levels[i])).
double measure(std::span<const int> levels);

// The closed form for a cube divided r times in n dimensions:
// p = r mod n sides of length 3^-(k+1), n-p sides of 3^-k, k = (r-p)/n.
double balanced_measure(int n, int divisions);

// Rectangle store. Rectangles live in flat parallel arrays indexed by id;
// each one is a product of triadic intervals [cell/3^level, (cell+1)/3^level)
// with a floating-point mirror of its center.
class PartitionState {
 public:
  using Group = std::set<std::pair<double, int>>;  // (value, id), lowest first

  explicit PartitionState(std::size_t dim);

  std::size_t dim() const noexcept { return dim_; }
  std::size_t size() const noexcept { return values_.size(); }
  bool empty() const noexcept { return values_.empty(); }

  std::span<const double> center(int id) const;
  std::span<const std::int64_t> cells(int id) const;
  std::span<const int> levels(int id) const;
  double value(int id) const { return values_[static_cast<std::size_t>(id)]; }
  double measure(int id) const { return measures_[static_cast<std::size_t>(id)]; }

  double f_min() const noexcept { return f_min_; }
  int best_id() const noexcept { return best_id_; }
  std::span<const double> x_min() const { return center(best_id_); }

  // Ordered by measure key, smallest first.
  const std::map<std::int64_t, Group>& groups() const noexcept { return groups_; }
  double smallest_measure() const;

  // The whole unit cube as rectangle 0.
  int add_root(double value);

  // Internal mutation used by sample_and_divide.
  int add_child(int parent, std::span<const double> center,
                std::span<const std::int64_t> cells, double value);
  void detach(int id);
  void attach(int id);
  void set_cell(int id, std::size_t axis, std::int64_t cell, int level);

 private:
  void refresh_measure(int id);
  void consider_incumbent(int id);

  std::size_t dim_;
  std::vector<double> centers_;
  std::vector<std::int64_t> cells_;
  std::vector<int> levels_;
  std::vector<double> values_;
  std::vector<double> measures_;
  std::vector<std::int64_t> keys_;
  std::map<std::int64_t, Group> groups_;
  double f_min_ = 0.0;
  int best_id_ = -1;
};

// Trisects rectangle `id` along all of its longest sides, sampling
// c +- delta*e_i for each and dividing in ascending order of
// w_i = min(f(c+delta*e_i), f(c-delta*e_i)); equal w_i keep index order.
// Returns the ids of the new rectangles (empty when `id` is already at the
// deepest level). If the budget runs out while sampling, the partition is
// left untouched and BudgetExhausted propagates.
std::vector<int> sample_and_divide(int id, PartitionState& state,
                                   const NormalizedProblem& problem,
                                   EvalCounter& counter);

// A measure-group representative in the (d, f) plane.
struct HullPoint {
  double d;
  double f;
  int id;
};

// Indices into `points` (sorted by strictly increasing d) that are
// potentially optimal: some K > 0 gives f_j - K d_j <= f_i - K d_i for all i
// and f_j - K d_j <= f_min - eps |f_min|. Uses the lower-right convex hull.
std::vector<std::size_t> potentially_optimal(std::span<const HullPoint> points,
                                             double f_min, double eps);

// Ids of the potentially optimal rectangles, ordered by measure.
std::vector<int> identify_poh(const PartitionState& state, double eps);

struct DirectConfig {
  double eps = 1e-4;
  std::optional<std::int64_t> max_iters;
  std::optional<std::int64_t> max_evals;
  std::optional<double> max_wall_seconds;
  std::optional<double> target;
  double accuracy = 1e-4;
  // Stop once the smallest rectangle measure drops below this (0 disables).
  double min_measure = 0.0;
  // Stop after this many consecutive iterations whose f_min improvement is
  // at most stall_tol (0 disables).
  int stall_iters = 0;
  double stall_tol = 0.0;
  Phase phase = Phase::Direct;
  std::int64_t step_offset = 0;
  // Invoked after each completed iteration with the iteration number.
  std::function<void(const PartitionState&, std::int64_t)> on_iteration;
};

// DIRECT on its own budget.
RunReport direct_solve(const Problem& problem, const DirectConfig& config);

// DIRECT charging an external counter (wall-time deadline and global cap
// come from it; config.max_evals caps this run's own spending).
RunReport direct_solve(const Problem& problem, const DirectConfig& config,
                       EvalCounter& counter);

}  // namespace abcd::direct
