#include "abcd/direct.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>

namespace abcd::direct {
namespace {

// 3^-level for every admissible level.
const std::array<double, kMaxLevel + 1>& inverse_powers_of_three() {
  static const auto table = [] {
    std::array<double, kMaxLevel + 1> t{};
    std::int64_t p = 1;
    for (int l = 0; l <= kMaxLevel; ++l) {
      t[static_cast<std::size_t>(l)] = 1.0 / static_cast<double>(p);
      if (l < kMaxLevel) p *= 3;
    }
    return t;
  }();
  return table;
}

double cell_center(std::int64_t cell, int level) {
  return (static_cast<double>(cell) + 0.5) *
         inverse_powers_of_three()[static_cast<std::size_t>(level)];
}

}  // namespace

std::int64_t measure_key(double measure) {
  return std::llround(measure * 1e12);
}

double measure(std::span<const int> levels) {
  const auto& inv = inverse_powers_of_three();
  double sum = 0.0;
  for (int l : levels) {
    const double side = inv[static_cast<std::size_t>(l)];
    sum += side * side;
  }
  return 0.5 * std::sqrt(sum);
}

double balanced_measure(int n, int divisions) {
  const int p = divisions % n;
  const int k = (divisions - p) / n;
  return 0.5 * std::sqrt(std::pow(3.0, -2.0 * (k + 1)) * p +
                         std::pow(3.0, -2.0 * k) * (n - p));
}

PartitionState::PartitionState(std::size_t dim) : dim_(dim) {
  if (dim == 0) throw ConfigError("partition: dimension must be at least 1");
}

std::span<const double> PartitionState::center(int id) const {
  return {centers_.data() + static_cast<std::size_t>(id) * dim_, dim_};
}

std::span<const std::int64_t> PartitionState::cells(int id) const {
  return {cells_.data() + static_cast<std::size_t>(id) * dim_, dim_};
}

std::span<const int> PartitionState::levels(int id) const {
  return {levels_.data() + static_cast<std::size_t>(id) * dim_, dim_};
}

double PartitionState::smallest_measure() const {
  if (groups_.empty()) return 0.0;
  return measures_[static_cast<std::size_t>(groups_.begin()->second.begin()->second)];
}

int PartitionState::add_root(double value) {
  centers_.assign(dim_, 0.5);
  cells_.assign(dim_, 0);
  levels_.assign(dim_, 0);
  values_.assign(1, value);
  measures_.assign(1, 0.0);
  keys_.assign(1, 0);
  groups_.clear();
  best_id_ = 0;
  f_min_ = value;
  refresh_measure(0);
  attach(0);
  return 0;
}

int PartitionState::add_child(int parent, std::span<const double> center,
                              std::span<const std::int64_t> cells, double value) {
  const int id = static_cast<int>(values_.size());
  const auto p = static_cast<std::size_t>(parent);
  centers_.insert(centers_.end(), center.begin(), center.end());
  cells_.insert(cells_.end(), cells.begin(), cells.end());
  for (std::size_t i = 0; i < dim_; ++i) {
    const int level = levels_[p * dim_ + i];
    levels_.push_back(level);
  }
  values_.push_back(value);
  measures_.push_back(0.0);
  keys_.push_back(0);
  return id;
}

void PartitionState::detach(int id) {
  const auto i = static_cast<std::size_t>(id);
  auto it = groups_.find(keys_[i]);
  it->second.erase({values_[i], id});
  if (it->second.empty()) groups_.erase(it);
}

void PartitionState::attach(int id) {
  refresh_measure(id);
  const auto i = static_cast<std::size_t>(id);
  groups_[keys_[i]].insert({values_[i], id});
  consider_incumbent(id);
}

void PartitionState::set_cell(int id, std::size_t axis, std::int64_t cell, int level) {
  const auto at = static_cast<std::size_t>(id) * dim_ + axis;
  cells_[at] = cell;
  levels_[at] = level;
}

void PartitionState::refresh_measure(int id) {
  const auto i = static_cast<std::size_t>(id);
  measures_[i] = direct::measure(levels(id));
  keys_[i] = measure_key(measures_[i]);
}

void PartitionState::consider_incumbent(int id) {
  const double v = values_[static_cast<std::size_t>(id)];
  if (v < f_min_) {
    f_min_ = v;
    best_id_ = id;
  }
}

std::vector<int> sample_and_divide(int id, PartitionState& state,
                                   const NormalizedProblem& problem,
                                   EvalCounter& counter) {
  const std::size_t n = state.dim();
  const auto levels = state.levels(id);
  const int min_level = *std::min_element(levels.begin(), levels.end());
  if (min_level >= kMaxLevel) return {};

  std::vector<std::size_t> longest;
  for (std::size_t i = 0; i < n; ++i) {
    if (levels[i] == min_level) longest.push_back(i);
  }

  struct Probe {
    std::size_t axis;
    std::int64_t parent_cell;
    double lo_value, hi_value;
    double lo_coord, hi_coord;
    double w;
  };
  std::vector<Probe> probes;
  probes.reserve(longest.size());

  // Sample everything first so that running out of budget leaves the
  // partition as it was.
  const Point base(state.center(id).begin(), state.center(id).end());
  Point z = base;
  const int child_level = min_level + 1;
  for (std::size_t axis : longest) {
    const std::int64_t cell = state.cells(id)[axis];
    Probe probe{axis, cell, 0.0, 0.0, cell_center(3 * cell, child_level),
                cell_center(3 * cell + 2, child_level), 0.0};
    z[axis] = probe.hi_coord;
    probe.hi_value = problem.evaluate(z, counter);
    z[axis] = probe.lo_coord;
    probe.lo_value = problem.evaluate(z, counter);
    z[axis] = base[axis];
    probe.w = std::min(probe.lo_value, probe.hi_value);
    probes.push_back(probe);
  }

  std::stable_sort(probes.begin(), probes.end(),
                   [](const Probe& a, const Probe& b) { return a.w < b.w; });

  state.detach(id);
  std::vector<int> created;
  created.reserve(2 * probes.size());
  Point child_center(n);
  std::vector<std::int64_t> child_cells(n);
  for (const Probe& probe : probes) {
    // The parent keeps the middle third; children inherit its current
    // (partially divided) shape.
    state.set_cell(id, probe.axis, 3 * probe.parent_cell + 1, child_level);
    for (int side = 0; side < 2; ++side) {
      // add_child may reallocate, so re-read the parent each time.
      const auto parent_center = state.center(id);
      const auto parent_cells = state.cells(id);
      std::copy(parent_center.begin(), parent_center.end(), child_center.begin());
      std::copy(parent_cells.begin(), parent_cells.end(), child_cells.begin());
      child_center[probe.axis] = side == 0 ? probe.lo_coord : probe.hi_coord;
      child_cells[probe.axis] = 3 * probe.parent_cell + (side == 0 ? 0 : 2);
      const double value = side == 0 ? probe.lo_value : probe.hi_value;
      created.push_back(state.add_child(id, child_center, child_cells, value));
    }
  }
  state.attach(id);
  for (int child : created) state.attach(child);
  return created;
}

std::vector<std::size_t> potentially_optimal(std::span<const HullPoint> points,
                                             double f_min, double eps) {
  if (points.empty()) return {};

  // Lowest value; among equal values the largest measure dominates.
  std::size_t start = 0;
  for (std::size_t i = 1; i < points.size(); ++i) {
    if (points[i].f <= points[start].f) start = i;
  }

  // Lower convex hull from `start` rightwards; collinear points are kept
  // since an exact K exists for them.
  std::vector<std::size_t> hull;
  for (std::size_t i = start; i < points.size(); ++i) {
    while (hull.size() >= 2) {
      const HullPoint& a = points[hull[hull.size() - 2]];
      const HullPoint& b = points[hull.back()];
      const HullPoint& c = points[i];
      const double cross = (b.d - a.d) * (c.f - a.f) - (b.f - a.f) * (c.d - a.d);
      if (cross < 0.0) {
        hull.pop_back();
      } else {
        break;
      }
    }
    hull.push_back(i);
  }

  const double threshold = f_min - eps * std::abs(f_min);
  auto slope = [&](std::size_t a, std::size_t b) {
    return (points[b].f - points[a].f) / (points[b].d - points[a].d);
  };

  std::vector<std::size_t> selected;
  for (std::size_t k = 0; k < hull.size(); ++k) {
    const std::size_t j = hull[k];
    const double k_low = k == 0 ? 0.0 : slope(hull[k - 1], j);
    const double k_high = k + 1 == hull.size()
                              ? std::numeric_limits<double>::infinity()
                              : slope(j, hull[k + 1]);
    if (!(k_high > 0.0) || k_low > k_high) continue;
    if (std::isinf(k_high) || points[j].f - k_high * points[j].d <= threshold) {
      selected.push_back(j);
    }
  }
  if (selected.empty()) selected.push_back(hull.back());
  return selected;
}

std::vector<int> identify_poh(const PartitionState& state, double eps) {
  std::vector<HullPoint> reps;
  reps.reserve(state.groups().size());
  for (const auto& [key, group] : state.groups()) {
    const auto& [value, id] = *group.begin();
    reps.push_back({state.measure(id), value, id});
  }
  std::vector<int> ids;
  for (std::size_t i : potentially_optimal(reps, state.f_min(), eps)) {
    ids.push_back(reps[i].id);
  }
  return ids;
}

RunReport direct_solve(const Problem& problem, const DirectConfig& config) {
  std::optional<EvalCounter::Clock::time_point> deadline;
  if (config.max_wall_seconds) {
    deadline = EvalCounter::Clock::now() +
               std::chrono::duration_cast<EvalCounter::Clock::duration>(
                   std::chrono::duration<double>(*config.max_wall_seconds));
  }
  EvalCounter counter(std::nullopt, deadline);
  return direct_solve(problem, config, counter);
}

RunReport direct_solve(const Problem& problem, const DirectConfig& config,
                       EvalCounter& global) {
  if (!(config.eps > 0.0)) throw ConfigError("direct: eps must be positive");
  if (config.max_evals && *config.max_evals < 1) {
    throw ConfigError("direct: max_evals must be positive");
  }
  if (config.max_iters && *config.max_iters < 0) {
    throw ConfigError("direct: max_iters must be nonnegative");
  }
  const auto started = std::chrono::steady_clock::now();
  const NormalizedProblem normalized = normalize(problem);
  EvalCounter counter = global.child(config.max_evals);
  const std::int64_t base = global.count();

  PartitionState state(normalized.dim());
  RunReport report;
  std::int64_t iteration = 0;

  auto record = [&] {
    report.trace.push_back({base + counter.count(), config.step_offset + iteration,
                            config.phase, state.f_min()});
  };
  auto reached = [&] {
    return config.target && std::abs(state.f_min() - *config.target) <= config.accuracy;
  };

  try {
    const Point center(normalized.dim(), 0.5);
    state.add_root(normalized.evaluate(center, counter));
    record();
    if (reached()) {
      report.termination = Termination::TargetReached;
    } else {
      int stall = 0;
      for (;;) {
        if (config.max_iters && iteration >= *config.max_iters) {
          report.termination = Termination::IterBudget;
          break;
        }
        const double before = state.f_min();
        bool divided = false;
        bool done = false;
        for (int id : identify_poh(state, config.eps)) {
          const double prev = state.f_min();
          divided |= !sample_and_divide(id, state, normalized, counter).empty();
          if (state.f_min() < prev) record();
          if (reached()) {
            done = true;
            break;
          }
        }
        ++iteration;
        if (config.on_iteration) config.on_iteration(state, iteration);
        if (done) {
          report.termination = Termination::TargetReached;
          break;
        }
        if (!divided ||
            (config.min_measure > 0.0 && state.smallest_measure() < config.min_measure)) {
          report.termination = Termination::MeasureFloor;
          break;
        }
        stall = before - state.f_min() <= config.stall_tol ? stall + 1 : 0;
        if (config.stall_iters > 0 && stall >= config.stall_iters) {
          report.termination = Termination::GlobalStall;
          break;
        }
      }
    }
  } catch (const BudgetExhausted& e) {
    report.termination = termination_for(e.kind());
  }

  global.merge(counter);
  report.evals = counter.count();
  report.iterations = iteration;
  if (!state.empty()) {
    report.best_f = state.f_min();
    report.best_x = normalized.to_user(state.x_min());
  } else {
    report.best_f = std::numeric_limits<double>::infinity();
  }
  report.elapsed_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return report;
}

}  // namespace abcd::direct
