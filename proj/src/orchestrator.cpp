#include "abcd/orchestrator.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace abcd {

void AbcdConfig::validate(std::size_t n) const {
  const auto dim = static_cast<int>(n);
  if (m1 < 1 || m1 > dim) throw ConfigError("abcd: m1 must lie in [1, n]");
  if (m2 < 1 || m2 > dim) throw ConfigError("abcd: m2 must lie in [1, n]");
  if (t1 < 1) throw ConfigError("abcd: t1 must be at least 1");
  if (!(switch_eps > 0.0)) throw ConfigError("abcd: switch_eps must be positive");
  if (!(global_stall_eps >= 0.0)) throw ConfigError("abcd: global_stall_eps must be nonnegative");
  if (global_stall_patience && *global_stall_patience < 1) {
    throw ConfigError("abcd: global stall patience must be positive");
  }
  if (!(target_accuracy >= 0.0)) throw ConfigError("abcd: target_accuracy must be nonnegative");
  if (max_evals && *max_evals < 1) throw ConfigError("abcd: max_evals must be positive");
  if (max_subproblems && *max_subproblems < 1) {
    throw ConfigError("abcd: max_subproblems must be positive");
  }
  if (max_wall_seconds && !(*max_wall_seconds > 0.0)) {
    throw ConfigError("abcd: max_wall_seconds must be positive");
  }
  if (sub_eval_cap && *sub_eval_cap < 1) throw ConfigError("abcd: sub_eval_cap must be positive");
  if (q && *q < 1) throw ConfigError("abcd: q must be at least 1");
  if (!(direct_eps > 0.0)) throw ConfigError("abcd: direct_eps must be positive");
  if (!enable_global_stall && !max_evals && !max_subproblems && !max_wall_seconds) {
    throw ConfigError("abcd: without the global stall rule a budget is required");
  }
  local.validate();
}

int AbcdConfig::start_samples(std::size_t n) const {
  return q.value_or(std::min(2 * static_cast<int>(n), 32));
}

int AbcdConfig::patience(std::size_t n) const {
  return global_stall_patience.value_or(std::min(static_cast<int>(n), 6));
}

StartPoint choose_start(const Problem& problem, int q, RandomStream& rng,
                        EvalCounter& counter) {
  if (q < 1) throw ConfigError("choose_start: q must be at least 1");
  const Bounds& bounds = problem.bounds;
  const std::size_t n = bounds.dim();
  std::size_t axis = 0;
  for (std::size_t i = 1; i < n; ++i) {
    if (bounds.width(i) > bounds.width(axis)) axis = i;
  }

  StartPoint best;
  Point z(n);
  for (int slab = 0; slab < q; ++slab) {
    for (std::size_t i = 0; i < n; ++i) z[i] = rng.uniform();
    z[axis] = (slab + z[axis]) / q;
    const Point x = denormalize(z, bounds);
    double f = 0.0;
    try {
      f = evaluate_counted(problem, x, counter);
    } catch (const BudgetExhausted& e) {
      if (slab == 0) throw;
      best.cut_short = e.kind();
      return best;
    }
    if (slab == 0 || f < best.f) best = {x, f, std::nullopt};
  }
  return best;
}

std::vector<std::size_t> select_coords(AbcdState& state, std::size_t n, std::size_t size,
                                       BlockMode mode) {
  if (size < 1 || size > n) {
    std::ostringstream msg;
    msg << "select_coords: block size " << size << " outside [1, " << n << "]";
    throw ConfigError(msg.str());
  }
  std::vector<std::size_t> idx;
  idx.reserve(size);
  if (mode == BlockMode::Sequential) {
    for (std::size_t k = 0; k < size; ++k) idx.push_back((state.cursor + k) % n);
    state.cursor = (state.cursor + size) % n;
  } else {
    // Partial Fisher-Yates.
    std::vector<std::size_t> pool(n);
    std::iota(pool.begin(), pool.end(), std::size_t{0});
    for (std::size_t k = 0; k < size; ++k) {
      const auto pick = k + static_cast<std::size_t>(state.block_rng.below(n - k));
      std::swap(pool[k], pool[pick]);
      idx.push_back(pool[k]);
    }
  }
  std::sort(idx.begin(), idx.end());
  return idx;
}

Problem make_subproblem(const Problem& problem, std::span<const double> incumbent,
                        std::span<const std::size_t> idx) {
  Problem sub;
  sub.name = problem.name;
  sub.known_optimum = problem.known_optimum;
  for (std::size_t i : idx) {
    if (i >= problem.dim()) throw ConfigError("make_subproblem: index out of range");
    sub.bounds.lower.push_back(problem.bounds.lower[i]);
    sub.bounds.upper.push_back(problem.bounds.upper[i]);
  }
  sub.objective = [f = problem.objective, base = Point(incumbent.begin(), incumbent.end()),
                   coords = std::vector<std::size_t>(idx.begin(), idx.end())](
                      std::span<const double> y) {
    Point x = base;
    for (std::size_t k = 0; k < coords.size(); ++k) x[coords[k]] = y[k];
    return f(x);
  };
  return sub;
}

StallStep stall_update(int streak, double f_prev, double f_new, double eps1, int t1) {
  StallStep step;
  step.streak = f_prev - f_new <= eps1 ? streak + 1 : 0;
  step.switched = step.streak >= t1;
  return step;
}

namespace {

class AbcdRun {
 public:
  AbcdRun(const Problem& problem, const AbcdConfig& config)
      : problem_(problem),
        config_(config),
        n_(problem.dim()),
        state_(config.seed),
        started_(std::chrono::steady_clock::now()) {
    std::optional<EvalCounter::Clock::time_point> deadline;
    if (config.max_wall_seconds) {
      deadline = started_ + std::chrono::duration_cast<EvalCounter::Clock::duration>(
                                std::chrono::duration<double>(*config.max_wall_seconds));
    }
    counter_ = EvalCounter(config.max_evals, deadline);
  }

  RunReport run() {
    try {
      solve();
    } catch (const BudgetExhausted& e) {
      report_.termination = termination_for(e.kind());
    }
    report_.best_x = state_.incumbent_x;
    report_.best_f = have_incumbent_ ? state_.incumbent_f
                                     : std::numeric_limits<double>::infinity();
    report_.evals = counter_.count();
    report_.subproblems = state_.subproblem_index;
    report_.elapsed_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started_).count();
    return report_;
  }

 private:
  bool reached() const {
    return problem_.known_optimum &&
           std::abs(state_.incumbent_f - *problem_.known_optimum) <= config_.target_accuracy;
  }

  void record(Phase phase) {
    report_.trace.push_back({counter_.count(), state_.subproblem_index, phase,
                             state_.incumbent_f});
  }

  void finish(Termination t) {
    report_.termination = t;
    state_.phase = AbcdPhase::Done;
  }

  void adopt(std::span<const double> x, double f) {
    if (!(f < state_.incumbent_f)) return;
    state_.incumbent_x.assign(x.begin(), x.end());
    state_.incumbent_f = f;
    if (config_.verify_adoption) {
      const double check = evaluate_counted(problem_, state_.incumbent_x, counter_);
      if (std::abs(check - f) > 1e-12 * std::max(1.0, std::abs(f))) {
        throw std::logic_error("abcd: adopted incumbent does not reproduce its value");
      }
    }
  }

  // Returns true when the run must stop.
  bool local_phase() {
    const auto result = local::sqp_local(problem_, state_.incumbent_x, config_.local, counter_);
    adopt(result.x, result.f);
    record(Phase::Local);
    if (result.status == local::LocalStatus::BudgetExhausted) {
      finish(termination_for(*result.budget));
      return true;
    }
    if (reached()) {
      finish(Termination::TargetReached);
      return true;
    }
    return false;
  }

  // Returns true when the run must stop.
  bool subproblem(std::size_t size, BlockMode mode, Phase phase) {
    if (config_.max_subproblems && state_.subproblem_index >= *config_.max_subproblems) {
      finish(Termination::IterBudget);
      return true;
    }
    const auto idx = select_coords(state_, n_, size, mode);
    const Problem sub = make_subproblem(problem_, state_.incumbent_x, idx);

    direct::DirectConfig dc;
    dc.eps = config_.direct_eps;
    dc.max_evals = config_.sub_eval_cap.value_or(100 * static_cast<std::int64_t>(idx.size()));
    dc.target = problem_.known_optimum;
    dc.accuracy = config_.target_accuracy;
    dc.min_measure = config_.sub_min_measure;
    dc.stall_iters = config_.sub_stall_iters;
    dc.stall_tol = config_.sub_stall_tol;
    dc.phase = phase;
    const RunReport result = direct::direct_solve(sub, dc, counter_);
    report_.iterations += result.iterations;
    ++state_.subproblem_index;

    if (!result.best_x.empty()) {
      Point candidate = state_.incumbent_x;
      for (std::size_t k = 0; k < idx.size(); ++k) candidate[idx[k]] = result.best_x[k];
      adopt(candidate, result.best_f);
    }
    record(phase);

    if (result.termination == Termination::TimeBudget) {
      finish(Termination::TimeBudget);
      return true;
    }
    if (result.termination == Termination::EvalBudget && counter_.exhausted()) {
      finish(Termination::EvalBudget);
      return true;
    }
    if (reached()) {
      finish(Termination::TargetReached);
      return true;
    }
    return false;
  }

  bool global_stall(double f_prev) {
    if (!config_.enable_global_stall) return false;
    global_streak_ = f_prev - state_.incumbent_f <= config_.global_stall_eps ? global_streak_ + 1 : 0;
    if (global_streak_ >= config_.patience(n_)) {
      finish(Termination::GlobalStall);
      return true;
    }
    return false;
  }

  void solve() {
    config_.validate(n_);
    RandomStream start_rng(config_.seed, RandomStream::Purpose::StartPoint);
    StartPoint start = choose_start(problem_, config_.start_samples(n_), start_rng, counter_);
    state_.incumbent_x = std::move(start.x);
    state_.incumbent_f = start.f;
    have_incumbent_ = true;
    record(Phase::Start);
    if (reached()) return finish(Termination::TargetReached);
    if (start.cut_short) return finish(termination_for(*start.cut_short));

    const bool local_enabled = config_.enable_local;
    if (local_enabled && config_.sqp_first) {
      state_.phase = AbcdPhase::Local;
      if (local_phase()) return;
    }

    state_.phase = AbcdPhase::Coordinate;
    for (;;) {
      const double f_prev = state_.incumbent_f;
      if (subproblem(static_cast<std::size_t>(config_.m1), config_.phase1_mode,
                     Phase::Coordinate)) {
        return;
      }
      if (config_.enable_switch) {
        const StallStep step = stall_update(state_.stall_streak, f_prev, state_.incumbent_f,
                                            config_.switch_eps, config_.t1);
        state_.stall_streak = step.streak;
        if (step.switched) break;
      }
      if (global_stall(f_prev)) return;
    }

    if (local_enabled && !config_.sqp_first) {
      state_.phase = AbcdPhase::Local;
      if (local_phase()) return;
    }

    state_.phase = AbcdPhase::Block;
    global_streak_ = 0;
    for (;;) {
      const double f_prev = state_.incumbent_f;
      if (subproblem(static_cast<std::size_t>(config_.m2), config_.phase3_mode, Phase::Block)) {
        return;
      }
      if (global_stall(f_prev)) return;
    }
  }

  const Problem& problem_;
  const AbcdConfig& config_;
  std::size_t n_;
  AbcdState state_;
  EvalCounter counter_;
  std::chrono::steady_clock::time_point started_;
  RunReport report_;
  bool have_incumbent_ = false;
  int global_streak_ = 0;
};

}  // namespace

RunReport abcd_solve(const Problem& problem, const AbcdConfig& config) {
  problem.bounds.validate();
  return AbcdRun(problem, config).run();
}

}  // namespace abcd
