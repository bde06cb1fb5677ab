#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "abcd/direct.hpp"
#include "abcd/local_optimizer.hpp"
#include "abcd/problem.hpp"
#include "abcd/random.hpp"
#include "abcd/report.hpp"

namespace abcd {

enum class BlockMode { Sequential, Random };

struct AbcdConfig {
  int m1 = 1;  // coordinates per subproblem before the switch
  int m2 = 2;  // coordinates per subproblem after the switch
  int t1 = 3;  // consecutive stalled subproblems that trigger the switch
  double switch_eps = 1e-3;
  BlockMode phase1_mode = BlockMode::Sequential;
  BlockMode phase3_mode = BlockMode::Random;
  bool enable_switch = true;
  bool enable_local = true;
  bool sqp_first = false;  // run the local optimizer before any subproblem

  // Termination when no subproblem improves the incumbent by more than
  // global_stall_eps for `patience` subproblems in a row (min(n, 6) if unset).
  bool enable_global_stall = true;
  double global_stall_eps = 1e-6;
  std::optional<int> global_stall_patience;

  double target_accuracy = 1e-4;
  std::optional<std::int64_t> max_evals;
  std::optional<std::int64_t> max_subproblems;
  std::optional<double> max_wall_seconds;

  // Per-subproblem DIRECT limits. sub_eval_cap defaults to 100 * |block|.
  std::optional<std::int64_t> sub_eval_cap;
  double sub_min_measure = 1e-6;
  int sub_stall_iters = 5;
  double sub_stall_tol = 1e-8;
  double direct_eps = 1e-4;

  std::optional<int> q;  // start-point samples, min(2n, 32) if unset
  std::uint64_t seed = 0;
  // Re-evaluate each adopted incumbent (counted) and check it matches.
  bool verify_adoption = false;

  local::LocalConfig local;

  void validate(std::size_t n) const;
  int start_samples(std::size_t n) const;
  int patience(std::size_t n) const;
};

enum class AbcdPhase { Coordinate, Local, Block, Done };

struct AbcdState {
  Point incumbent_x;
  double incumbent_f = 0.0;
  AbcdPhase phase = AbcdPhase::Coordinate;
  std::size_t cursor = 0;
  int stall_streak = 0;
  std::int64_t subproblem_index = 0;
  RandomStream block_rng;

  AbcdState(std::uint64_t seed)
      : block_rng(seed, RandomStream::Purpose::BlockChoice) {}
};

struct StartPoint {
  Point x;
  double f = 0.0;
  // Set when the budget ran out after at least one sample.
  std::optional<BudgetKind> cut_short;
};

// Splits the box into q equal slabs along its widest dimension (lowest index
// on ties), draws one uniform point per slab and keeps the best. Costs
// exactly q evaluations unless the budget runs out first, in which case the
// best sample so far comes back with cut_short set (BudgetExhausted
// propagates only if nothing was evaluated).
StartPoint choose_start(const Problem& problem, int q, RandomStream& rng,
                        EvalCounter& counter);

// Sequential: `size` indices from the cursor (wrapping), cursor advances.
// Random: uniform subset without replacement. Returned sorted ascending.
std::vector<std::size_t> select_coords(AbcdState& state, std::size_t n, std::size_t size,
                                       BlockMode mode);

// f restricted to the coordinates in idx, the rest frozen at incumbent.
Problem make_subproblem(const Problem& problem, std::span<const double> incumbent,
                        std::span<const std::size_t> idx);

struct StallStep {
  int streak = 0;
  bool switched = false;
};

// A descent of at most eps1 counts as a stall.
StallStep stall_update(int streak, double f_prev, double f_new, double eps1, int t1);

RunReport abcd_solve(const Problem& problem, const AbcdConfig& config);

}  // namespace abcd
