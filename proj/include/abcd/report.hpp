#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "abcd/problem.hpp"

namespace abcd {

enum class Termination {
  TargetReached,
  GlobalStall,
  TimeBudget,
  EvalBudget,
  IterBudget,
  // Subproblem-only stop: every rectangle fell below the measure floor.
  MeasureFloor,
};

enum class Phase { Start, Direct, Coordinate, Local, Block };

std::string_view to_string(Termination t);
std::string_view to_string(Phase p);
Termination termination_from_string(std::string_view s);
Phase phase_from_string(std::string_view s);

// One convergence sample. `step` is the DIRECT iteration for plain DIRECT
// runs and the subproblem index for coordinate runs.
struct TraceRow {
  std::int64_t eval = 0;
  std::int64_t step = 0;
  Phase phase = Phase::Direct;
  double f = 0.0;
};

struct RunReport {
  double best_f = 0.0;
  Point best_x;
  std::int64_t evals = 0;
  std::int64_t iterations = 0;
  std::int64_t subproblems = 0;
  double elapsed_seconds = 0.0;
  Termination termination = Termination::IterBudget;
  std::vector<TraceRow> trace;
};

Termination termination_for(BudgetKind kind);

}  // namespace abcd
