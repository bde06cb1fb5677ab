#include "abcd/report.hpp"

#include <array>
#include <stdexcept>
#include <utility>

namespace abcd {
namespace {

constexpr std::array<std::pair<Termination, std::string_view>, 6> kTerminations{{
    {Termination::TargetReached, "TargetReached"},
    {Termination::GlobalStall, "GlobalStall"},
    {Termination::TimeBudget, "TimeBudget"},
    {Termination::EvalBudget, "EvalBudget"},
    {Termination::IterBudget, "IterBudget"},
    {Termination::MeasureFloor, "MeasureFloor"},
}};

constexpr std::array<std::pair<Phase, std::string_view>, 5> kPhases{{
    {Phase::Start, "start"},
    {Phase::Direct, "direct"},
    {Phase::Coordinate, "coordinate"},
    {Phase::Local, "local"},
    {Phase::Block, "block"},
}};

}  // namespace

std::string_view to_string(Termination t) {
  for (const auto& [value, name] : kTerminations) {
    if (value == t) return name;
  }
  return "unknown";
}

std::string_view to_string(Phase p) {
  for (const auto& [value, name] : kPhases) {
    if (value == p) return name;
  }
  return "unknown";
}

Termination termination_from_string(std::string_view s) {
  for (const auto& [value, name] : kTerminations) {
    if (name == s) return value;
  }
  throw std::invalid_argument("unknown termination '" + std::string(s) + "'");
}

Phase phase_from_string(std::string_view s) {
  for (const auto& [value, name] : kPhases) {
    if (name == s) return value;
  }
  throw std::invalid_argument("unknown phase '" + std::string(s) + "'");
}

Termination termination_for(BudgetKind kind) {
  return kind == BudgetKind::Evaluations ? Termination::EvalBudget
                                         : Termination::TimeBudget;
}

}  // namespace abcd
