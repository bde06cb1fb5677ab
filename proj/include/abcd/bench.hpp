#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "abcd/orchestrator.hpp"
#include "abcd/report.hpp"

namespace abcd::bench {

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Algorithm { Direct, AbcdCoordinateOnly, AbcdFull, SqpOnly };

std::string_view to_string(Algorithm a);
// Accepts the enum spelling or the CLI spelling (direct, abcd-coordinate,
// abcd-full, sqp).
Algorithm algorithm_from_string(std::string_view s);

struct DirectSettings {
  double eps = 1e-4;
  std::optional<std::int64_t> max_iters;
  // Also stop when f_min improves by at most 1e-6 for min(n, 6)
  // consecutive iterations. Off by default: plain DIRECT routinely spends
  // many iterations on a plateau before its next improvement.
  bool stall = false;
};

struct RunSpec {
  std::string function;
  int dim = 0;
  Algorithm algorithm = Algorithm::AbcdFull;
  AbcdConfig abcd;
  DirectSettings direct;
  std::int64_t max_evals = 200'000;
  double max_wall_seconds = 20.0;
  double target_accuracy = 1e-4;
  std::uint64_t seed = 0;
  int repetitions = 5;

  // Registry lookup plus budget checks; throws ConfigError.
  void validate() const;
};

struct RunRecord {
  std::string function;
  int dim = 0;
  Algorithm algorithm = Algorithm::AbcdFull;
  int repetition = 0;
  std::uint64_t seed = 0;
  std::optional<double> f_star;
  RunReport report;
  std::string error;  // nonempty when the run itself failed
};

// One repetition with seed = spec.seed + repetition.
RunRecord run_repetition(const RunSpec& spec, int repetition);

// All repetitions in order; `on_complete` sees each record as it finishes.
std::vector<RunRecord> run_one(const RunSpec& spec,
                               const std::function<void(const RunRecord&)>& on_complete = {});

struct SuiteRow {
  std::string function;
  int dim = 0;
  Algorithm algorithm = Algorithm::AbcdFull;
  int repetitions = 0;
  int successes = 0;
  int errors = 0;
  // Median of evals-to-target where failed repetitions count as infinite;
  // empty unless more than half the repetitions succeeded.
  std::optional<double> median_evals;
  double median_best_f = 0.0;
};

struct SuiteReport {
  std::vector<RunRecord> runs;
  std::vector<SuiteRow> rows;
  // Fraction of (function, dim) instances an algorithm wins: it attains the
  // target with the fewest median evaluations (ties all win).
  std::map<Algorithm, double> winning_ratio;
  int instances = 0;
};

SuiteReport aggregate(std::vector<RunRecord> runs);

// Runs every repetition of every spec on up to `parallelism` threads.
// Records reach `on_complete` in spec order regardless of finishing order.
SuiteReport run_suite(const std::vector<RunSpec>& specs, int parallelism,
                      const std::function<void(const RunRecord&)>& on_complete = {});

// Shortest decimal text that parses back to the same double.
std::string format_real(double v);

// CSV `eval,phase,f`, LF endings.
void export_trace(const RunReport& report, const std::filesystem::path& path);
std::vector<TraceRow> read_trace(const std::filesystem::path& path);

nlohmann::json to_json(const RunRecord& record);
nlohmann::json to_json(const RunSpec& spec);
// Overlays `j` onto `base`; unknown keys raise ConfigError.
RunSpec spec_from_json(const nlohmann::json& j, RunSpec base = {});

}  // namespace abcd::bench
