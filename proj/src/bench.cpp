#include "abcd/bench.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "abcd/direct.hpp"
#include "abcd/local_optimizer.hpp"
#include "abcd/testbed.hpp"

namespace abcd::bench {
namespace {

using nlohmann::json;

constexpr std::array<std::pair<Algorithm, std::string_view>, 4> kAlgorithms{{
    {Algorithm::Direct, "Direct"},
    {Algorithm::AbcdCoordinateOnly, "AbcdCoordinateOnly"},
    {Algorithm::AbcdFull, "AbcdFull"},
    {Algorithm::SqpOnly, "SqpOnly"},
}};

constexpr std::array<std::pair<Algorithm, std::string_view>, 4> kAlgorithmFlags{{
    {Algorithm::Direct, "direct"},
    {Algorithm::AbcdCoordinateOnly, "abcd-coordinate"},
    {Algorithm::AbcdFull, "abcd-full"},
    {Algorithm::SqpOnly, "sqp"},
}};

std::string_view mode_name(BlockMode m) {
  return m == BlockMode::Sequential ? "sequential" : "random";
}

BlockMode mode_from(const std::string& s) {
  if (s == "sequential") return BlockMode::Sequential;
  if (s == "random") return BlockMode::Random;
  throw ConfigError("unknown block mode '" + s + "' (expected sequential or random)");
}

RunReport run_direct(const Problem& problem, const RunSpec& spec) {
  direct::DirectConfig dc;
  dc.eps = spec.direct.eps;
  dc.max_iters = spec.direct.max_iters;
  dc.max_evals = spec.max_evals;
  dc.max_wall_seconds = spec.max_wall_seconds;
  dc.target = problem.known_optimum;
  dc.accuracy = spec.target_accuracy;
  if (spec.direct.stall) {
    dc.stall_iters = std::min(static_cast<int>(problem.dim()), 6);
    dc.stall_tol = spec.abcd.global_stall_eps;
  }
  return direct::direct_solve(problem, dc);
}

RunReport run_abcd(const Problem& problem, const RunSpec& spec, std::uint64_t seed) {
  AbcdConfig config = spec.abcd;
  config.seed = seed;
  config.max_evals = spec.max_evals;
  config.max_wall_seconds = spec.max_wall_seconds;
  config.target_accuracy = spec.target_accuracy;
  if (spec.algorithm == Algorithm::AbcdCoordinateOnly) {
    config.enable_switch = false;
    config.enable_local = false;
    config.sqp_first = false;
  }
  return abcd_solve(problem, config);
}

RunReport run_sqp(const Problem& problem, const RunSpec& spec, std::uint64_t seed) {
  const auto started = std::chrono::steady_clock::now();
  const auto deadline =
      started + std::chrono::duration_cast<EvalCounter::Clock::duration>(
                    std::chrono::duration<double>(spec.max_wall_seconds));
  EvalCounter counter(spec.max_evals, deadline);
  RunReport report;
  auto reached = [&](double f) {
    return problem.known_optimum &&
           std::abs(f - *problem.known_optimum) <= spec.target_accuracy;
  };
  try {
    RandomStream rng(seed, RandomStream::Purpose::StartPoint);
    const StartPoint start =
        choose_start(problem, spec.abcd.start_samples(problem.dim()), rng, counter);
    report.best_x = start.x;
    report.best_f = start.f;
    report.trace.push_back({counter.count(), 0, Phase::Start, start.f});
    if (reached(start.f)) {
      report.termination = Termination::TargetReached;
    } else if (start.cut_short) {
      report.termination = termination_for(*start.cut_short);
    } else {
      const auto result = local::sqp_local(problem, start.x, spec.abcd.local, counter);
      if (result.f < report.best_f) {
        report.best_f = result.f;
        report.best_x = result.x;
      }
      report.iterations = result.iterations;
      report.trace.push_back({counter.count(), 0, Phase::Local, report.best_f});
      if (reached(report.best_f)) {
        report.termination = Termination::TargetReached;
      } else {
        switch (result.status) {
          case local::LocalStatus::BudgetExhausted:
            report.termination = termination_for(*result.budget);
            break;
          case local::LocalStatus::IterCap:
            report.termination = Termination::IterBudget;
            break;
          case local::LocalStatus::Stationary:
          case local::LocalStatus::LineSearchFailure:
            report.termination = Termination::GlobalStall;
            break;
        }
      }
    }
  } catch (const BudgetExhausted& e) {
    report.termination = termination_for(e.kind());
    if (report.best_x.empty()) report.best_f = std::numeric_limits<double>::infinity();
  }
  report.evals = counter.count();
  report.elapsed_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return report;
}

double median_of(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  return v[(v.size() - 1) / 2];
}

json nullable(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

template <typename T>
void take(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

template <typename T>
void take_optional(const json& j, const char* key, std::optional<T>& out) {
  if (!j.contains(key)) return;
  if (j.at(key).is_null()) {
    out.reset();
  } else {
    out = j.at(key).get<T>();
  }
}

void reject_unknown(const json& j, std::initializer_list<std::string_view> known,
                    std::string_view where) {
  if (!j.is_object()) throw ConfigError(std::string(where) + ": expected a JSON object");
  for (const auto& item : j.items()) {
    if (std::find(known.begin(), known.end(), item.key()) == known.end()) {
      throw ConfigError(std::string(where) + ": unknown key '" + item.key() + "'");
    }
  }
}

}  // namespace

std::string_view to_string(Algorithm a) {
  for (const auto& [value, name] : kAlgorithms) {
    if (value == a) return name;
  }
  return "unknown";
}

Algorithm algorithm_from_string(std::string_view s) {
  for (const auto& [value, name] : kAlgorithms) {
    if (name == s) return value;
  }
  for (const auto& [value, name] : kAlgorithmFlags) {
    if (name == s) return value;
  }
  throw ConfigError("unknown algorithm '" + std::string(s) +
                    "' (expected direct, abcd-coordinate, abcd-full or sqp)");
}

void RunSpec::validate() const {
  const auto [problem, meta] = testbed::get_function(function, dim);
  if (repetitions < 1) throw ConfigError("run spec: repetitions must be at least 1");
  if (max_evals < 1) throw ConfigError("run spec: max_evals must be positive");
  if (!(max_wall_seconds > 0.0)) throw ConfigError("run spec: max_wall_seconds must be positive");
  if (!(target_accuracy >= 0.0)) throw ConfigError("run spec: target_accuracy must be nonnegative");
  if (!(direct.eps > 0.0)) throw ConfigError("run spec: direct.eps must be positive");
  AbcdConfig check = abcd;
  check.max_evals = max_evals;
  check.validate(problem.dim());
}

RunRecord run_repetition(const RunSpec& spec, int repetition) {
  RunRecord record;
  record.function = spec.function;
  record.dim = spec.dim;
  record.algorithm = spec.algorithm;
  record.repetition = repetition;
  record.seed = spec.seed + static_cast<std::uint64_t>(repetition);
  try {
    const auto [problem, meta] = testbed::get_function(spec.function, spec.dim);
    record.function = meta.name;
    record.f_star = meta.f_star;
    switch (spec.algorithm) {
      case Algorithm::Direct:
        record.report = run_direct(problem, spec);
        break;
      case Algorithm::AbcdCoordinateOnly:
      case Algorithm::AbcdFull:
        record.report = run_abcd(problem, spec, record.seed);
        break;
      case Algorithm::SqpOnly:
        record.report = run_sqp(problem, spec, record.seed);
        break;
    }
  } catch (const std::exception& e) {
    record.error = e.what();
    record.report.best_f = std::numeric_limits<double>::infinity();
  }
  return record;
}

std::vector<RunRecord> run_one(const RunSpec& spec,
                               const std::function<void(const RunRecord&)>& on_complete) {
  spec.validate();
  std::vector<RunRecord> records;
  for (int r = 0; r < spec.repetitions; ++r) {
    records.push_back(run_repetition(spec, r));
    if (on_complete) on_complete(records.back());
  }
  return records;
}

SuiteReport aggregate(std::vector<RunRecord> runs) {
  SuiteReport suite;
  using Key = std::tuple<std::string, int, Algorithm>;
  std::vector<Key> order;
  std::map<Key, std::vector<const RunRecord*>> groups;
  for (const RunRecord& r : runs) {
    Key key{r.function, r.dim, r.algorithm};
    auto [it, inserted] = groups.try_emplace(key);
    if (inserted) order.push_back(key);
    it->second.push_back(&r);
  }

  std::vector<std::pair<std::string, int>> instances;
  for (const Key& key : order) {
    const auto& members = groups.at(key);
    SuiteRow row;
    row.function = std::get<0>(key);
    row.dim = std::get<1>(key);
    row.algorithm = std::get<2>(key);
    row.repetitions = static_cast<int>(members.size());
    std::vector<double> evals, best;
    for (const RunRecord* r : members) {
      const bool ok = r->error.empty() && r->report.termination == Termination::TargetReached;
      row.successes += ok ? 1 : 0;
      row.errors += r->error.empty() ? 0 : 1;
      evals.push_back(ok ? static_cast<double>(r->report.evals)
                         : std::numeric_limits<double>::infinity());
      best.push_back(r->report.best_f);
    }
    const double med = median_of(evals);
    if (std::isfinite(med)) row.median_evals = med;
    row.median_best_f = median_of(best);
    suite.rows.push_back(row);
    const std::pair<std::string, int> inst{row.function, row.dim};
    if (std::find(instances.begin(), instances.end(), inst) == instances.end()) {
      instances.push_back(inst);
    }
  }

  std::set<Algorithm> algorithms;
  for (const SuiteRow& row : suite.rows) algorithms.insert(row.algorithm);
  std::map<Algorithm, int> wins;
  for (const auto& inst : instances) {
    std::optional<double> best;
    for (const SuiteRow& row : suite.rows) {
      if (row.function == inst.first && row.dim == inst.second && row.median_evals &&
          (!best || *row.median_evals < *best)) {
        best = row.median_evals;
      }
    }
    if (!best) continue;
    for (const SuiteRow& row : suite.rows) {
      if (row.function == inst.first && row.dim == inst.second && row.median_evals &&
          *row.median_evals == *best) {
        ++wins[row.algorithm];
      }
    }
  }
  suite.instances = static_cast<int>(instances.size());
  for (Algorithm a : algorithms) {
    suite.winning_ratio[a] =
        suite.instances == 0 ? 0.0 : static_cast<double>(wins[a]) / suite.instances;
  }
  suite.runs = std::move(runs);
  return suite;
}

SuiteReport run_suite(const std::vector<RunSpec>& specs, int parallelism,
                      const std::function<void(const RunRecord&)>& on_complete) {
  if (specs.empty()) throw ConfigError("suite: no run specs given");
  for (const RunSpec& spec : specs) spec.validate();

  struct Job {
    const RunSpec* spec;
    int repetition;
  };
  std::vector<Job> jobs;
  for (const RunSpec& spec : specs) {
    for (int r = 0; r < spec.repetitions; ++r) jobs.push_back({&spec, r});
  }

  std::vector<RunRecord> results(jobs.size());
  std::vector<char> done(jobs.size(), 0);
  std::size_t flushed = 0;
  std::mutex writer;
  std::atomic<std::size_t> next{0};

  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= jobs.size()) return;
      RunRecord record = run_repetition(*jobs[i].spec, jobs[i].repetition);
      std::lock_guard lock(writer);
      results[i] = std::move(record);
      done[i] = 1;
      while (flushed < jobs.size() && done[flushed]) {
        if (on_complete) on_complete(results[flushed]);
        ++flushed;
      }
    }
  };

  const int threads = std::max(1, std::min<int>(parallelism, static_cast<int>(jobs.size())));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
  }
  return aggregate(std::move(results));
}

std::string format_real(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  std::array<char, 64> buf{};
  const auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), end);
}

void export_trace(const RunReport& report, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open trace file '" + path.string() + "' for writing");
  out << "eval,phase,f\n";
  for (const TraceRow& row : report.trace) {
    out << row.eval << ',' << to_string(row.phase) << ',' << format_real(row.f) << '\n';
  }
  out.flush();
  if (!out) throw IoError("failed writing trace file '" + path.string() + "'");
}

std::vector<TraceRow> read_trace(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open trace file '" + path.string() + "'");
  std::string line;
  if (!std::getline(in, line) || line != "eval,phase,f") {
    throw IoError("trace file '" + path.string() + "' lacks the eval,phase,f header");
  }
  std::vector<TraceRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto a = line.find(',');
    const auto b = line.find(',', a + 1);
    if (a == std::string::npos || b == std::string::npos) {
      throw IoError("malformed trace row in '" + path.string() + "': " + line);
    }
    TraceRow row;
    std::from_chars(line.data(), line.data() + a, row.eval);
    row.phase = phase_from_string(std::string_view(line).substr(a + 1, b - a - 1));
    const char* first = line.data() + b + 1;
    const char* last = line.data() + line.size();
    if (std::from_chars(first, last, row.f).ec != std::errc{}) {
      throw IoError("malformed value in '" + path.string() + "': " + line);
    }
    rows.push_back(row);
  }
  return rows;
}

json to_json(const RunRecord& record) {
  json j;
  j["function"] = record.function;
  j["dim"] = record.dim;
  j["algorithm"] = to_string(record.algorithm);
  j["repetition"] = record.repetition;
  j["seed"] = record.seed;
  j["f_star"] = nullable(record.f_star);
  const RunReport& r = record.report;
  j["best_f"] = std::isfinite(r.best_f) ? json(r.best_f) : json(nullptr);
  j["best_x"] = r.best_x;
  j["evals"] = r.evals;
  j["iterations"] = r.iterations;
  j["subproblems"] = r.subproblems;
  j["termination"] = to_string(r.termination);
  j["elapsed_seconds"] = r.elapsed_seconds;
  j["trace_rows"] = r.trace.size();
  j["error"] = record.error.empty() ? json(nullptr) : json(record.error);
  return j;
}

json to_json(const RunSpec& spec) {
  const AbcdConfig& a = spec.abcd;
  json local = {{"grad_step", a.local.grad_step},
                {"max_iters", a.local.max_iters},
                {"pg_tol", a.local.pg_tol},
                {"f_tol", a.local.f_tol},
                {"armijo_c", a.local.armijo_c},
                {"max_backtracks", a.local.max_backtracks}};
  json abcd = {{"m1", a.m1},
               {"m2", a.m2},
               {"t1", a.t1},
               {"switch_eps", a.switch_eps},
               {"phase1_mode", mode_name(a.phase1_mode)},
               {"phase3_mode", mode_name(a.phase3_mode)},
               {"enable_switch", a.enable_switch},
               {"enable_local", a.enable_local},
               {"sqp_first", a.sqp_first},
               {"enable_global_stall", a.enable_global_stall},
               {"global_stall_eps", a.global_stall_eps},
               {"global_stall_patience", a.global_stall_patience ? json(*a.global_stall_patience) : json(nullptr)},
               {"sub_eval_cap", a.sub_eval_cap ? json(*a.sub_eval_cap) : json(nullptr)},
               {"sub_min_measure", a.sub_min_measure},
               {"sub_stall_iters", a.sub_stall_iters},
               {"sub_stall_tol", a.sub_stall_tol},
               {"direct_eps", a.direct_eps},
               {"q", a.q ? json(*a.q) : json(nullptr)},
               {"local", local}};
  json direct = {{"eps", spec.direct.eps},
                 {"max_iters", spec.direct.max_iters ? json(*spec.direct.max_iters) : json(nullptr)},
                 {"stall", spec.direct.stall}};
  return {{"function", spec.function},
          {"dim", spec.dim},
          {"algorithm", to_string(spec.algorithm)},
          {"max_evals", spec.max_evals},
          {"max_wall_seconds", spec.max_wall_seconds},
          {"target_accuracy", spec.target_accuracy},
          {"seed", spec.seed},
          {"repetitions", spec.repetitions},
          {"abcd", abcd},
          {"direct", direct}};
}

RunSpec spec_from_json(const json& j, RunSpec base) {
  try {
    reject_unknown(j,
                   {"function", "dim", "algorithm", "max_evals", "max_wall_seconds",
                    "target_accuracy", "seed", "repetitions", "abcd", "direct"},
                   "run spec");
    take(j, "function", base.function);
    take(j, "dim", base.dim);
    if (j.contains("algorithm")) {
      base.algorithm = algorithm_from_string(j.at("algorithm").get<std::string>());
    }
    take(j, "max_evals", base.max_evals);
    take(j, "max_wall_seconds", base.max_wall_seconds);
    take(j, "target_accuracy", base.target_accuracy);
    take(j, "seed", base.seed);
    take(j, "repetitions", base.repetitions);
    if (j.contains("abcd")) {
      const json& a = j.at("abcd");
      reject_unknown(a,
                     {"m1", "m2", "t1", "switch_eps", "phase1_mode", "phase3_mode",
                      "enable_switch", "enable_local", "sqp_first", "enable_global_stall",
                      "global_stall_eps", "global_stall_patience", "sub_eval_cap",
                      "sub_min_measure", "sub_stall_iters", "sub_stall_tol", "direct_eps", "q",
                      "local"},
                     "run spec abcd");
      AbcdConfig& c = base.abcd;
      take(a, "m1", c.m1);
      take(a, "m2", c.m2);
      take(a, "t1", c.t1);
      take(a, "switch_eps", c.switch_eps);
      if (a.contains("phase1_mode")) c.phase1_mode = mode_from(a.at("phase1_mode").get<std::string>());
      if (a.contains("phase3_mode")) c.phase3_mode = mode_from(a.at("phase3_mode").get<std::string>());
      take(a, "enable_switch", c.enable_switch);
      take(a, "enable_local", c.enable_local);
      take(a, "sqp_first", c.sqp_first);
      take(a, "enable_global_stall", c.enable_global_stall);
      take(a, "global_stall_eps", c.global_stall_eps);
      take_optional(a, "global_stall_patience", c.global_stall_patience);
      take_optional(a, "sub_eval_cap", c.sub_eval_cap);
      take(a, "sub_min_measure", c.sub_min_measure);
      take(a, "sub_stall_iters", c.sub_stall_iters);
      take(a, "sub_stall_tol", c.sub_stall_tol);
      take(a, "direct_eps", c.direct_eps);
      take_optional(a, "q", c.q);
      if (a.contains("local")) {
        const json& l = a.at("local");
        reject_unknown(l, {"grad_step", "max_iters", "pg_tol", "f_tol", "armijo_c", "max_backtracks"},
                       "run spec abcd.local");
        take(l, "grad_step", c.local.grad_step);
        take(l, "max_iters", c.local.max_iters);
        take(l, "pg_tol", c.local.pg_tol);
        take(l, "f_tol", c.local.f_tol);
        take(l, "armijo_c", c.local.armijo_c);
        take(l, "max_backtracks", c.local.max_backtracks);
      }
    }
    if (j.contains("direct")) {
      const json& d = j.at("direct");
      reject_unknown(d, {"eps", "max_iters", "stall"}, "run spec direct");
      take(d, "eps", base.direct.eps);
      take_optional(d, "max_iters", base.direct.max_iters);
      take(d, "stall", base.direct.stall);
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("run spec: ") + e.what());
  }
  return base;
}

}  // namespace abcd::bench
