#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include "abcd/bench.hpp"
#include "abcd/testbed.hpp"

using namespace abcd;
using namespace abcd::bench;

namespace {

std::filesystem::path temp_file(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("abcd_bench_test_" + name);
}

RunSpec make_spec(std::string fn, int dim, Algorithm algo) {
  RunSpec s;
  s.function = std::move(fn);
  s.dim = dim;
  s.algorithm = algo;
  return s;
}

RunRecord fake(std::string fn, Algorithm algo, Termination t, std::int64_t evals) {
  RunRecord r;
  r.function = std::move(fn);
  r.dim = 2;
  r.algorithm = algo;
  r.report.termination = t;
  r.report.evals = evals;
  r.report.best_f = t == Termination::TargetReached ? 0.0 : 1.0;
  return r;
}

bool monotone(const RunReport& r) {
  for (std::size_t i = 1; i < r.trace.size(); ++i) {
    if (r.trace[i].f > r.trace[i - 1].f) return false;
  }
  return true;
}

}  // namespace

TEST_SUITE("bench") {

TEST_CASE("algorithm names") {
  for (Algorithm a : {Algorithm::Direct, Algorithm::AbcdCoordinateOnly, Algorithm::AbcdFull,
                      Algorithm::SqpOnly}) {
    CHECK(algorithm_from_string(to_string(a)) == a);
  }
  CHECK(algorithm_from_string("abcd-full") == Algorithm::AbcdFull);
  CHECK(algorithm_from_string("sqp") == Algorithm::SqpOnly);
  CHECK_THROWS_AS(algorithm_from_string("soo"), ConfigError);
}

TEST_CASE("spec validation") {
  RunSpec s = make_spec("Sphere", 6, Algorithm::AbcdFull);
  CHECK_NOTHROW(s.validate());
  s.repetitions = 0;
  CHECK_THROWS_AS(s.validate(), ConfigError);
  s = make_spec("Sphere", 6, Algorithm::AbcdFull);
  s.max_evals = 0;
  CHECK_THROWS_AS(s.validate(), ConfigError);
  s = make_spec("Sphere", 6, Algorithm::AbcdFull);
  s.max_wall_seconds = -1.0;
  CHECK_THROWS_AS(s.validate(), ConfigError);
  CHECK_THROWS_AS(make_spec("Nope", 2, Algorithm::Direct).validate(), ConfigError);
  CHECK_THROWS_AS(make_spec("H3", 5, Algorithm::Direct).validate(), ConfigError);
  // Errors surface before any evaluation.
  CHECK_THROWS_AS(run_one(make_spec("H3", 5, Algorithm::Direct)), ConfigError);
}

TEST_CASE("max_evals = 1 gives exactly one evaluation") {
  for (Algorithm a : {Algorithm::Direct, Algorithm::AbcdCoordinateOnly, Algorithm::AbcdFull,
                      Algorithm::SqpOnly}) {
    CAPTURE(to_string(a));
    RunSpec s = make_spec("Rosenbrock", 4, a);
    s.max_evals = 1;
    s.repetitions = 2;
    const auto records = run_one(s);
    REQUIRE(records.size() == 2);
    for (const auto& r : records) {
      CHECK(r.error.empty());
      CHECK(r.report.evals == 1);
      CHECK(r.report.termination == Termination::EvalBudget);
      CHECK(std::isfinite(r.report.best_f));
    }
  }
}

TEST_CASE("sphere n=6 AbcdFull reaches the target on every repetition") {
  const auto records = run_one(make_spec("Sphere", 6, Algorithm::AbcdFull));
  REQUIRE(records.size() == 5);
  for (std::size_t i = 0; i < records.size(); ++i) {
    CHECK(records[i].seed == i);
    CHECK(records[i].repetition == int(i));
    CHECK(records[i].report.termination == Termination::TargetReached);
    CHECK(std::abs(records[i].report.best_f) <= 1e-4);
    CHECK(monotone(records[i].report));
  }
}

TEST_CASE("ackley n=12 SqpOnly stalls away from the optimum") {
  RunSpec s = make_spec("Ackley", 12, Algorithm::SqpOnly);
  s.repetitions = 3;
  for (const auto& r : run_one(s)) {
    CHECK(r.report.termination == Termination::GlobalStall);
    CHECK(r.report.best_f > 1e-4);
  }
}

TEST_CASE("rosenbrock n=12 AbcdFull trace hands over to the local phase") {
  RunSpec s = make_spec("Rosenbrock", 12, Algorithm::AbcdFull);
  s.repetitions = 1;
  const RunRecord r = run_one(s).front();
  bool handover = false;
  for (std::size_t i = 1; i < r.report.trace.size(); ++i) {
    handover = handover || (r.report.trace[i - 1].phase == Phase::Coordinate &&
                            r.report.trace[i].phase == Phase::Local);
  }
  CHECK(handover);
  CHECK(monotone(r.report));
}

TEST_CASE("determinism of identical specs") {
  RunSpec s = make_spec("Levy", 6, Algorithm::AbcdFull);
  s.repetitions = 2;
  const auto a = run_one(s);
  const auto b = run_one(s);
  for (std::size_t i = 0; i < a.size(); ++i) {
    auto ja = to_json(a[i]);
    auto jb = to_json(b[i]);
    ja.erase("elapsed_seconds");
    jb.erase("elapsed_seconds");
    CHECK(ja.dump() == jb.dump());
    CHECK(a[i].report.trace.size() == b[i].report.trace.size());
  }
}

TEST_CASE("format_real round trips") {
  for (double v : {0.0, -0.0, 0.1, 1.0 / 3.0, -186.7309088310239, 1e-300, 6.02214076e23}) {
    CHECK(std::stod(format_real(v)) == v);
  }
  CHECK(format_real(0.1) == "0.1");
  CHECK(format_real(std::numeric_limits<double>::infinity()) == "inf");
}

TEST_CASE("export_trace writes and re-reads identical rows") {
  RunSpec s = make_spec("SHU", 2, Algorithm::AbcdFull);
  s.repetitions = 1;
  const RunRecord r = run_one(s).front();
  const auto path = temp_file("shu.csv");
  export_trace(r.report, path);
  std::ifstream in(path, std::ios::binary);
  std::stringstream buf;
  buf << in.rdbuf();
  const std::string text = buf.str();
  CHECK(text.rfind("eval,phase,f\n", 0) == 0);
  CHECK(text.find('\r') == std::string::npos);
  const auto rows = read_trace(path);
  REQUIRE(rows.size() == r.report.trace.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    CHECK(rows[i].eval == r.report.trace[i].eval);
    CHECK(rows[i].phase == r.report.trace[i].phase);
    CHECK(rows[i].f == r.report.trace[i].f);
  }
  std::filesystem::remove(path);
}

TEST_CASE("constant function trace has a single row") {
  const Problem flat{[](std::span<const double>) { return 2.5; },
                     Bounds{{0.0, 0.0}, {1.0, 1.0}}, std::nullopt, "flat"};
  AbcdConfig cfg;
  cfg.max_evals = 1;
  const RunReport r = abcd_solve(flat, cfg);
  const auto path = temp_file("flat.csv");
  export_trace(r, path);
  std::ifstream in(path, std::ios::binary);
  std::string header, row, extra;
  std::getline(in, header);
  std::getline(in, row);
  CHECK(header == "eval,phase,f");
  CHECK(row == "1,start,2.5");
  CHECK_FALSE(static_cast<bool>(std::getline(in, extra)));
  std::filesystem::remove(path);
}

TEST_CASE("unwritable trace path raises IoError naming the path") {
  RunReport r;
  r.trace.push_back({1, 0, Phase::Start, 1.0});
  const std::filesystem::path bad = "/nonexistent-dir/abc/trace.csv";
  try {
    export_trace(r, bad);
    FAIL("expected IoError");
  } catch (const IoError& e) {
    CHECK(std::string(e.what()).find(bad.string()) != std::string::npos);
  }
  CHECK_THROWS_AS(read_trace("/nonexistent-dir/none.csv"), IoError);
}

TEST_CASE("spec_from_json overlays and rejects unknown keys") {
  const auto j = nlohmann::json::parse(R"({
    "function": "Rastrigin", "dim": 12, "algorithm": "Direct", "seed": 9,
    "abcd": {"m1": 2, "local": {"max_iters": 50}}, "direct": {"eps": 0.001}
  })");
  const RunSpec s = spec_from_json(j);
  CHECK(s.function == "Rastrigin");
  CHECK(s.dim == 12);
  CHECK(s.algorithm == Algorithm::Direct);
  CHECK(s.seed == 9);
  CHECK(s.abcd.m1 == 2);
  CHECK(s.abcd.local.max_iters == 50);
  CHECK(s.direct.eps == 0.001);
  CHECK(s.repetitions == 5);

  CHECK_THROWS_AS(spec_from_json(nlohmann::json::parse(R"({"functon": "Sphere"})")), ConfigError);
  CHECK_THROWS_AS(spec_from_json(nlohmann::json::parse(R"({"abcd": {"mm": 1}})")), ConfigError);
  CHECK_THROWS_AS(spec_from_json(nlohmann::json::parse(R"({"abcd": {"local": {"x": 1}}})")),
                  ConfigError);
  CHECK_THROWS_AS(spec_from_json(nlohmann::json::parse(R"({"dim": "six"})")), ConfigError);

  // to_json and back is the identity on the fields it carries.
  const RunSpec back = spec_from_json(to_json(s));
  CHECK(to_json(back).dump() == to_json(s).dump());
}

TEST_CASE("aggregate: single entrant") {
  auto win = aggregate({fake("A", Algorithm::AbcdFull, Termination::TargetReached, 10)});
  CHECK(win.instances == 1);
  CHECK(win.winning_ratio.at(Algorithm::AbcdFull) == 1.0);
  auto lose = aggregate({fake("A", Algorithm::AbcdFull, Termination::EvalBudget, 10)});
  CHECK(lose.winning_ratio.at(Algorithm::AbcdFull) == 0.0);
}

TEST_CASE("aggregate: a failing algorithm never wins") {
  std::vector<RunRecord> runs;
  for (const char* fn : {"A", "B"}) {
    runs.push_back(fake(fn, Algorithm::AbcdFull, Termination::TargetReached, 500));
    runs.push_back(fake(fn, Algorithm::Direct, Termination::GlobalStall, 5));
  }
  const auto rep = aggregate(runs);
  CHECK(rep.instances == 2);
  CHECK(rep.winning_ratio.at(Algorithm::AbcdFull) == 1.0);
  CHECK(rep.winning_ratio.at(Algorithm::Direct) == 0.0);
}

TEST_CASE("aggregate: ties all win and medians use failures as infinite") {
  std::vector<RunRecord> runs;
  runs.push_back(fake("A", Algorithm::AbcdFull, Termination::TargetReached, 100));
  runs.push_back(fake("A", Algorithm::Direct, Termination::TargetReached, 100));
  for (std::int64_t e : {10, 20}) runs.push_back(fake("B", Algorithm::Direct, Termination::TargetReached, e));
  runs.push_back(fake("B", Algorithm::Direct, Termination::EvalBudget, 1));
  const auto rep = aggregate(runs);
  CHECK(rep.winning_ratio.at(Algorithm::AbcdFull) == 0.5);
  CHECK(rep.winning_ratio.at(Algorithm::Direct) == 1.0);
  for (const auto& row : rep.rows) {
    if (row.function == "B") {
      CHECK(row.repetitions == 3);
      CHECK(row.successes == 2);
      REQUIRE(row.median_evals);
      CHECK(*row.median_evals == 20.0);
    }
  }
}

TEST_CASE("run_suite is deterministic, ordered and sound under parallelism") {
  std::vector<RunSpec> specs;
  for (const char* fn : {"Sphere", "Levy", "Rastrigin"}) {
    for (Algorithm a : {Algorithm::AbcdFull, Algorithm::Direct}) {
      RunSpec s = make_spec(fn, 6, a);
      s.repetitions = 2;
      s.max_evals = 20000;
      specs.push_back(s);
    }
  }
  std::vector<std::string> seen;
  const auto par = run_suite(specs, 4, [&](const RunRecord& r) {
    seen.push_back(r.function + std::string(to_string(r.algorithm)) + std::to_string(r.repetition));
  });
  const auto seq = run_suite(specs, 1);
  REQUIRE(par.runs.size() == 12);
  REQUIRE(seen.size() == 12);
  for (std::size_t i = 0; i < par.runs.size(); ++i) {
    const RunRecord& r = par.runs[i];
    CHECK(seen[i] == r.function + std::string(to_string(r.algorithm)) + std::to_string(r.repetition));
    auto a = to_json(r);
    auto b = to_json(seq.runs[i]);
    a.erase("elapsed_seconds");
    b.erase("elapsed_seconds");
    CHECK(a.dump() == b.dump());
    CHECK(monotone(r.report));
  }
  for (const auto& row : par.rows) {
    int hits = 0;
    for (const auto& r : par.runs) {
      if (r.function == row.function && r.dim == row.dim && r.algorithm == row.algorithm &&
          r.report.termination == Termination::TargetReached) {
        ++hits;
      }
    }
    CHECK(row.successes == hits);
  }
}

TEST_CASE("suite rejects an invalid spec before running anything") {
  RunSpec good = make_spec("Sphere", 2, Algorithm::Direct);
  RunSpec bad = make_spec("Sphere", 2, Algorithm::AbcdFull);
  bad.abcd.m1 = 7;  // exceeds the dimension
  int calls = 0;
  CHECK_THROWS_AS(run_suite({good, bad}, 2, [&](const RunRecord&) { ++calls; }), ConfigError);
  CHECK(calls == 0);
}

}
