#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "abcd/direct.hpp"
#include "abcd/testbed.hpp"
#include "oracles.hpp"

using namespace abcd;
using namespace abcd::direct;

namespace {

Problem make(Objective f, std::size_t n, double lo = 0.0, double hi = 1.0) {
  return Problem{std::move(f), Bounds{Point(n, lo), Point(n, hi)}, std::nullopt, "test"};
}

PartitionState seeded(const NormalizedProblem& np, EvalCounter& counter) {
  PartitionState state(np.dim());
  state.add_root(np.evaluate(Point(np.dim(), 0.5), counter));
  return state;
}

}  // namespace

TEST_SUITE("direct") {

TEST_CASE("measure of simple rectangles") {
  CHECK(measure(std::vector<int>{0, 0}) == doctest::Approx(0.5 * std::sqrt(2.0)).epsilon(1e-15));
  CHECK(measure(std::vector<int>{1}) == doctest::Approx(1.0 / 6.0).epsilon(1e-15));
  CHECK(measure(std::vector<int>{1, 0, 0}) ==
        doctest::Approx(0.5 * std::sqrt(1.0 / 9.0 + 2.0)).epsilon(1e-15));
  CHECK(balanced_measure(3, 1) == doctest::Approx(0.7264832).epsilon(1e-7));
  for (int n = 1; n <= 6; ++n) {
    for (int r = 0; r <= 3 * n; ++r) {
      CHECK(std::abs(balanced_measure(n, r) - oracle::closed_form_measure(n, r)) <= 1e-15);
    }
  }
}

TEST_CASE("measure keys separate distinct measures and merge equal ones") {
  CHECK(measure_key(measure(std::vector<int>{1, 0})) == measure_key(measure(std::vector<int>{0, 1})));
  CHECK(measure_key(balanced_measure(2, 1)) != measure_key(balanced_measure(2, 2)));
}

TEST_CASE("one-dimensional trisection") {
  const NormalizedProblem np = normalize(make([](std::span<const double> x) { return x[0]; }, 1));
  EvalCounter counter;
  PartitionState state = seeded(np, counter);
  const auto children = sample_and_divide(0, state, np, counter);
  CHECK(counter.count() == 3);
  REQUIRE(children.size() == 2);
  std::vector<double> centers;
  for (int id = 0; id < static_cast<int>(state.size()); ++id) {
    centers.push_back(state.center(id)[0]);
    CHECK(state.levels(id)[0] == 1);
  }
  std::sort(centers.begin(), centers.end());
  CHECK(centers[0] == doctest::Approx(1.0 / 6.0));
  CHECK(centers[1] == doctest::Approx(0.5));
  CHECK(centers[2] == doctest::Approx(5.0 / 6.0));
  CHECK(state.f_min() == doctest::Approx(1.0 / 6.0));
}

TEST_CASE("division order follows the best sampled value per axis") {
  // f = x1: w1 = 1/6 beats w2 = 1/2, so axis 1 is split first and its
  // children keep full width along axis 2.
  const NormalizedProblem np = normalize(make([](std::span<const double> x) { return x[0]; }, 2));
  EvalCounter counter;
  PartitionState state = seeded(np, counter);
  sample_and_divide(0, state, np, counter);
  CHECK(counter.count() == 5);
  REQUIRE(state.size() == 5);
  struct Expect {
    double c0, c1;
    int l0, l1;
  };
  const std::vector<Expect> expect{{1.0 / 6, 0.5, 1, 0},
                                   {5.0 / 6, 0.5, 1, 0},
                                   {0.5, 1.0 / 6, 1, 1},
                                   {0.5, 5.0 / 6, 1, 1},
                                   {0.5, 0.5, 1, 1}};
  for (const Expect& e : expect) {
    bool found = false;
    for (int id = 0; id < 5; ++id) {
      const auto c = state.center(id);
      const auto l = state.levels(id);
      if (std::abs(c[0] - e.c0) < 1e-15 && std::abs(c[1] - e.c1) < 1e-15 && l[0] == e.l0 &&
          l[1] == e.l1) {
        found = true;
      }
    }
    CHECK_MESSAGE(found, "missing rectangle at (" << e.c0 << ", " << e.c1 << ")");
  }
  oracle::TilingTracker tiling;
  CHECK(tiling.check(state).ok);
}

TEST_CASE("each axis division costs two evaluations") {
  for (std::size_t n = 1; n <= 5; ++n) {
    const NormalizedProblem np = normalize(make(oracle::noise(n), n));
    EvalCounter counter;
    PartitionState state = seeded(np, counter);
    const auto before = counter.count();
    sample_and_divide(0, state, np, counter);
    CHECK(counter.count() - before == static_cast<std::int64_t>(2 * n));
    CHECK(state.size() == 2 * n + 1);
  }
}

TEST_CASE("budget exhaustion mid-sampling leaves the partition untouched") {
  const NormalizedProblem np = normalize(make(oracle::noise(3), 3));
  EvalCounter counter(4);
  PartitionState state = seeded(np, counter);
  CHECK_THROWS_AS(sample_and_divide(0, state, np, counter), BudgetExhausted);
  CHECK(state.size() == 1);
  CHECK(state.levels(0)[0] == 0);
  CHECK(state.groups().size() == 1);
}

TEST_CASE("identify_poh small cases") {
  const NormalizedProblem np = normalize(make(oracle::noise(1), 2));
  EvalCounter counter;
  PartitionState state = seeded(np, counter);
  CHECK(identify_poh(state, 1e-4) == std::vector<int>{0});

  // Equal measures: only the lower value can be potentially optimal.
  std::vector<HullPoint> pts{{0.3, 1.0, 0}};
  CHECK(potentially_optimal(pts, 1.0, 1e-4) == std::vector<std::size_t>{0});
}

TEST_CASE("three-group example matches the K grid oracle") {
  const std::vector<HullPoint> pts{{0.1, 5.0, 0}, {0.2, 4.9999, 1}, {0.3, 1.0, 2}};
  const auto got = potentially_optimal(pts, 1.0, 1e-4);
  std::set<std::size_t> brute;
  for (double k : oracle::k_grid()) {
    double best = INFINITY;
    for (const auto& p : pts) best = std::min(best, p.f - k * p.d);
    for (std::size_t i = 0; i < pts.size(); ++i) {
      const double v = pts[i].f - k * pts[i].d;
      if (v <= best && v <= 1.0 - 1e-4) brute.insert(i);
    }
  }
  CHECK(std::set<std::size_t>(got.begin(), got.end()) == brute);
  CHECK(brute == std::set<std::size_t>{2});
}

TEST_CASE("identify_poh agrees with the critical-slope oracle on DIRECT partitions") {
  int checked = 0;
  for (std::uint64_t seed = 0; seed < 60; ++seed) {
    const std::size_t n = 1 + seed % 4;
    Problem p = make(oracle::noise(seed), n);
    DirectConfig config;
    config.max_iters = 15;
    config.on_iteration = [&](const PartitionState& s, std::int64_t) {
      if (s.groups().size() > 12) return;
      const auto ids = identify_poh(s, 1e-4);
      CHECK(std::set<int>(ids.begin(), ids.end()) == oracle::exact_poh(s, 1e-4));
      ++checked;
    };
    direct_solve(p, config);
  }
  CHECK(checked > 100);
}

TEST_CASE("partition tiles the cube after every iteration") {
  const auto [p, meta] = testbed::get_function("H3", 3);
  oracle::TilingTracker tiling;
  DirectConfig config;
  config.max_evals = 1500;
  double prev = INFINITY;
  config.on_iteration = [&](const PartitionState& s, std::int64_t) {
    const auto check = tiling.check(s);
    CHECK_MESSAGE(check.ok, check.message);
    CHECK(s.f_min() <= prev);
    prev = s.f_min();
    double lowest = INFINITY;
    std::size_t grouped = 0;
    for (const auto& [key, group] : s.groups()) {
      grouped += group.size();
      for (const auto& [value, id] : group) {
        lowest = std::min(lowest, value);
        CHECK(measure_key(s.measure(id)) == key);
      }
    }
    CHECK(grouped == s.size());
    CHECK(s.f_min() == lowest);
  };
  direct_solve(p, config);
}

TEST_CASE("flat sixth-power function converges quickly") {
  Problem p = make([](std::span<const double> x) { return 0.1 * std::pow(x[0] - 0.4, 6); }, 1,
                   -1.0, 1.0);
  p.known_optimum = 0.0;
  DirectConfig config;
  config.target = 0.0;
  config.accuracy = 1e-4;
  config.max_iters = 50;
  const RunReport r = direct_solve(p, config);
  CHECK(r.termination == Termination::TargetReached);
  CHECK(r.iterations <= 10);
  CHECK(r.best_f <= 1e-4);
}

TEST_CASE("constant objective runs to the iteration cap") {
  const Problem p = make([](std::span<const double>) { return 3.0; }, 2);
  DirectConfig config;
  config.max_iters = 6;
  const RunReport r = direct_solve(p, config);
  CHECK(r.best_f == 3.0);
  CHECK(r.termination == Termination::IterBudget);
  CHECK(r.iterations == 6);
  REQUIRE(!r.trace.empty());
  CHECK(r.trace.front().eval == 1);
  for (const auto& row : r.trace) CHECK(row.f == 3.0);
}

TEST_CASE("sphere over shifted bounds reaches the dense-grid minimum") {
  const auto [p, meta] = testbed::get_function("Sphere", 2);
  // Dense 1000 x 1000 grid over the box as an independent reference.
  double grid_min = INFINITY;
  const auto& b = meta.bounds;
  for (int i = 0; i <= 999; ++i) {
    for (int j = 0; j <= 999; ++j) {
      const Point x{b.lower[0] + b.width(0) * i / 999.0, b.lower[1] + b.width(1) * j / 999.0};
      grid_min = std::min(grid_min, p.objective(x));
    }
  }
  DirectConfig config;
  config.max_evals = 10000;
  const RunReport r = direct_solve(p, config);
  CHECK(std::abs(r.best_f - 0.0) <= 1e-4);
  CHECK(r.best_f <= grid_min + 1e-4);
  CHECK(r.evals <= 10000);
  CHECK(r.termination == Termination::EvalBudget);
}

TEST_CASE("evaluation cap is exact") {
  const Problem p = make(oracle::noise(9), 3);
  for (std::int64_t cap : {1, 2, 7, 50, 333}) {
    DirectConfig config;
    config.max_evals = cap;
    const RunReport r = direct_solve(p, config);
    CHECK(r.evals == cap);
    CHECK(r.termination == Termination::EvalBudget);
  }
}

TEST_CASE("trace is nonincreasing and ends at best_f") {
  const auto [p, meta] = testbed::get_function("SHU", 2);
  DirectConfig config;
  config.max_evals = 3000;
  const RunReport r = direct_solve(p, config);
  REQUIRE(!r.trace.empty());
  for (std::size_t i = 1; i < r.trace.size(); ++i) {
    CHECK(r.trace[i].f <= r.trace[i - 1].f);
    CHECK(r.trace[i].eval >= r.trace[i - 1].eval);
  }
  CHECK(r.trace.back().f == r.best_f);
  CHECK(p.objective(r.best_x) == r.best_f);
}

TEST_CASE("invalid configuration is rejected before evaluating") {
  int calls = 0;
  const Problem p = make([&](std::span<const double>) { return ++calls, 0.0; }, 1);
  DirectConfig config;
  config.eps = 0.0;
  CHECK_THROWS_AS(direct_solve(p, config), ConfigError);
  config.eps = 1e-4;
  config.max_evals = 0;
  CHECK_THROWS_AS(direct_solve(p, config), ConfigError);
  CHECK(calls == 0);
}

}
