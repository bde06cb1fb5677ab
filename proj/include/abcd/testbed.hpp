#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "abcd/problem.hpp"

namespace abcd::testbed {

class RegistryError : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

enum class Family { Jones, Hedar };

struct TestFunction {
  std::string name;
  Family family = Family::Hedar;
  int min_dim = 0;
  int max_dim = 0;  // equal to min_dim for the fixed-size Jones functions
  int dim = 0;      // the dimension this instance was built for
  Bounds canonical_bounds;
  Bounds bounds;  // after adjust_bounds
  std::optional<double> f_star;
  std::optional<Point> x_star;
  // f_star comes from a published numerical search rather than a closed form.
  bool f_star_numerical = false;
  std::optional<int> local_count;
  std::optional<int> global_count;
};

// Registry names in a fixed order: the nine Jones functions, then the
// thirteen Hedar functions.
const std::vector<std::string>& function_names();
const std::vector<std::string>& jones_names();
const std::vector<std::string>& hedar_names();

// Lookup ignores case, spaces, '-' and '_'.
std::pair<Problem, TestFunction> get_function(std::string_view name, int dim);

// Allowed dimensions for `name` as (min, max).
std::pair<int, int> allowed_dims(std::string_view name);

// Shifts bounds that are symmetric about the origin to (0.8 L, 1.2 U) when
// the known optimizer is the origin; any other bounds pass through.
Bounds adjust_bounds(const Bounds& bounds, std::optional<std::span<const double>> x_star);

struct ValidationRow {
  std::string name;
  int dim = 0;
  std::optional<double> value_at_x_star;
  std::optional<double> f_star;
  double best_found = 0.0;  // best sampled-and-polished value
  bool ok = true;
  std::string message;
};

struct ValidationReport {
  bool ok = true;
  std::vector<ValidationRow> rows;
};

// For each function at its smallest dimension: f(x_star) must equal f_star
// within 1e-9, and the best of `samples` seeded uniform draws plus local
// polish of the best ten must not undercut f_star by more than 1e-9.
ValidationReport validate_registry(std::int64_t samples = 1'000'000, std::uint64_t seed = 1);

namespace data {

inline constexpr std::size_t kShekelRows = 10;
extern const std::array<std::array<double, 4>, kShekelRows> kShekelA;
extern const std::array<double, kShekelRows> kShekelC;

extern const std::array<double, 4> kHartmanC;
extern const std::array<std::array<double, 3>, 4> kHartman3A;
extern const std::array<std::array<double, 3>, 4> kHartman3P;
extern const std::array<std::array<double, 6>, 4> kHartman6A;
extern const std::array<std::array<double, 6>, 4> kHartman6P;

}  // namespace data

}  // namespace abcd::testbed
