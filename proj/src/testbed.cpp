#include "abcd/testbed.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <sstream>

#include "abcd/local_optimizer.hpp"
#include "abcd/random.hpp"

namespace abcd::testbed {
namespace {

using std::numbers::pi;
using Span = std::span<const double>;

double shekel(Span x, std::size_t terms) {
  double sum = 0.0;
  for (std::size_t i = 0; i < terms; ++i) {
    double dist = 0.0;
    for (std::size_t j = 0; j < 4; ++j) {
      const double d = x[j] - data::kShekelA[i][j];
      dist += d * d;
    }
    sum += 1.0 / (dist + data::kShekelC[i]);
  }
  return -sum;
}

template <std::size_t N>
double hartman(Span x, const std::array<std::array<double, N>, 4>& a,
               const std::array<std::array<double, N>, 4>& p) {
  double sum = 0.0;
  for (std::size_t i = 0; i < 4; ++i) {
    double inner = 0.0;
    for (std::size_t j = 0; j < N; ++j) {
      const double d = x[j] - p[i][j];
      inner += a[i][j] * d * d;
    }
    sum += data::kHartmanC[i] * std::exp(-inner);
  }
  return -sum;
}

double branin(Span x) {
  const double b = 5.1 / (4.0 * pi * pi);
  const double c = 5.0 / pi;
  const double t = 1.0 / (8.0 * pi);
  const double u = x[1] - b * x[0] * x[0] + c * x[0] - 6.0;
  return u * u + 10.0 * (1.0 - t) * std::cos(x[0]) + 10.0;
}

double goldstein_price(Span x) {
  const double a = x[0] + x[1] + 1.0;
  const double b = 2.0 * x[0] - 3.0 * x[1];
  const double first = 1.0 + a * a *
      (19.0 - 14.0 * x[0] + 3.0 * x[0] * x[0] - 14.0 * x[1] + 6.0 * x[0] * x[1] +
       3.0 * x[1] * x[1]);
  const double second = 30.0 + b * b *
      (18.0 - 32.0 * x[0] + 12.0 * x[0] * x[0] + 48.0 * x[1] - 36.0 * x[0] * x[1] +
       27.0 * x[1] * x[1]);
  return first * second;
}

double six_hump_camel(Span x) {
  const double a = x[0] * x[0];
  const double b = x[1] * x[1];
  return (4.0 - 2.1 * a + a * a / 3.0) * a + x[0] * x[1] + (-4.0 + 4.0 * b) * b;
}

double shubert(Span x) {
  double prod = 1.0;
  for (std::size_t i = 0; i < 2; ++i) {
    double sum = 0.0;
    for (int j = 1; j <= 5; ++j) sum += j * std::cos((j + 1) * x[i] + j);
    prod *= sum;
  }
  return prod;
}

double ackley(Span x) {
  const double n = static_cast<double>(x.size());
  double sq = 0.0, cs = 0.0;
  for (double v : x) {
    sq += v * v;
    cs += std::cos(2.0 * pi * v);
  }
  return -20.0 * std::exp(-0.2 * std::sqrt(sq / n)) - std::exp(cs / n) + 20.0 + std::numbers::e;
}

double dixon_price(Span x) {
  double sum = (x[0] - 1.0) * (x[0] - 1.0);
  for (std::size_t i = 1; i < x.size(); ++i) {
    const double t = 2.0 * x[i] * x[i] - x[i - 1];
    sum += static_cast<double>(i + 1) * t * t;
  }
  return sum;
}

double griewank(Span x) {
  double sum = 0.0, prod = 1.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sum += x[i] * x[i];
    prod *= std::cos(x[i] / std::sqrt(static_cast<double>(i + 1)));
  }
  return sum / 4000.0 - prod + 1.0;
}

double levy(Span x) {
  const std::size_t n = x.size();
  auto w = [&](std::size_t i) { return 1.0 + (x[i] - 1.0) / 4.0; };
  const double s0 = std::sin(pi * w(0));
  double sum = s0 * s0;
  for (std::size_t i = 0; i + 1 < n; ++i) {
    const double wi = w(i);
    const double s = std::sin(pi * wi + 1.0);
    sum += (wi - 1.0) * (wi - 1.0) * (1.0 + 10.0 * s * s);
  }
  const double wn = w(n - 1);
  const double sn = std::sin(2.0 * pi * wn);
  return sum + (wn - 1.0) * (wn - 1.0) * (1.0 + sn * sn);
}

double michalewicz(Span x) {
  double sum = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double s = std::sin(static_cast<double>(i + 1) * x[i] * x[i] / pi);
    sum += std::sin(x[i]) * std::pow(s, 20);
  }
  return -sum;
}

// Only complete groups of four coordinates contribute; trailing coordinates
// are inert, which makes any n >= 4 admissible.
double powell(Span x) {
  double sum = 0.0;
  for (std::size_t k = 0; k + 4 <= x.size(); k += 4) {
    const double a = x[k] + 10.0 * x[k + 1];
    const double b = x[k + 2] - x[k + 3];
    const double c = x[k + 1] - 2.0 * x[k + 2];
    const double d = x[k] - x[k + 3];
    sum += a * a + 5.0 * b * b + c * c * c * c + 10.0 * d * d * d * d;
  }
  return sum;
}

double rastrigin(Span x) {
  double sum = 10.0 * static_cast<double>(x.size());
  for (double v : x) sum += v * v - 10.0 * std::cos(2.0 * pi * v);
  return sum;
}

double rosenbrock(Span x) {
  double sum = 0.0;
  for (std::size_t i = 0; i + 1 < x.size(); ++i) {
    const double a = x[i + 1] - x[i] * x[i];
    const double b = x[i] - 1.0;
    sum += 100.0 * a * a + b * b;
  }
  return sum;
}

// max_x x sin(sqrt(x)) on [-500, 500], so the minimum is exactly zero.
constexpr double kSchwefelPeak = 418.98288727243370627;
constexpr double kSchwefelArgmax = 420.96874635998202731;

double schwefel(Span x) {
  double sum = kSchwefelPeak * static_cast<double>(x.size());
  for (double v : x) sum -= v * std::sin(std::sqrt(std::abs(v)));
  return sum;
}

double sphere(Span x) {
  double sum = 0.0;
  for (double v : x) sum += v * v;
  return sum;
}

double sum_squares(Span x) {
  double sum = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) sum += static_cast<double>(i + 1) * x[i] * x[i];
  return sum;
}

double trid(Span x) {
  double sum = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sum += (x[i] - 1.0) * (x[i] - 1.0);
    if (i > 0) sum -= x[i] * x[i - 1];
  }
  return sum;
}

double zakharov(Span x) {
  double sq = 0.0, lin = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sq += x[i] * x[i];
    lin += 0.5 * static_cast<double>(i + 1) * x[i];
  }
  const double l2 = lin * lin;
  return sq + l2 + l2 * l2;
}

struct Spec {
  std::string name;
  Family family;
  int min_dim;
  int max_dim;
  std::function<double(Span)> f;
  std::function<Bounds(int)> bounds;
  std::function<std::optional<double>(int)> f_star;
  std::function<std::optional<Point>(int)> x_star;
  bool numerical = false;
  std::optional<int> local_count;
  std::optional<int> global_count;
};

constexpr int kMaxHedarDim = 100;

Bounds cube(int n, double lo, double hi) {
  return Bounds{Point(static_cast<std::size_t>(n), lo), Point(static_cast<std::size_t>(n), hi)};
}

auto fixed_cube(double lo, double hi) {
  return [lo, hi](int n) { return cube(n, lo, hi); };
}

auto constant(double v) {
  return [v](int) -> std::optional<double> { return v; };
}

auto filled(double v) {
  return [v](int n) -> std::optional<Point> { return Point(static_cast<std::size_t>(n), v); };
}

auto exact(Point x) {
  return [x = std::move(x)](int) -> std::optional<Point> { return x; };
}

const std::vector<Spec>& registry() {
  static const std::vector<Spec> specs = [] {
    std::vector<Spec> s;
    // Jones set. Shekel/Hartman optima were located by a refined numerical
    // search; the others are closed forms.
    s.push_back({"S5", Family::Jones, 4, 4, [](Span x) { return shekel(x, 5); },
                 fixed_cube(0.0, 10.0), constant(-10.153199679058229),
                 exact({4.00003715108039, 4.000133275843115, 4.000037153167726,
                        4.000133276877367}),
                 true, 5, 1});
    s.push_back({"S7", Family::Jones, 4, 4, [](Span x) { return shekel(x, 7); },
                 fixed_cube(0.0, 10.0), constant(-10.402940566818664),
                 exact({4.000572917109016, 4.000689366776857, 3.99948971090112,
                        3.999606159410502}),
                 true, 7, 1});
    s.push_back({"S10", Family::Jones, 4, 4, [](Span x) { return shekel(x, 10); },
                 fixed_cube(0.0, 10.0), constant(-10.536409816692045),
                 exact({4.000746530961358, 4.000592931951245, 3.9996634004980938,
                        3.999509802168968}),
                 true, 10, 1});
    s.push_back({"H3", Family::Jones, 3, 3,
                 [](Span x) { return hartman(x, data::kHartman3A, data::kHartman3P); },
                 fixed_cube(0.0, 1.0), constant(-3.8627821478207554),
                 exact({0.11461434689172131, 0.5556488498298436, 0.8525469527630045}), true,
                 4, 1});
    s.push_back({"H6", Family::Jones, 6, 6,
                 [](Span x) { return hartman(x, data::kHartman6A, data::kHartman6P); },
                 fixed_cube(0.0, 1.0), constant(-3.322368011415515),
                 exact({0.20168950874945452, 0.15001069064293227, 0.4768739723732832,
                        0.2753324308013757, 0.3116516162322547, 0.6573005339291513}),
                 true, 4, 1});
    s.push_back({"BR", Family::Jones, 2, 2, branin,
                 [](int) { return Bounds{{-5.0, 0.0}, {10.0, 15.0}}; },
                 constant(5.0 / (4.0 * pi)), exact({pi, 2.275}), false, 3, 3});
    s.push_back({"GP", Family::Jones, 2, 2, goldstein_price, fixed_cube(-2.0, 2.0),
                 constant(3.0), exact({0.0, -1.0}), false, 4, 1});
    s.push_back({"C6", Family::Jones, 2, 2, six_hump_camel,
                 [](int) { return Bounds{{-3.0, -2.0}, {3.0, 2.0}}; },
                 constant(-1.0316284534898774),
                 exact({0.08984201709772313, -0.7126564030341007}), true, 6, 2});
    s.push_back({"SHU", Family::Jones, 2, 2, shubert, fixed_cube(-10.0, 10.0),
                 constant(-186.7309088310239),
                 exact({-1.4251284287077275, -0.8003211011235166}), true, 760, 18});

    // Hedar set.
    s.push_back({"Ackley", Family::Hedar, 2, kMaxHedarDim, ackley, fixed_cube(-15.0, 30.0),
                 constant(0.0), filled(0.0)});
    s.push_back({"Dixon-Price", Family::Hedar, 2, kMaxHedarDim, dixon_price,
                 fixed_cube(-10.0, 10.0), constant(0.0), [](int n) -> std::optional<Point> {
                   Point x(static_cast<std::size_t>(n));
                   for (int i = 1; i <= n; ++i) {
                     const double p = std::ldexp(1.0, i);
                     x[static_cast<std::size_t>(i - 1)] = std::pow(2.0, -(p - 2.0) / p);
                   }
                   return x;
                 }});
    s.push_back({"Griewank", Family::Hedar, 2, kMaxHedarDim, griewank,
                 fixed_cube(-600.0, 600.0), constant(0.0), filled(0.0)});
    s.push_back({"Levy", Family::Hedar, 2, kMaxHedarDim, levy, fixed_cube(-10.0, 10.0),
                 constant(0.0), filled(1.0)});
    s.push_back({"Michalewicz", Family::Hedar, 2, kMaxHedarDim, michalewicz,
                 fixed_cube(0.0, pi),
                 [](int n) -> std::optional<double> {
                   if (n == 2) return -1.8013034100985537;
                   if (n == 5) return -4.687658179088149;
                   if (n == 10) return -9.660151715641343;
                   return std::nullopt;
                 },
                 [](int n) -> std::optional<Point> {
                   if (n == 2) return Point{2.202905520072918, 1.5707963262450821};
                   if (n == 5) {
                     return Point{2.202905521712881, 1.5707963232749087, 1.2849915698829606,
                                  1.9230584715315744, 1.7204697732670073};
                   }
                   if (n == 10) {
                     return Point{2.2029055232324195, 1.570796328181661, 1.2849915729829813,
                                  1.923058471962713, 1.7204697720337399, 1.5707963251491615,
                                  1.4544139706354324, 1.7560865200925893, 1.6557174175592002,
                                  1.5707963270263972};
                   }
                   return std::nullopt;
                 },
                 true});
    s.push_back({"Powell", Family::Hedar, 4, kMaxHedarDim, powell, fixed_cube(-4.0, 5.0),
                 constant(0.0), filled(0.0)});
    s.push_back({"Rastrigin", Family::Hedar, 2, kMaxHedarDim, rastrigin,
                 fixed_cube(-5.12, 5.12), constant(0.0), filled(0.0)});
    s.push_back({"Rosenbrock", Family::Hedar, 2, kMaxHedarDim, rosenbrock,
                 fixed_cube(-5.0, 10.0), constant(0.0), filled(1.0)});
    s.push_back({"Schwefel", Family::Hedar, 2, kMaxHedarDim, schwefel,
                 fixed_cube(-500.0, 500.0), constant(0.0), filled(kSchwefelArgmax)});
    s.push_back({"Sphere", Family::Hedar, 2, kMaxHedarDim, sphere, fixed_cube(-5.12, 5.12),
                 constant(0.0), filled(0.0)});
    s.push_back({"Sum Square", Family::Hedar, 2, kMaxHedarDim, sum_squares,
                 fixed_cube(-10.0, 10.0), constant(0.0), filled(0.0)});
    s.push_back({"Trid", Family::Hedar, 2, kMaxHedarDim, trid,
                 [](int n) { return cube(n, -double(n) * n, double(n) * n); },
                 [](int n) -> std::optional<double> {
                   return -static_cast<double>(n) * (n + 4) * (n - 1) / 6.0;
                 },
                 [](int n) -> std::optional<Point> {
                   Point x(static_cast<std::size_t>(n));
                   for (int i = 1; i <= n; ++i) {
                     x[static_cast<std::size_t>(i - 1)] = static_cast<double>(i) * (n + 1 - i);
                   }
                   return x;
                 }});
    s.push_back({"Zakharov", Family::Hedar, 2, kMaxHedarDim, zakharov, fixed_cube(-5.0, 10.0),
                 constant(0.0), filled(0.0)});
    return s;
  }();
  return specs;
}

std::string fold(std::string_view name) {
  std::string out;
  for (char c : name) {
    if (c == ' ' || c == '-' || c == '_') continue;
    out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  }
  return out;
}

const Spec& lookup(std::string_view name) {
  const std::string key = fold(name);
  for (const Spec& s : registry()) {
    if (fold(s.name) == key) return s;
  }
  std::ostringstream msg;
  msg << "unknown test function '" << name << "'; valid names:";
  for (const Spec& s : registry()) msg << " '" << s.name << "'";
  throw RegistryError(msg.str());
}

std::vector<std::string> names_of(std::optional<Family> family) {
  std::vector<std::string> out;
  for (const Spec& s : registry()) {
    if (!family || s.family == *family) out.push_back(s.name);
  }
  return out;
}

}  // namespace

const std::vector<std::string>& function_names() {
  static const auto names = names_of(std::nullopt);
  return names;
}

const std::vector<std::string>& jones_names() {
  static const auto names = names_of(Family::Jones);
  return names;
}

const std::vector<std::string>& hedar_names() {
  static const auto names = names_of(Family::Hedar);
  return names;
}

std::pair<int, int> allowed_dims(std::string_view name) {
  const Spec& s = lookup(name);
  return {s.min_dim, s.max_dim};
}

Bounds adjust_bounds(const Bounds& bounds, std::optional<std::span<const double>> x_star) {
  if (!x_star || x_star->size() != bounds.dim()) return bounds;
  for (std::size_t i = 0; i < bounds.dim(); ++i) {
    if (bounds.lower[i] != -bounds.upper[i] || (*x_star)[i] != 0.0) return bounds;
  }
  Bounds adjusted = bounds;
  for (std::size_t i = 0; i < bounds.dim(); ++i) {
    adjusted.lower[i] = 0.8 * bounds.lower[i];
    adjusted.upper[i] = 1.2 * bounds.upper[i];
  }
  return adjusted;
}

std::pair<Problem, TestFunction> get_function(std::string_view name, int dim) {
  const Spec& s = lookup(name);
  if (dim < s.min_dim || dim > s.max_dim) {
    std::ostringstream msg;
    msg << "test function '" << s.name << "' does not support dimension " << dim
        << "; allowed: ";
    if (s.min_dim == s.max_dim) {
      msg << s.min_dim;
    } else {
      msg << s.min_dim << ".." << s.max_dim;
    }
    throw RegistryError(msg.str());
  }

  TestFunction meta;
  meta.name = s.name;
  meta.family = s.family;
  meta.min_dim = s.min_dim;
  meta.max_dim = s.max_dim;
  meta.dim = dim;
  meta.canonical_bounds = s.bounds(dim);
  meta.f_star = s.f_star(dim);
  meta.x_star = s.x_star(dim);
  meta.f_star_numerical = s.numerical;
  meta.local_count = s.local_count;
  meta.global_count = s.global_count;
  std::optional<std::span<const double>> xs;
  if (meta.x_star) xs = std::span<const double>(*meta.x_star);
  meta.bounds = adjust_bounds(meta.canonical_bounds, xs);

  Problem problem;
  problem.name = s.name;
  problem.bounds = meta.bounds;
  problem.known_optimum = meta.f_star;
  problem.objective = s.f;
  return {std::move(problem), std::move(meta)};
}

ValidationReport validate_registry(std::int64_t samples, std::uint64_t seed) {
  ValidationReport report;
  for (const Spec& spec : registry()) {
    auto [problem, meta] = get_function(spec.name, spec.min_dim);
    ValidationRow row;
    row.name = meta.name;
    row.dim = meta.dim;
    row.f_star = meta.f_star;
    std::ostringstream msg;

    if (meta.x_star) {
      if (!problem.bounds.contains(*meta.x_star)) {
        row.ok = false;
        msg << "x_star lies outside the bounds; ";
      }
      row.value_at_x_star = problem.objective(*meta.x_star);
      if (meta.f_star && std::abs(*row.value_at_x_star - *meta.f_star) > 1e-9) {
        row.ok = false;
        msg << "f(x_star) = " << *row.value_at_x_star << " differs from f_star; ";
      }
    }

    // Monte-Carlo sweep keeping the ten best draws.
    RandomStream rng(seed, RandomStream::Purpose::Sampling);
    const std::size_t n = problem.dim();
    std::vector<std::pair<double, Point>> best;
    Point z(n);
    for (std::int64_t k = 0; k < samples; ++k) {
      for (std::size_t i = 0; i < n; ++i) z[i] = rng.uniform();
      Point x = denormalize(z, problem.bounds);
      const double f = problem.objective(x);
      if (best.size() < 10 || f < best.back().first) {
        best.emplace_back(f, std::move(x));
        std::sort(best.begin(), best.end(),
                  [](const auto& a, const auto& b) { return a.first < b.first; });
        if (best.size() > 10) best.pop_back();
      }
    }
    row.best_found = best.empty() ? std::numeric_limits<double>::infinity() : best.front().first;
    local::LocalConfig polish;
    polish.max_iters = 500;
    for (const auto& [f, x] : best) {
      EvalCounter counter;
      const auto result = local::sqp_local(problem, x, polish, counter);
      row.best_found = std::min(row.best_found, result.f);
    }
    if (meta.f_star && row.best_found < *meta.f_star - 1e-9) {
      row.ok = false;
      msg << "search found " << row.best_found << " below f_star; ";
    }
    row.message = msg.str();
    report.ok = report.ok && row.ok;
    report.rows.push_back(std::move(row));
  }
  return report;
}

}  // namespace abcd::testbed
