#pragma once

#include <cstdint>
#include <random>

namespace abcd {

// Seeded stream with platform-independent draws. Separate purposes get
// separate streams so that one consumer cannot shift another's sequence.
class RandomStream {
 public:
  enum class Purpose : std::uint32_t { StartPoint = 1, BlockChoice = 2, Sampling = 3 };

  RandomStream(std::uint64_t seed, Purpose purpose) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed),
                      static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(purpose)};
    engine_.seed(seq);
  }

  // Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  // Uniform integer in [0, bound).
  std::uint64_t below(std::uint64_t bound) {
    // Lemire-style rejection keeps the draw unbiased.
    const std::uint64_t threshold = (0 - bound) % bound;
    for (;;) {
      const std::uint64_t r = engine_();
      if (r >= threshold) return r % bound;
    }
  }

  std::mt19937_64& engine() noexcept { return engine_; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace abcd
