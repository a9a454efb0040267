#pragma once

#include <cstdint>
#include <random>

namespace pswalk {

// Deterministic draw stream. All stochastic code pulls from this wrapper in a
// documented order, so a seed fully determines every run. uniform01 avoids
// std::uniform_real_distribution because its draw count is implementation
// defined.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) : gen_(seed) {}

  // Uniform on [0, 1) with 53 random mantissa bits.
  double uniform01() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  std::uint64_t raw() { return gen_(); }

 private:
  std::mt19937_64 gen_;
};

}  // namespace pswalk
