#pragma once

#include <cstdint>
#include <random>

#include "windcone/geometry.hpp"

namespace windcone {

// Deterministic uniform generator: identical streams for identical seeds on
// every platform (std::uniform_real_distribution is implementation-defined,
// so doubles are derived from raw 64-bit draws directly).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double uniform01() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }
  double uniform(double a, double b) { return a + (b - a) * uniform01(); }
  int uniform_int(int lo, int hi) {  // inclusive bounds
    int n = hi - lo + 1;
    int k = static_cast<int>(uniform01() * n);
    return lo + (k >= n ? n - 1 : k);
  }

  Vec2 in_box(Vec2 lo, Vec2 hi) {
    return {uniform(lo.x, hi.x), uniform(lo.y, hi.y)};
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace windcone
