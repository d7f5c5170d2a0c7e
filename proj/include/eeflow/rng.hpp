#pragma once

#include <cmath>
#include <cstdint>

namespace eeflow {

// SplitMix64. Small, seedable, and bit-stable across platforms, which the
// reproducibility contract needs; std:: distributions are not portable.
class SplitMix64 {
 public:
  explicit SplitMix64(uint64_t seed) : state_(seed) {}

  uint64_t next_u64() {
    uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // Uniform in [0, 1).
  double next_double() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) {
    return lo + (hi - lo) * next_double();
  }

  // Uniform integer in [0, n).
  uint64_t next_below(uint64_t n) { return n == 0 ? 0 : next_u64() % n; }

  // Standard normal via Box-Muller (one draw per call, second discarded).
  double normal() {
    double u1 = next_double();
    double u2 = next_double();
    while (u1 <= 0.0) u1 = next_double();
    constexpr double two_pi = 6.283185307179586476925286766559;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(two_pi * u2);
  }

 private:
  uint64_t state_;
};

// Deterministic seed fan-out: one top-level seed, independent streams per
// subsystem / sweep cell.
inline uint64_t derive_seed(uint64_t root, uint64_t stream,
                            uint64_t index = 0) {
  SplitMix64 mix(root ^ (0x5851f42d4c957f2dULL * (stream + 1)));
  mix.next_u64();
  uint64_t s = mix.next_u64() ^ (0x14057b7ef767814fULL * (index + 1));
  SplitMix64 mix2(s);
  return mix2.next_u64();
}

}  // namespace eeflow
