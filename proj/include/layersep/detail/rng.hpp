#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace layersep::detail {

// Counter-based generator so every (cell, repetition) owns an independent
// stream derived from the sweep seed alone. Evaluation order and thread
// scheduling cannot change any draw.

inline std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9E3779B97F4A7C15ULL;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

inline std::uint64_t mix_key(std::uint64_t a, std::uint64_t b) {
  std::uint64_t s = a ^ (b + 0x9E3779B97F4A7C15ULL + (a << 6) + (a >> 2));
  return splitmix64(s);
}

class Rng {
public:
  explicit Rng(std::uint64_t key) : state_(key) {}

  std::uint64_t next_u64() { return splitmix64(state_); }

  /// Uniform in (0, 1]; never returns 0 so log() below is safe.
  double uniform01() {
    return (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
  }

  /// Box-Muller. A fresh pair per call; the second variate is discarded so
  /// draw counts stay position-independent.
  double normal() {
    double u1 = uniform01();
    double u2 = uniform01();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

private:
  std::uint64_t state_;
};

}  // namespace layersep::detail
