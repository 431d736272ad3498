#pragma once

#include <cstdint>
#include <cmath>

#include "tbmimo/angles.hpp"

namespace tbmimo {

// splitmix64: tiny counter-style generator with a strong finalizer.  Chosen
// over std::normal_distribution so that substreams keyed by (seed, trial,
// pulse) give the same bytes on every platform and under any scheduling.
struct SplitMix64 {
  std::uint64_t state;

  std::uint64_t next() {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // uniform on (0, 1]
  double next_unit_open() { return static_cast<double>((next() >> 11) + 1) * 0x1.0p-53; }
  // uniform on [0, 1)
  double next_unit() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  // Box-Muller pair of standard normals.
  void next_gaussian_pair(double& g0, double& g1) {
    const double u1 = next_unit_open();
    const double u2 = next_unit();
    const double r = std::sqrt(-2.0 * std::log(u1));
    g0 = r * std::cos(2.0 * kPi * u2);
    g1 = r * std::sin(2.0 * kPi * u2);
  }
};

inline std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Derive a child stream seed; fold distinct indices one at a time.
inline std::uint64_t substream(std::uint64_t seed, std::uint64_t index) {
  return mix64(seed ^ (0x9e3779b97f4a7c15ULL + index * 0xbf58476d1ce4e5b9ULL));
}

}  // namespace tbmimo
