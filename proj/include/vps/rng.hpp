#pragma once

#include <cstdint>

namespace vps {

// SplitMix64. The stream contract is part of the output format, so ports in
// other languages can replicate initial conditions bit for bit:
//   state_0 = seed
//   next(): state += 0x9E3779B97F4A7C15
//           z = state
//           z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
//           z = (z ^ (z >> 27)) * 0x94D049BB133111EB
//           return z ^ (z >> 31)
//   uniform01() = (next() >> 11) * 2^-53, in [0, 1)
//   symmetric(a) = a * (2 * uniform01() - 1), in [-a, a)
// Field noise draws one symmetric() per node in storage order (i fastest).
struct SplitMix64 {
  std::uint64_t state;

  explicit SplitMix64(std::uint64_t seed) : state(seed) {}

  std::uint64_t next() {
    state += 0x9E3779B97F4A7C15ull;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

  double uniform01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  double symmetric(double a) { return a * (2.0 * uniform01() - 1.0); }
};

}  // namespace vps
