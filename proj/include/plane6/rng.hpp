#pragma once

// Deterministic random numbers with a fixed cross-platform mapping from the
// mt19937_64 stream to doubles. std::uniform_real_distribution is
// implementation-defined, which would break byte-stable reports.

#include <cstdint>
#include <random>

namespace plane6 {

struct DeterministicRng {
  std::mt19937_64 engine;

  explicit DeterministicRng(std::uint64_t seed) : engine(seed) {}

  // Uniform in [0, 1).
  double unit() { return (engine() >> 11) * 0x1.0p-53; }

  // Uniform in [-1, 1).
  double symmetric() { return 2.0 * unit() - 1.0; }
};

}  // namespace plane6
