#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace phat {

// Derives an independent 64-bit seed for `stream` from `seed` (splitmix64
// finalizer). Training randomness is keyed on (seed, step) through this, so
// a resumed run needs no serialized generator state.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream);

// Seeded generator with distribution code that does not depend on the
// standard library implementation.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }
  // Uniform in [0,1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  // Uniform integer in [0, n).
  int below(int n) { return static_cast<int>(uniform() * n); }

 private:
  std::mt19937_64 engine_;
};

// Fisher-Yates permutation of 0..n-1 driven by Rng(seed).
std::vector<int> permutation(std::size_t n, std::uint64_t seed);

}  // namespace phat
