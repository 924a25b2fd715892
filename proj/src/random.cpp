#include "phat/random.hpp"

#include <numeric>

namespace phat {

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::vector<int> permutation(std::size_t n, std::uint64_t seed) {
  std::vector<int> p(n);
  std::iota(p.begin(), p.end(), 0);
  Rng rng(seed);
  for (std::size_t i = n; i > 1; --i) {
    const int k = rng.below(static_cast<int>(i));
    std::swap(p[i - 1], p[static_cast<std::size_t>(k)]);
  }
  return p;
}

}  // namespace phat
