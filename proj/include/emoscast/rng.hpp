#ifndef EMOSCAST_RNG_HPP
#define EMOSCAST_RNG_HPP

// Deterministic random number generation.  Draws are produced directly
// from mt19937_64 words instead of std::*_distribution so that streams
// are reproducible across standard library implementations.

#include <cstdint>
#include <random>

#include "emoscast/normal.hpp"

namespace emoscast {

// splitmix64 step; used to derive independent sub-seeds from a run seed
// plus a counter (one generator per station, bootstrap replicate, ...).
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t counter) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (counter + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

class Rng {
public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  // Uniform on [0, 1).
  double uniform01() { return double(gen_() >> 11) * 0x1.0p-53; }

  // Uniform on (0, 1), safe to feed into quantile functions.
  double uniform01_open() { return (double(gen_() >> 11) + 0.5) * 0x1.0p-53; }

  double normal() { return norm_quantile(uniform01_open()); }

  // Uniform integer in [0, n); rejection sampling, no modulo bias.
  std::uint64_t uniform_int(std::uint64_t n) {
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t x;
    do {
      x = gen_();
    } while (x >= limit);
    return x % n;
  }

  bool bernoulli(double p) { return uniform01() < p; }

private:
  std::mt19937_64 gen_;
};

} // namespace emoscast

#endif
