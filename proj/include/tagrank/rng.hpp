#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <vector>

namespace tagrank {

// Deterministic random source. std::mt19937_64 output is fully specified by
// the standard, and every derived draw below avoids std::*_distribution
// (whose algorithms are implementation-defined), so equal seeds produce
// bit-identical streams on every platform and compiler.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform integer in [0, bound). Rejection sampling, no modulo bias.
  // bound must be >= 1.
  std::uint64_t below(std::uint64_t bound) {
    const std::uint64_t rem = (0 - bound) % bound;  // 2^64 mod bound
    const std::uint64_t last_fair = ~std::uint64_t{0} - rem;
    std::uint64_t x = engine_();
    while (x > last_fair) x = engine_();
    return x % bound;
  }

  int below_int(int bound) {
    return static_cast<int>(below(static_cast<std::uint64_t>(bound)));
  }

  // Uniform in [0, 1), 53 random bits.
  double uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Standard normal, Box-Muller. Consumes exactly two uniforms per call;
  // the sine branch is discarded to keep the draw count input-independent.
  double normal() {
    const double u1 = 1.0 - uniform();  // in (0, 1], log stays finite
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * std::numbers::pi * u2);
  }

  // Fisher-Yates, high index down, fixed draw count n-1.
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      const std::size_t j = static_cast<std::size_t>(below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

  std::vector<int> permutation(int n) {
    std::vector<int> p(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) p[static_cast<std::size_t>(i)] = i;
    shuffle(p);
    return p;
  }

 private:
  std::mt19937_64 engine_;
};

// Stateless splitmix64 step. Derives an independent stream seed from a base
// seed and a stream index; used so per-tag / per-purpose substreams never
// alias the main stream.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace tagrank
