#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <vector>

namespace modal {

//! Seedable deterministic random source.
//!
//! All randomness in the library flows through this class so that a seed
//! reproduces every draw bit-for-bit. The engine is std::mt19937_64 (its
//! output sequence is pinned by the standard); uniform and Gaussian draws
//! use fixed transforms rather than std distributions, whose algorithms
//! are implementation-defined:
//!   uniform: (x >> 11) * 2^-53           -> [0, 1)
//!   normal:  Box-Muller, z0 = sqrt(-2 ln u1) cos(2 pi u2), spare cached
class Rng {
public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t next_u64() { return gen_(); }

  double uniform() {
    return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
  }

  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = 1.0 - uniform();  // (0, 1]; keeps log finite
    double u2 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double a = 2.0 * M_PI * u2;
    spare_ = r * std::sin(a);
    has_spare_ = true;
    return r * std::cos(a);
  }

  //! Index draw with probability proportional to weights (CDF inversion).
  std::size_t categorical(const std::vector<double>& weights) {
    if (weights.empty()) throw std::invalid_argument("categorical: empty weight vector");
    double total = 0.0;
    for (double w : weights) total += w;
    double u = uniform() * total;
    double acc = 0.0;
    for (std::size_t k = 0; k + 1 < weights.size(); ++k) {
      acc += weights[k];
      if (u < acc) return k;
    }
    return weights.size() - 1;
  }

  //! Derive an independent stream seed from a base seed and stream indices
  //! (SplitMix64 finalizer over the mixed words).
  static std::uint64_t derive(std::uint64_t base, std::uint64_t a, std::uint64_t b = 0) {
    std::uint64_t z = base;
    z = mix(z + 0x9e3779b97f4a7c15ULL * (a + 1));
    z = mix(z + 0x9e3779b97f4a7c15ULL * (b + 1));
    return z;
  }

private:
  static std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  std::mt19937_64 gen_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace modal
