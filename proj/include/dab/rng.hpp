#pragma once

// Seedable, platform-independent random streams. The standard distributions
// are implementation-defined, so the few draws we need are written out here.

#include <algorithm>
#include <cstdint>
#include <limits>
#include <random>
#include <span>
#include <vector>

#include "dab/error.hpp"

namespace dab {

inline constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Derives an independent stream seed from (master, round, entity, tag).
inline constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t round,
                                           std::uint64_t entity,
                                           std::uint64_t tag = 0) noexcept {
  std::uint64_t s = splitmix64(master);
  s = splitmix64(s ^ (round * 0x632be59bd9b4e019ULL));
  s = splitmix64(s ^ (entity * 0x8cb92ba72f3d8dd7ULL));
  return splitmix64(s ^ tag);
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  /// Uniform in [0, 1) with 53 bits of resolution.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Uniform integer in [0, bound). bound must be positive.
  std::uint64_t below(std::uint64_t bound) {
    detail::require(bound > 0, "Rng::below: bound must be positive");
    const std::uint64_t limit =
        std::numeric_limits<std::uint64_t>::max() -
        std::numeric_limits<std::uint64_t>::max() % bound;
    std::uint64_t x;
    do {
      x = engine_();
    } while (x >= limit);
    return x % bound;
  }

  bool bernoulli(double p) { return uniform() < p; }

  template <class T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::swap(v[i - 1], v[below(i)]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

/// Draws indices with replacement, probability proportional to weights.
class CategoricalSampler {
 public:
  explicit CategoricalSampler(std::span<const double> weights) {
    cumulative_.reserve(weights.size());
    double acc = 0.0;
    for (double w : weights) {
      detail::require(w >= 0.0, "CategoricalSampler: negative weight");
      acc += w;
      cumulative_.push_back(acc);
    }
    detail::require(acc > 0.0, "CategoricalSampler: zero total mass");
  }

  std::size_t operator()(Rng& rng) const {
    const double u = rng.uniform() * cumulative_.back();
    auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
    if (it == cumulative_.end()) {
      // Rounding pushed u onto the total; take the last positive category.
      it = std::lower_bound(cumulative_.begin(), cumulative_.end(), cumulative_.back());
    }
    return static_cast<std::size_t>(it - cumulative_.begin());
  }

 private:
  std::vector<double> cumulative_;
};

}  // namespace dab
