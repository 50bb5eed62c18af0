#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <string_view>
#include <vector>

namespace fairbfl {

// Deterministic RNG. The engine (mt19937_64) has a fully specified output
// sequence; distributions are hand-rolled because the std ones are
// implementation-defined and would break cross-toolchain reproducibility.
class Rng {
 public:
  explicit Rng(uint64_t seed) : eng_(seed) {}

  uint64_t next_u64() { return eng_(); }

  // Uniform in [0,1) with 53 bits of mantissa.
  double next_double() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

  // Uniform in [0, bound), rejection-sampled to avoid modulo bias.
  uint64_t next_below(uint64_t bound) {
    if (bound <= 1) return 0;
    const uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
    uint64_t v;
    do {
      v = eng_();
    } while (v >= limit);
    return v % bound;
  }

  // Box-Muller, no cached spare.
  double normal() {
    double u1;
    do {
      u1 = next_double();
    } while (u1 <= 0.0);
    const double u2 = next_double();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
  }

  double exponential(double mean) {
    double u;
    do {
      u = next_double();
    } while (u <= 0.0);
    return -mean * std::log(u);
  }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (size_t i = v.size(); i > 1; --i) {
      std::swap(v[i - 1], v[next_below(i)]);
    }
  }

  // First k entries of a shuffled [0, n) range, ascending.
  std::vector<int> sample_without_replacement(int n, int k) {
    std::vector<int> idx(static_cast<size_t>(n));
    std::iota(idx.begin(), idx.end(), 0);
    for (int i = 0; i < k; ++i) {
      const auto j = i + static_cast<int>(next_below(static_cast<uint64_t>(n - i)));
      std::swap(idx[i], idx[j]);
    }
    idx.resize(static_cast<size_t>(k));
    std::sort(idx.begin(), idx.end());
    return idx;
  }

 private:
  std::mt19937_64 eng_;
};

namespace detail {
inline uint64_t splitmix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline uint64_t fnv1a(std::string_view s) {
  uint64_t h = 0xcbf29ce484222325ULL;
  for (const char c : s) {
    h ^= static_cast<uint8_t>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}
}  // namespace detail

// Independent seed stream per (base seed, purpose, a, b). Keeps e.g. mining
// randomness from perturbing batch shuffling, so mode changes that add or
// remove phases never shift the learning trajectory.
inline uint64_t derive_seed(uint64_t base, std::string_view tag, uint64_t a = 0,
                            uint64_t b = 0) {
  uint64_t x = detail::splitmix64(base ^ detail::fnv1a(tag));
  x = detail::splitmix64(x ^ a);
  x = detail::splitmix64(x ^ b);
  return x;
}

}  // namespace fairbfl
