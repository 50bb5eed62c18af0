#pragma once

#include <array>
#include <compare>
#include <cstdint>

#include "fairbfl/sha256.hpp"

namespace fairbfl {

// Unsigned 256-bit integer, four 64-bit limbs, least significant first.
// Just enough arithmetic for proof-of-work target comparison.
struct U256 {
  std::array<uint64_t, 4> limbs{0, 0, 0, 0};

  static U256 max() {
    U256 v;
    v.limbs = {~0ull, ~0ull, ~0ull, ~0ull};
    return v;
  }

  static U256 from_be_bytes(const Digest& d) {
    U256 v;
    for (int limb = 0; limb < 4; ++limb) {
      uint64_t word = 0;
      // digest byte 0 is the most significant, limb 3 holds it
      const int offset = (3 - limb) * 8;
      for (int i = 0; i < 8; ++i) {
        word = (word << 8) | d[offset + i];
      }
      v.limbs[limb] = word;
    }
    return v;
  }

  // floor((2^256 - 1) / divisor), long division most significant limb first
  static U256 max_divided_by(uint64_t divisor) {
    U256 q;
    unsigned __int128 rem = 0;
    for (int limb = 3; limb >= 0; --limb) {
      const unsigned __int128 cur = (rem << 64) | ~0ull;
      q.limbs[limb] = static_cast<uint64_t>(cur / divisor);
      rem = cur % divisor;
    }
    return q;
  }

  friend std::strong_ordering operator<=>(const U256& a, const U256& b) {
    for (int i = 3; i >= 0; --i) {
      if (a.limbs[i] != b.limbs[i]) return a.limbs[i] <=> b.limbs[i];
    }
    return std::strong_ordering::equal;
  }
  friend bool operator==(const U256& a, const U256& b) = default;
};

}  // namespace fairbfl
