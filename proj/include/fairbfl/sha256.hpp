#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace fairbfl {

using Digest = std::array<uint8_t, 32>;

class Sha256 {
 public:
  Sha256() { reset(); }

  void reset();
  void update(const uint8_t* data, size_t len);
  void update(std::span<const uint8_t> data) { update(data.data(), data.size()); }
  Digest finish();

 private:
  void compress(const uint8_t* chunk);

  std::array<uint32_t, 8> state_;
  std::array<uint8_t, 64> buffer_;
  size_t buffer_len_ = 0;
  uint64_t total_len_ = 0;
};

Digest sha256(std::span<const uint8_t> data);
std::string to_hex(const Digest& d);

}  // namespace fairbfl
