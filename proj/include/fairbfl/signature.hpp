#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <span>
#include <vector>

namespace fairbfl {

struct PublicKey {
  uint64_t modulus = 0;
  uint64_t exponent = 0;
  friend bool operator==(const PublicKey&, const PublicKey&) = default;
};

struct PrivateKey {
  uint64_t modulus = 0;
  uint64_t exponent = 0;
};

struct KeyPair {
  PublicKey pub;
  PrivateKey priv;
};

// Abstract asymmetric signature over a payload byte string. Injectable so
// tests can swap in a cheap double.
class SignatureScheme {
 public:
  virtual ~SignatureScheme() = default;
  virtual KeyPair generate(uint64_t seed) = 0;
  virtual std::vector<uint8_t> sign(const PrivateKey& key,
                                    std::span<const uint8_t> payload) = 0;
  virtual bool verify(const PublicKey& key, std::span<const uint8_t> payload,
                      std::span<const uint8_t> signature) = 0;
};

// Textbook RSA over a 64-bit modulus: hash-then-exponentiate, e = 65537.
// Small on purpose; the protocol needs tamper evidence, not real security.
class ToyRsa : public SignatureScheme {
 public:
  KeyPair generate(uint64_t seed) override;
  std::vector<uint8_t> sign(const PrivateKey& key,
                            std::span<const uint8_t> payload) override;
  bool verify(const PublicKey& key, std::span<const uint8_t> payload,
              std::span<const uint8_t> signature) override;
};

class KeyRegistry {
 public:
  void register_key(int64_t client, const PublicKey& key) { keys_[client] = key; }
  bool known(int64_t client) const { return keys_.count(client) > 0; }
  const PublicKey& lookup(int64_t client) const;  // UnknownIdentity if missing

 private:
  std::map<int64_t, PublicKey> keys_;
};

}  // namespace fairbfl
