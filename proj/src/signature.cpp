#include "fairbfl/signature.hpp"

#include <string>

#include "fairbfl/errors.hpp"
#include "fairbfl/rng.hpp"
#include "fairbfl/sha256.hpp"

namespace fairbfl {

namespace {

constexpr uint64_t kPublicExponent = 65537;

uint64_t mulmod(uint64_t a, uint64_t b, uint64_t m) {
  return static_cast<uint64_t>(static_cast<unsigned __int128>(a) * b % m);
}

uint64_t powmod(uint64_t base, uint64_t exp, uint64_t m) {
  uint64_t r = 1 % m;
  base %= m;
  while (exp > 0) {
    if (exp & 1) r = mulmod(r, base, m);
    base = mulmod(base, base, m);
    exp >>= 1;
  }
  return r;
}

// Deterministic Miller-Rabin; this witness set is exact for all 64-bit inputs.
bool is_prime(uint64_t n) {
  if (n < 2) return false;
  for (const uint64_t p : {2ull, 3ull, 5ull, 7ull, 11ull, 13ull, 17ull, 19ull,
                           23ull, 29ull, 31ull, 37ull}) {
    if (n % p == 0) return n == p;
  }
  uint64_t d = n - 1;
  int s = 0;
  while ((d & 1) == 0) {
    d >>= 1;
    ++s;
  }
  for (const uint64_t a : {2ull, 3ull, 5ull, 7ull, 11ull, 13ull, 17ull, 19ull,
                           23ull, 29ull, 31ull, 37ull}) {
    uint64_t x = powmod(a, d, n);
    if (x == 1 || x == n - 1) continue;
    bool composite = true;
    for (int i = 1; i < s; ++i) {
      x = mulmod(x, x, n);
      if (x == n - 1) {
        composite = false;
        break;
      }
    }
    if (composite) return false;
  }
  return true;
}

uint64_t gcd64(uint64_t a, uint64_t b) {
  while (b != 0) {
    const uint64_t t = a % b;
    a = b;
    b = t;
  }
  return a;
}

// Modular inverse of a mod m via extended Euclid; inputs are coprime.
uint64_t invmod(uint64_t a, uint64_t m) {
  int64_t t = 0, new_t = 1;
  int64_t r = static_cast<int64_t>(m), new_r = static_cast<int64_t>(a);
  while (new_r != 0) {
    const int64_t q = r / new_r;
    const int64_t tmp_t = t - q * new_t;
    t = new_t;
    new_t = tmp_t;
    const int64_t tmp_r = r - q * new_r;
    r = new_r;
    new_r = tmp_r;
  }
  if (t < 0) t += static_cast<int64_t>(m);
  return static_cast<uint64_t>(t);
}

// First prime at or above a seeded odd 31-bit start, skipping primes p with
// p-1 divisible by the public exponent.
uint64_t pick_prime(Rng& rng) {
  while (true) {
    uint64_t candidate = (rng.next_u64() >> 34) | (1ull << 30) | 1ull;
    for (int i = 0; i < 4096; ++i, candidate += 2) {
      if (is_prime(candidate) && (candidate - 1) % kPublicExponent != 0) {
        return candidate;
      }
    }
  }
}

uint64_t digest_residue(std::span<const uint8_t> payload, uint64_t modulus) {
  const Digest d = sha256(payload);
  uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(d[i]) << (8 * i);
  return v % modulus;
}

}  // namespace

KeyPair ToyRsa::generate(uint64_t seed) {
  Rng rng(derive_seed(seed, "toy-rsa"));
  while (true) {
    const uint64_t p = pick_prime(rng);
    const uint64_t q = pick_prime(rng);
    if (p == q) continue;
    const uint64_t n = p * q;
    const uint64_t lam = (p - 1) / gcd64(p - 1, q - 1) * (q - 1);
    if (gcd64(kPublicExponent, lam) != 1) continue;
    const uint64_t d = invmod(kPublicExponent % lam, lam);
    return {{n, kPublicExponent}, {n, d}};
  }
}

std::vector<uint8_t> ToyRsa::sign(const PrivateKey& key,
                                  std::span<const uint8_t> payload) {
  const uint64_t s = powmod(digest_residue(payload, key.modulus), key.exponent,
                            key.modulus);
  std::vector<uint8_t> sig(8);
  for (int i = 0; i < 8; ++i) sig[i] = static_cast<uint8_t>(s >> (8 * i));
  return sig;
}

bool ToyRsa::verify(const PublicKey& key, std::span<const uint8_t> payload,
                    std::span<const uint8_t> signature) {
  if (signature.size() != 8) return false;
  uint64_t s = 0;
  for (int i = 0; i < 8; ++i) s |= static_cast<uint64_t>(signature[i]) << (8 * i);
  if (s >= key.modulus) return false;
  return powmod(s, key.exponent, key.modulus) == digest_residue(payload, key.modulus);
}

const PublicKey& KeyRegistry::lookup(int64_t client) const {
  const auto it = keys_.find(client);
  if (it == keys_.end()) {
    throw UnknownIdentity("no public key registered for client " +
                          std::to_string(client));
  }
  return it->second;
}

}  // namespace fairbfl
