#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "fairbfl/model.hpp"
#include "fairbfl/serialize.hpp"
#include "fairbfl/sha256.hpp"
#include "fairbfl/signature.hpp"
#include "fairbfl/u256.hpp"

namespace fairbfl {

struct RewardEntry {
  int64_t client = 0;
  double amount = 0.0;
  friend bool operator==(const RewardEntry&, const RewardEntry&) = default;
};

// One block per communication round. The body carries exactly the round's
// global gradient plus reward transactions; local gradients never enter.
// The hash covers a fixed-size header (index, prev_hash, round, miner, body
// digest, nonce), so tampering with any body byte breaks it.
struct Block {
  uint64_t index = 0;
  Digest prev_hash{};
  uint64_t nonce = 0;
  int64_t round = 0;
  GradientVector global_gradient;
  std::vector<RewardEntry> transactions;
  int64_t miner = 0;
  Digest hash{};
};

struct SignedUpload {
  GradientVector gradient;
  std::vector<uint8_t> signature;
  int64_t signer = 0;
};

struct VerifyResult {
  bool ok = false;
  std::string reason;
  explicit operator bool() const { return ok; }
};

std::vector<uint8_t> serialize_gradient(const GradientVector& g);
std::vector<uint8_t> serialize_block_body(const Block& b);
std::vector<uint8_t> serialize_block(const Block& b);  // header fields + body
Digest block_hash(const Block& b);

U256 pow_target(uint64_t difficulty);
bool hash_meets_target(const Digest& h, const U256& target);

struct MineResult {
  uint64_t nonce = 0;
  Digest hash{};
  uint64_t attempts = 0;
};

// Draws nonces from the seeded stream until the header hash falls below
// Target = (2^256 - 1) / difficulty.
MineResult mine(const Block& block_template, uint64_t difficulty,
                uint64_t max_attempts, uint64_t seed);

class Chain {
 public:
  // Genesis carries an all-zeros global gradient for round 0 so round 1 has
  // a latest block to read from.
  static Chain with_genesis(size_t gradient_dim);

  const std::vector<Block>& blocks() const { return blocks_; }
  const Block& latest() const { return blocks_.back(); }
  size_t length() const { return blocks_.size(); }

  void append(const Block& block, uint64_t difficulty);  // RejectedBlock if invalid
  Digest digest() const;  // hash over the full serialized chain
  std::string dump() const;

  friend VerifyResult verify_block(const Chain& chain, const Block& block,
                                   uint64_t difficulty);

 private:
  std::vector<Block> blocks_;
};

VerifyResult verify_block(const Chain& chain, const Block& block, uint64_t difficulty);

std::vector<uint8_t> upload_payload(const GradientVector& g);
SignedUpload sign_upload(SignatureScheme& scheme, const KeyRegistry& registry,
                         const KeyPair& keypair, const GradientVector& gradient);
VerifyResult verify_upload(SignatureScheme& scheme, const KeyRegistry& registry,
                           const SignedUpload& upload);

}  // namespace fairbfl
