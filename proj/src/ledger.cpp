#include "fairbfl/ledger.hpp"

#include <cinttypes>
#include <cstdio>

#include "fairbfl/errors.hpp"
#include "fairbfl/rng.hpp"

namespace fairbfl {

std::vector<uint8_t> serialize_gradient(const GradientVector& g) {
  ByteWriter w;
  w.u64(static_cast<uint64_t>(g.client_id));
  w.u64(static_cast<uint64_t>(g.round));
  w.vec_f64(g.values);
  return w.take();
}

std::vector<uint8_t> serialize_block_body(const Block& b) {
  ByteWriter w;
  w.raw(serialize_gradient(b.global_gradient));
  w.u64(b.transactions.size());
  for (const RewardEntry& t : b.transactions) {
    w.u64(static_cast<uint64_t>(t.client));
    w.f64(t.amount);
  }
  return w.take();
}

namespace {

std::vector<uint8_t> header_bytes(const Block& b, const Digest& body_digest) {
  ByteWriter w;
  w.u64(b.index);
  w.raw(b.prev_hash);
  w.u64(static_cast<uint64_t>(b.round));
  w.u64(static_cast<uint64_t>(b.miner));
  w.raw(body_digest);
  w.u64(b.nonce);
  return w.take();
}

}  // namespace

std::vector<uint8_t> serialize_block(const Block& b) {
  const auto body = serialize_block_body(b);
  ByteWriter w;
  w.raw(header_bytes(b, sha256(body)));
  w.raw(b.hash);
  w.raw(body);
  return w.take();
}

Digest block_hash(const Block& b) {
  return sha256(header_bytes(b, sha256(serialize_block_body(b))));
}

U256 pow_target(uint64_t difficulty) {
  if (difficulty < 1) throw Error("difficulty must be at least 1");
  return U256::max_divided_by(difficulty);
}

bool hash_meets_target(const Digest& h, const U256& target) {
  return U256::from_be_bytes(h) < target;
}

MineResult mine(const Block& block_template, uint64_t difficulty,
                uint64_t max_attempts, uint64_t seed) {
  const U256 target = pow_target(difficulty);
  const Digest body_digest = sha256(serialize_block_body(block_template));
  Block b = block_template;
  Rng rng(derive_seed(seed, "nonce"));

  for (uint64_t attempt = 1; attempt <= max_attempts; ++attempt) {
    b.nonce = rng.next_u64();
    const Digest h = sha256(header_bytes(b, body_digest));
    if (hash_meets_target(h, target)) return {b.nonce, h, attempt};
  }
  throw MiningTimeout("no nonce below target within " +
                      std::to_string(max_attempts) + " attempts");
}

Chain Chain::with_genesis(size_t gradient_dim) {
  Chain c;
  Block genesis;
  genesis.index = 0;
  genesis.round = 0;
  genesis.miner = kGlobalClient;
  genesis.global_gradient.client_id = kGlobalClient;
  genesis.global_gradient.round = 0;
  genesis.global_gradient.values.assign(gradient_dim, 0.0);
  genesis.hash = block_hash(genesis);
  c.blocks_.push_back(std::move(genesis));
  return c;
}

VerifyResult verify_block(const Chain& chain, const Block& block, uint64_t difficulty) {
  if (chain.blocks_.empty()) return {false, "chain has no genesis"};
  if (block.index != chain.blocks_.size()) {
    return {false, "index " + std::to_string(block.index) + " is not next (expected " +
                       std::to_string(chain.blocks_.size()) + ")"};
  }
  if (block.prev_hash != chain.blocks_.back().hash) {
    return {false, "prev_hash does not match chain tip"};
  }
  if (block.global_gradient.client_id != kGlobalClient) {
    return {false, "block body must carry the aggregated gradient only"};
  }
  if (block.global_gradient.round != block.round) {
    return {false, "gradient round does not match block round"};
  }
  const Digest recomputed = block_hash(block);
  if (recomputed != block.hash) return {false, "hash does not recompute"};
  if (!hash_meets_target(block.hash, pow_target(difficulty))) {
    return {false, "hash does not meet difficulty target"};
  }
  return {true, ""};
}

void Chain::append(const Block& block, uint64_t difficulty) {
  const VerifyResult v = verify_block(*this, block, difficulty);
  if (!v) throw RejectedBlock("append: " + v.reason);
  blocks_.push_back(block);
}

Digest Chain::digest() const {
  Sha256 h;
  for (const Block& b : blocks_) {
    const auto bytes = serialize_block(b);
    h.update(bytes.data(), bytes.size());
  }
  return h.finish();
}

std::string Chain::dump() const {
  std::string out;
  char line[256];
  for (const Block& b : blocks_) {
    std::snprintf(line, sizeof(line), "block %" PRIu64 " prev=%s nonce=%" PRIu64
                  " round=%" PRId64 " miner=%" PRId64 " hash=%s rewards=",
                  b.index, to_hex(b.prev_hash).c_str(), b.nonce, b.round, b.miner,
                  to_hex(b.hash).c_str());
    out += line;
    for (size_t i = 0; i < b.transactions.size(); ++i) {
      std::snprintf(line, sizeof(line), "%s%" PRId64 ":%.17g", i == 0 ? "" : ";",
                    b.transactions[i].client, b.transactions[i].amount);
      out += line;
    }
    out += '\n';
  }
  return out;
}

std::vector<uint8_t> upload_payload(const GradientVector& g) {
  return serialize_gradient(g);
}

SignedUpload sign_upload(SignatureScheme& scheme, const KeyRegistry& registry,
                         const KeyPair& keypair, const GradientVector& gradient) {
  if (!registry.known(gradient.client_id)) {
    throw UnknownIdentity("sign_upload: client " + std::to_string(gradient.client_id) +
                          " is not registered");
  }
  if (!(registry.lookup(gradient.client_id) == keypair.pub)) {
    throw UnknownIdentity("sign_upload: keypair does not belong to client " +
                          std::to_string(gradient.client_id));
  }
  SignedUpload up;
  up.gradient = gradient;
  up.signer = gradient.client_id;
  up.signature = scheme.sign(keypair.priv, upload_payload(gradient));
  return up;
}

VerifyResult verify_upload(SignatureScheme& scheme, const KeyRegistry& registry,
                           const SignedUpload& upload) {
  if (!registry.known(upload.signer)) return {false, "unregistered signer"};
  if (upload.signer != upload.gradient.client_id) {
    return {false, "signer does not match gradient client"};
  }
  if (!scheme.verify(registry.lookup(upload.signer), upload_payload(upload.gradient),
                     upload.signature)) {
    return {false, "signature does not verify"};
  }
  return {true, ""};
}

}  // namespace fairbfl
