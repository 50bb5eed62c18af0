#include <algorithm>
#include <cstdint>
#include <vector>

#include "doctest.h"
#include "fairbfl/errors.hpp"
#include "fairbfl/ledger.hpp"

using namespace fairbfl;

namespace {

GradientVector gradient_of(std::vector<double> values, int64_t client,
                           int64_t round) {
  GradientVector g;
  g.values = std::move(values);
  g.client_id = client;
  g.round = round;
  return g;
}

Block template_on(const Chain& chain, int64_t round, int64_t miner,
                  std::vector<double> global) {
  Block b;
  b.index = chain.length();
  b.prev_hash = chain.latest().hash;
  b.round = round;
  b.miner = miner;
  b.global_gradient = gradient_of(std::move(global), kGlobalClient, round);
  b.transactions = {{2, 0.25}, {5, 0.75}};
  return b;
}

Block mined_block(const Chain& chain, int64_t round, uint64_t difficulty,
                  uint64_t seed) {
  Block b = template_on(chain, round, 0, {0.5, -0.25, 0.125});
  const MineResult r = mine(b, difficulty, 1 << 20, seed);
  b.nonce = r.nonce;
  b.hash = r.hash;
  return b;
}

// true when `needle` occurs as a contiguous byte run inside `haystack`
bool contains_bytes(const std::vector<uint8_t>& haystack,
                    const std::vector<uint8_t>& needle) {
  return std::search(haystack.begin(), haystack.end(), needle.begin(),
                     needle.end()) != haystack.end();
}

}  // namespace

TEST_CASE("difficulty one accepts the first attempt") {
  Chain chain = Chain::with_genesis(3);
  const Block b = template_on(chain, 1, 0, {1.0, 2.0, 3.0});
  const MineResult r = mine(b, 1, 100, 42);
  CHECK(r.attempts == 1);
  CHECK(hash_meets_target(r.hash, pow_target(1)));
}

TEST_CASE("mining is deterministic per seed and recomputable") {
  Chain chain = Chain::with_genesis(3);
  const Block b = template_on(chain, 1, 0, {1.0, 2.0, 3.0});
  const MineResult r1 = mine(b, 64, 1 << 20, 9);
  const MineResult r2 = mine(b, 64, 1 << 20, 9);
  CHECK(r1.nonce == r2.nonce);
  CHECK(r1.hash == r2.hash);
  CHECK(r1.attempts == r2.attempts);

  Block sealed = b;
  sealed.nonce = r1.nonce;
  CHECK(block_hash(sealed) == r1.hash);
  CHECK(hash_meets_target(r1.hash, pow_target(64)));
}

TEST_CASE("mining exhausts its attempt budget with a timeout") {
  Chain chain = Chain::with_genesis(1);
  const Block b = template_on(chain, 1, 0, {1.0});
  CHECK_THROWS_AS(mine(b, 1ull << 40, 4, 5), MiningTimeout);
}

TEST_CASE("attempt counts double with difficulty") {
  Chain chain = Chain::with_genesis(2);
  const int trials = 200;
  double mean_lo = 0.0, mean_hi = 0.0;
  for (int t = 0; t < trials; ++t) {
    Block b = template_on(chain, t + 1, 0, {1.0, static_cast<double>(t)});
    mean_lo += static_cast<double>(mine(b, 256, 1 << 22, 1000 + t).attempts);
    mean_hi += static_cast<double>(mine(b, 512, 1 << 22, 2000 + t).attempts);
  }
  mean_lo /= trials;
  mean_hi /= trials;
  CHECK(mean_lo > 0.8 * 256);
  CHECK(mean_lo < 1.2 * 256);
  CHECK(mean_hi / mean_lo > 2.0 * 0.8);
  CHECK(mean_hi / mean_lo < 2.0 * 1.2);
}

TEST_CASE("genesis plus a valid block gives length two") {
  Chain chain = Chain::with_genesis(3);
  CHECK(chain.length() == 1);
  CHECK(chain.latest().index == 0);
  CHECK(chain.latest().round == 0);

  const Block b = mined_block(chain, 1, 16, 3);
  CHECK(static_cast<bool>(verify_block(chain, b, 16)));
  chain.append(b, 16);
  CHECK(chain.length() == 2);
  CHECK(chain.latest().hash == b.hash);
}

TEST_CASE("tampering after mining breaks verification") {
  Chain chain = Chain::with_genesis(3);
  const Block good = mined_block(chain, 1, 16, 4);

  Block reward_tampered = good;
  reward_tampered.transactions[0].amount += 0.001;
  CHECK(!verify_block(chain, reward_tampered, 16).ok);

  Block gradient_tampered = good;
  gradient_tampered.global_gradient.values[1] = 99.0;
  CHECK(!verify_block(chain, gradient_tampered, 16).ok);

  Block wrong_prev = good;
  wrong_prev.prev_hash[0] ^= 0xff;
  CHECK(!verify_block(chain, wrong_prev, 16).ok);

  Block wrong_round = good;
  wrong_round.global_gradient.round = 7;
  CHECK(!verify_block(chain, wrong_round, 16).ok);
}

TEST_CASE("appending the same block twice is rejected") {
  Chain chain = Chain::with_genesis(3);
  const Block b = mined_block(chain, 1, 16, 6);
  chain.append(b, 16);
  CHECK_THROWS_AS(chain.append(b, 16), RejectedBlock);
  CHECK(chain.length() == 2);
}

TEST_CASE("replicas that append the same blocks share a digest") {
  Chain a = Chain::with_genesis(3);
  Chain b = Chain::with_genesis(3);
  CHECK(a.digest() == b.digest());
  for (int round = 1; round <= 3; ++round) {
    const Block blk = mined_block(a, round, 8, 100 + round);
    a.append(blk, 8);
    b.append(blk, 8);
    CHECK(a.digest() == b.digest());
  }
  CHECK(a.length() == 4);
}

TEST_CASE("block bodies never contain local gradient payloads") {
  // blocks pack only the aggregated gradient and reward entries, never uploads
  // The scan checks that no uploaded local payload appears as a byte run in
  // any accepted block.
  const GradientVector local_a = gradient_of({0.125, -3.5, 7.75}, 4, 1);
  const GradientVector local_b = gradient_of({2.5, 0.0625, -11.0}, 9, 1);
  const std::vector<std::vector<uint8_t>> locals = {upload_payload(local_a),
                                                    upload_payload(local_b)};

  Chain chain = Chain::with_genesis(3);
  Block b = template_on(chain, 1, 0, {0.875, -1.5, 2.25});
  const MineResult r = mine(b, 4, 1 << 20, 11);
  b.nonce = r.nonce;
  b.hash = r.hash;
  chain.append(b, 4);

  for (const Block& blk : chain.blocks()) {
    const auto body = serialize_block_body(blk);
    CHECK(!contains_bytes(body, locals[0]));
    CHECK(!contains_bytes(body, locals[1]));
  }
}

TEST_CASE("verification reports a reason on failure") {
  Chain chain = Chain::with_genesis(2);
  Block b = mined_block(chain, 1, 16, 12);
  b.index = 5;
  const VerifyResult v = verify_block(chain, b, 16);
  CHECK(!v.ok);
  CHECK(!v.reason.empty());
}

TEST_CASE("signed uploads round-trip through the registry") {
  ToyRsa rsa;
  KeyRegistry registry;
  const KeyPair kp = rsa.generate(31);
  registry.register_key(6, kp.pub);

  const GradientVector g = gradient_of({1.0, -2.0}, 6, 3);
  const SignedUpload upload = sign_upload(rsa, registry, kp, g);
  CHECK(upload.signer == 6);
  CHECK(static_cast<bool>(verify_upload(rsa, registry, upload)));

  SignedUpload tampered = upload;
  tampered.gradient.values[0] += 1e-9;
  CHECK(!verify_upload(rsa, registry, tampered).ok);

  SignedUpload wrong_signer = upload;
  wrong_signer.signer = 7;
  CHECK(!verify_upload(rsa, registry, wrong_signer).ok);
}

TEST_CASE("signing requires a registered matching key") {
  ToyRsa rsa;
  KeyRegistry registry;
  const KeyPair kp = rsa.generate(33);
  const GradientVector g = gradient_of({1.0}, 2, 1);
  CHECK_THROWS_AS(sign_upload(rsa, registry, kp, g), UnknownIdentity);

  registry.register_key(2, rsa.generate(34).pub);  // different key on file
  CHECK_THROWS_AS(sign_upload(rsa, registry, kp, g), UnknownIdentity);
}

TEST_CASE("an unregistered signer fails verification with a reason") {
  ToyRsa rsa;
  KeyRegistry registry;
  const KeyPair kp = rsa.generate(35);
  registry.register_key(1, kp.pub);
  const SignedUpload upload =
      sign_upload(rsa, registry, kp, gradient_of({2.0}, 1, 1));

  KeyRegistry empty;
  const VerifyResult v = verify_upload(rsa, empty, upload);
  CHECK(!v.ok);
  CHECK(!v.reason.empty());
}

TEST_CASE("chain dump lists one line per block") {
  Chain chain = Chain::with_genesis(2);
  chain.append(mined_block(chain, 1, 4, 40), 4);
  const std::string text = chain.dump();
  CHECK(std::count(text.begin(), text.end(), '\n') == 2);
  CHECK(text.find("rewards=2:0.25;5:0.75") != std::string::npos);
}

