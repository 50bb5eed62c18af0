#include "fairbfl/orchestrator.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

#include "fairbfl/errors.hpp"
#include "fairbfl/rng.hpp"
#include "fairbfl/serialize.hpp"

namespace fairbfl {

namespace {

constexpr size_t kDummyTxModelBytes = 256;  // wire size charged per chain-mode tx
constexpr size_t kBlockHeaderBytes = 96;

double now_seconds() {
  return std::chrono::duration<double>(
             std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

// Scoped phase clock: in wallclock mode the measured span replaces the
// modeled delay, in simulated mode the modeled value passes through.
struct PhaseClock {
  explicit PhaseClock(bool wallclock) : wallclock_(wallclock) {
    if (wallclock_) start_ = now_seconds();
  }
  double resolve(double modeled) const {
    return wallclock_ ? now_seconds() - start_ : modeled;
  }
  bool wallclock_ = false;
  double start_ = 0.0;
};

}  // namespace

void validate(const SimConfig& cfg) {
  if (cfg.n_clients < 1) throw ConfigError("n_clients must be at least 1");
  if (cfg.n_miners < 1) throw ConfigError("n_miners must be at least 1");
  if (!(cfg.lambda > 0.0) || cfg.lambda > 1.0) {
    throw ConfigError("lambda must lie in (0, 1]");
  }
  if (std::llround(cfg.lambda * cfg.n_clients) < 1) {
    throw ConfigError("lambda selects no clients for n_clients");
  }
  if (cfg.rounds < 1) throw ConfigError("rounds must be at least 1");
  if (!(cfg.hp.eta >= 0.0)) throw ConfigError("eta must be non-negative");
  if (cfg.hp.epochs < 1) throw ConfigError("epochs must be at least 1");
  if (cfg.hp.batch_size < 1) throw ConfigError("batch_size must be at least 1");
  if (cfg.hp.mu < 0.0) throw ConfigError("mu must be non-negative");
  if (cfg.difficulty < 1) throw ConfigError("difficulty must be at least 1");
  if (cfg.block_capacity < 1) throw ConfigError("block_capacity must be at least 1");
  if (!(cfg.cluster.eps > 0.0)) throw ConfigError("cluster_eps must be positive");
  if (cfg.cluster.min_pts < 1) throw ConfigError("cluster_min_pts must be at least 1");
  if (!(cfg.base > 0.0)) throw ConfigError("base must be positive");
  if (cfg.hidden_width < 0) throw ConfigError("hidden_width must be non-negative");
  if (cfg.attack.enabled) {
    if (cfg.attack.min_attackers < 0 ||
        cfg.attack.min_attackers > cfg.attack.max_attackers) {
      throw ConfigError("attack_min must lie in [0, attack_max]");
    }
    if (!(cfg.attack.scale > 0.0)) throw ConfigError("attack_scale must be positive");
  }
  if (!(cfg.delay.base_latency > 0.0)) throw ConfigError("base_latency must be positive");
  if (!(cfg.delay.per_byte > 0.0)) throw ConfigError("per_byte must be positive");
  if (!(cfg.delay.jitter_mean > 0.0)) throw ConfigError("jitter_mean must be positive");
  if (!(cfg.delay.hash_rate > 0.0)) throw ConfigError("hash_rate must be positive");
  if (!(cfg.delay.local_step_cost > 0.0)) {
    throw ConfigError("local_step_cost must be positive");
  }
  if (!(cfg.delay.cluster_pair_cost > 0.0)) {
    throw ConfigError("cluster_pair_cost must be positive");
  }
  if (!(cfg.delay.aggregate_value_cost > 0.0)) {
    throw ConfigError("aggregate_value_cost must be positive");
  }
  if (cfg.data.images_path.empty() != cfg.data.labels_path.empty()) {
    throw ConfigError("images_path and labels_path must be set together");
  }
  if (cfg.data.images_path.empty()) {
    if (cfg.data.synth_samples < 1) throw ConfigError("synth_samples must be positive");
    if (cfg.data.synth_features < 1) {
      throw ConfigError("synth_features must be positive");
    }
    if (cfg.data.synth_classes < 1) throw ConfigError("synth_classes must be positive");
    if (cfg.data.synth_separation < 0.0) {
      throw ConfigError("synth_separation must be non-negative");
    }
  }
  if (cfg.data.shards_per_client < 1) {
    throw ConfigError("shards_per_client must be at least 1");
  }
  if (cfg.data.noisy_client_fraction < 0.0 || cfg.data.noisy_client_fraction > 1.0) {
    throw ConfigError("noisy_client_fraction must lie in [0, 1]");
  }
  if (cfg.data.label_noise_rate < 0.0 || cfg.data.label_noise_rate > 1.0) {
    throw ConfigError("label_noise_rate must lie in [0, 1]");
  }
  if (cfg.lr_schedule == LrSchedule::inverse_decay && !(cfg.hp.mu > 0.0)) {
    throw ConfigError("mu must be positive for the inverse_decay schedule");
  }
}

std::vector<int64_t> select_clients(int n, double lambda, int64_t round,
                                    uint64_t seed) {
  int k = static_cast<int>(std::llround(lambda * n));
  k = std::clamp(k, 1, n);
  Rng rng(derive_seed(seed, "select", static_cast<uint64_t>(round)));
  const auto picked = rng.sample_without_replacement(n, k);
  return std::vector<int64_t>(picked.begin(), picked.end());
}

std::map<int64_t, int64_t> associate(const std::vector<int64_t>& clients,
                                     int n_miners, uint64_t seed) {
  if (n_miners < 1) throw ProtocolViolation("associate: no miners");
  Rng rng(derive_seed(seed, "assoc"));
  std::map<int64_t, int64_t> assignment;
  for (const int64_t c : clients) {
    assignment[c] = static_cast<int64_t>(rng.next_below(
        static_cast<uint64_t>(n_miners)));
  }
  return assignment;
}

std::vector<GradientSet> exchange(const std::vector<GradientSet>& per_miner) {
  GradientSet merged;
  bool round_set = false;
  for (const GradientSet& gs : per_miner) {
    if (!round_set && !gs.entries.empty()) {
      merged.round = gs.round;
      round_set = true;
    }
    for (const auto& [id, g] : gs.entries) {
      if (merged.entries.count(id) > 0) {
        throw ProtocolViolation("exchange: client " + std::to_string(id) +
                                " uploaded to more than one miner");
      }
      merged.entries[id] = g;
    }
  }
  return std::vector<GradientSet>(per_miner.size(), merged);
}

GradientVector inject_attack(const GradientVector& gradient, const AttackConfig& cfg,
                             uint64_t seed) {
  GradientVector out = gradient;
  if (cfg.perturbation == Perturbation::sign_flip) {
    for (double& v : out.values) v *= -cfg.scale;
  } else {
    Rng rng(seed);
    for (double& v : out.values) v += cfg.scale * rng.normal();
  }
  return out;
}

std::optional<int> check_convergence(const std::vector<double>& accuracy) {
  int streak = 0;
  for (size_t i = 1; i < accuracy.size(); ++i) {
    if (std::fabs(accuracy[i] - accuracy[i - 1]) <= 0.005) {
      if (++streak >= 5) return static_cast<int>(i) + 1;
    } else {
      streak = 0;
    }
  }
  return std::nullopt;
}

EnvelopeResult convergence_envelope(const std::vector<double>& loss, double f_star,
                                 double mu, double L, int epochs, int fit_begin,
                                 int fit_end, int check_end) {
  if (!(mu > 0.0)) {
    throw UnsupportedForConvergenceCheck("envelope needs strong convexity (mu > 0)");
  }
  if (loss.empty()) throw EmptyData("convergence_envelope: empty loss history");
  fit_end = std::min(fit_end, static_cast<int>(loss.size()));
  check_end = std::min(check_end, static_cast<int>(loss.size()));

  EnvelopeResult result;
  result.gamma = std::max(8.0 * L / mu, static_cast<double>(epochs));
  for (int r = fit_begin; r <= fit_end; ++r) {
    const double gap = std::max(0.0, loss[static_cast<size_t>(r - 1)] - f_star);
    result.c = std::max(result.c, gap * (result.gamma + r));
  }
  for (int r = fit_end + 1; r <= check_end; ++r) {
    const double gap = loss[static_cast<size_t>(r - 1)] - f_star;
    if (gap > result.c / (result.gamma + r)) ++result.violations;
  }
  return result;
}

Simulation::Simulation(const SimConfig& cfg) : cfg_(cfg) {
  validate(cfg_);

  if (!cfg_.data.images_path.empty()) {
    ds_ = load_idx(cfg_.data.images_path, cfg_.data.labels_path);
  } else {
    ds_ = synth_classification(cfg_.data.synth_samples, cfg_.data.synth_features,
                               cfg_.data.synth_classes, cfg_.data.synth_separation,
                               cfg_.seed);
  }

  layout_.kind = cfg_.hidden_width > 0 ? ModelKind::mlp : ModelKind::logistic;
  layout_.input_dim = static_cast<int>(ds_.dim);
  layout_.class_count = ds_.class_count;
  layout_.hidden_width = cfg_.hidden_width;

  shards_ = partition(ds_, cfg_.n_clients, cfg_.data.partition,
                      cfg_.data.shards_per_client, cfg_.seed);

  const int noisy = static_cast<int>(cfg_.data.noisy_client_fraction * cfg_.n_clients);
  if (noisy > 0 && cfg_.data.label_noise_rate > 0.0) {
    Rng rng(derive_seed(cfg_.seed, "noisy-roster"));
    for (const int c : rng.sample_without_replacement(cfg_.n_clients, noisy)) {
      noisy_clients_.insert(c);
      corrupt_labels(ds_, shards_[static_cast<size_t>(c)],
                     cfg_.data.label_noise_rate, cfg_.seed);
    }
  }

  params_ = ModelParams::zeros(layout_);

  if (cfg_.mode != Mode::chain) {
    for (int c = 0; c < cfg_.n_clients; ++c) {
      KeyPair kp = scheme_.generate(derive_seed(cfg_.seed, "key",
                                                static_cast<uint64_t>(c)));
      registry_.register_key(c, kp.pub);
      keypairs_[c] = std::move(kp);
    }
  }

  const size_t chain_dim = cfg_.mode == Mode::chain ? 0 : layout_.param_count();
  const int replicas = cfg_.mode == Mode::fl ? 1 : cfg_.n_miners;
  for (int k = 0; k < replicas; ++k) {
    chains_.push_back(Chain::with_genesis(chain_dim));
  }

  if (cfg_.lr_schedule == LrSchedule::inverse_decay) {
    if (layout_.kind == ModelKind::mlp) {
      throw UnsupportedForConvergenceCheck(
          "inverse_decay schedule requires the strongly convex logistic model");
    }
    lambda_max_ = max_gram_eigenvalue(ds_);
    const double L = cfg_.hp.mu + lambda_max_;
    gamma_ = std::max(8.0 * L / cfg_.hp.mu, static_cast<double>(cfg_.hp.epochs));
  }
}

double Simulation::round_eta(int64_t r) const {
  if (cfg_.lr_schedule == LrSchedule::fixed) return cfg_.hp.eta;
  return 2.0 / (cfg_.hp.mu * (gamma_ + static_cast<double>(r)));
}

double Simulation::jitter(int64_t client, int64_t r) const {
  Rng rng(derive_seed(cfg_.seed, "jitter", static_cast<uint64_t>(client),
                      static_cast<uint64_t>(r)));
  return rng.exponential(cfg_.delay.jitter_mean);
}

double Simulation::mining_time(int64_t r, int64_t miner) const {
  Rng rng(derive_seed(cfg_.seed, "mine-time", static_cast<uint64_t>(r),
                      static_cast<uint64_t>(miner)));
  return rng.exponential(static_cast<double>(cfg_.difficulty) /
                         cfg_.delay.hash_rate);
}

std::vector<int64_t> Simulation::pick_participants(int64_t r, RoundReport& report) {
  report.selected = select_clients(cfg_.n_clients, cfg_.lambda, r, cfg_.seed);
  std::vector<int64_t> participants;
  for (const int64_t c : report.selected) {
    if (dropped_prev_.count(c) == 0) participants.push_back(c);
  }
  // If last round dropped the entire selection, waive the exclusion rather
  // than run an empty round.
  if (participants.empty()) participants = report.selected;
  report.participants = participants;
  return participants;
}

std::set<int64_t> Simulation::pick_attackers(const std::vector<int64_t>& participants,
                                             int64_t r) {
  std::set<int64_t> attackers;
  if (!cfg_.attack.enabled || participants.empty()) return attackers;
  Rng rng(derive_seed(cfg_.seed, "attack-roster", static_cast<uint64_t>(r)));
  const int span = cfg_.attack.max_attackers - cfg_.attack.min_attackers + 1;
  int count = cfg_.attack.min_attackers +
              static_cast<int>(rng.next_below(static_cast<uint64_t>(span)));
  count = std::min(count, static_cast<int>(participants.size()));
  if (count <= 0) return attackers;
  for (const int idx :
       rng.sample_without_replacement(static_cast<int>(participants.size()), count)) {
    attackers.insert(participants[static_cast<size_t>(idx)]);
  }
  return attackers;
}

GradientSet Simulation::collect_gradients(const std::vector<int64_t>& participants,
                                          const std::set<int64_t>& attackers,
                                          int64_t r, bool sign,
                                          std::map<int64_t, int>* steps,
                                          std::map<int64_t, size_t>* bytes) {
  HyperParams hp = cfg_.hp;
  hp.eta = round_eta(r);

  GradientSet gset;
  gset.round = r;
  for (const int64_t c : participants) {
    LocalUpdateStats stats;
    GradientVector g =
        local_update(params_, ds_, shards_[static_cast<size_t>(c)], hp,
                     derive_seed(cfg_.seed, "sgd", static_cast<uint64_t>(c),
                                 static_cast<uint64_t>(r)),
                     r, &stats);
    if (attackers.count(c) > 0) {
      g = inject_attack(g, cfg_.attack,
                        derive_seed(cfg_.seed, "perturb", static_cast<uint64_t>(c),
                                    static_cast<uint64_t>(r)));
    }
    if (steps) (*steps)[c] = stats.steps;
    size_t upload_bytes = upload_payload(g).size();
    if (sign) {
      const SignedUpload up = sign_upload(scheme_, registry_, keypairs_.at(c), g);
      const VerifyResult v = verify_upload(scheme_, registry_, up);
      if (!v) throw ProtocolViolation("round " + std::to_string(r) + ": " + v.reason);
      upload_bytes += up.signature.size();
    }
    if (bytes) (*bytes)[c] = upload_bytes;
    gset.entries[c] = std::move(g);
  }
  return gset;
}

void Simulation::apply_global(const GradientVector& global) {
  for (size_t p = 0; p < params_.values.size(); ++p) {
    params_.values[p] += global.values[p];
  }
}

void Simulation::fill_metrics(RoundReport& report) {
  double acc = 0.0;
  for (const DataShard& shard : shards_) {
    acc += evaluate(params_, ds_, shard.indices).accuracy;
  }
  report.mean_accuracy = acc / static_cast<double>(shards_.size());
  report.global_loss = evaluate(params_, ds_, cfg_.hp.mu).loss;
  accuracy_history_.push_back(report.mean_accuracy);
  loss_history_.push_back(report.global_loss);
}

RoundReport Simulation::run_round() {
  const int64_t r = ++round_;
  switch (cfg_.mode) {
    case Mode::bfl:
      return run_bfl_round(r);
    case Mode::fl:
      return run_fl_round(r);
    case Mode::chain:
      return run_chain_round(r);
  }
  throw ProtocolViolation("unknown mode");
}

RoundReport Simulation::run_bfl_round(int64_t r) {
  const bool wallclock = cfg_.delay.time_mode == TimeMode::wallclock;
  RoundReport report;
  report.round = r;

  const auto participants = pick_participants(r, report);
  report.attackers = pick_attackers(participants, r);

  // local update phase
  trace_.push_back({r, Phase::local_update});
  PhaseClock local_clock(wallclock);
  std::map<int64_t, int> steps;
  std::map<int64_t, size_t> bytes;
  GradientSet all = collect_gradients(participants, report.attackers, r,
                                      /*sign=*/true, &steps, &bytes);
  int max_steps = 0;
  for (const auto& [c, s] : steps) max_steps = std::max(max_steps, s);
  report.t_local = local_clock.resolve(max_steps * cfg_.delay.local_step_cost);

  // upload phase: locals go to their associated miners
  trace_.push_back({r, Phase::upload});
  PhaseClock up_clock(wallclock);
  const auto assignment =
      associate(participants, cfg_.n_miners,
                derive_seed(cfg_.seed, "round-assoc", static_cast<uint64_t>(r)));
  std::vector<GradientSet> per_miner(static_cast<size_t>(cfg_.n_miners));
  for (auto& gs : per_miner) gs.round = r;
  for (const auto& [c, k] : assignment) {
    per_miner[static_cast<size_t>(k)].entries[c] = all.entries.at(c);
  }
  double t_up = 0.0;
  size_t union_bytes = 0;
  for (const int64_t c : participants) {
    t_up = std::max(t_up, cfg_.delay.base_latency +
                              static_cast<double>(bytes.at(c)) * cfg_.delay.per_byte +
                              jitter(c, r));
    union_bytes += bytes.at(c);
  }
  report.t_up = up_clock.resolve(t_up);

  // exchange phase: miners gossip until every one holds the union
  trace_.push_back({r, Phase::exchange});
  PhaseClock ex_clock(wallclock);
  const auto exchanged = exchange(per_miner);
  GradientSet gset = exchanged.front();
  report.t_ex = ex_clock.resolve(
      static_cast<double>(cfg_.n_miners - 1) *
      (cfg_.delay.base_latency + static_cast<double>(union_bytes) * cfg_.delay.per_byte));

  // global update phase: contribution scoring, then aggregation
  trace_.push_back({r, Phase::global_update});
  PhaseClock gl_clock(wallclock);
  const GradientVector candidate = simple_average(gset);
  gset.global = candidate;
  auto [contribution, updated] =
      identify_contributions(gset, cfg_.cluster, cfg_.strategy, cfg_.base);
  report.contribution = contribution;
  dropped_prev_ = contribution.dropped;

  GradientVector global;
  bool zero_fallback = false;
  if (cfg_.aggregation == Aggregation::simple) {
    global = simple_average(updated);
  } else {
    auto thetas = aggregation_thetas(updated, candidate);
    if (cfg_.theta_similarity) {
      for (auto& [id, t] : thetas) t = 1.0 - t / 2.0;
    }
    const double scale = cfg_.aggregate_literal ? 1.0 / cfg_.lambda : 1.0;
    global = fair_aggregate(updated, thetas, scale, &zero_fallback);
  }
  report.contribution.zero_theta_fallback |= zero_fallback;
  const double cluster_points = static_cast<double>(gset.entries.size() + 1);
  report.t_gl = gl_clock.resolve(
      cfg_.delay.cluster_pair_cost * cluster_points * cluster_points +
      cfg_.delay.aggregate_value_cost * static_cast<double>(updated.entries.size()) *
          static_cast<double>(global.values.size()));

  // mining phase: fastest miner appends the round block to every replica
  trace_.push_back({r, Phase::mining});
  PhaseClock bl_clock(wallclock);
  double t_win = mining_time(r, 0);
  int64_t winner = 0;
  for (int k = 1; k < cfg_.n_miners; ++k) {
    const double t = mining_time(r, k);
    if (t < t_win) {
      t_win = t;
      winner = k;
    }
  }
  Block block;
  block.index = chains_.front().length();
  block.prev_hash = chains_.front().latest().hash;
  block.round = r;
  block.global_gradient = global;
  block.transactions = contribution.rewards;
  block.miner = winner;
  const MineResult mined =
      mine(block, cfg_.difficulty, cfg_.difficulty * 1000 + 100000,
           derive_seed(cfg_.seed, "mine-nonce", static_cast<uint64_t>(r)));
  block.nonce = mined.nonce;
  block.hash = mined.hash;
  for (Chain& chain : chains_) chain.append(block, cfg_.difficulty);
  const double block_bytes = static_cast<double>(serialize_block(block).size());
  report.t_bl = bl_clock.resolve(
      t_win + cfg_.delay.base_latency + block_bytes * cfg_.delay.per_byte);
  report.winning_miner = winner;
  report.block_hash = block.hash;
  for (const RewardEntry& e : block.transactions) report.reward_sum += e.amount;

  apply_global(global);
  fill_metrics(report);
  report.detection = report.attackers.empty()
                         ? std::nan("")
                         : detection_rate(report.attackers, contribution.dropped);
  report.total_delay =
      report.t_local + report.t_up + report.t_ex + report.t_gl + report.t_bl;
  return report;
}

RoundReport Simulation::run_fl_round(int64_t r) {
  const bool wallclock = cfg_.delay.time_mode == TimeMode::wallclock;
  RoundReport report;
  report.round = r;

  const auto participants = pick_participants(r, report);
  report.attackers = pick_attackers(participants, r);

  trace_.push_back({r, Phase::local_update});
  PhaseClock local_clock(wallclock);
  std::map<int64_t, int> steps;
  std::map<int64_t, size_t> bytes;
  GradientSet gset = collect_gradients(participants, report.attackers, r,
                                       /*sign=*/false, &steps, &bytes);
  int max_steps = 0;
  for (const auto& [c, s] : steps) max_steps = std::max(max_steps, s);
  report.t_local = local_clock.resolve(max_steps * cfg_.delay.local_step_cost);

  // uploads go straight to the server (miner 0); no signatures, no exchange
  trace_.push_back({r, Phase::upload});
  PhaseClock up_clock(wallclock);
  double t_up = 0.0;
  for (const int64_t c : participants) {
    t_up = std::max(t_up, cfg_.delay.base_latency +
                              static_cast<double>(bytes.at(c)) * cfg_.delay.per_byte +
                              jitter(c, r));
  }
  report.t_up = up_clock.resolve(t_up);

  trace_.push_back({r, Phase::global_update});
  PhaseClock gl_clock(wallclock);
  const GradientVector global = simple_average(gset);
  server_globals_.push_back(global);
  report.t_gl = gl_clock.resolve(cfg_.delay.aggregate_value_cost *
                                 static_cast<double>(gset.entries.size()) *
                                 static_cast<double>(global.values.size()));

  apply_global(global);
  fill_metrics(report);
  report.detection = std::nan("");
  report.total_delay =
      report.t_local + report.t_up + report.t_ex + report.t_gl + report.t_bl;
  return report;
}

RoundReport Simulation::run_chain_round(int64_t r) {
  const bool wallclock = cfg_.delay.time_mode == TimeMode::wallclock;
  RoundReport report;
  report.round = r;
  report.selected = select_clients(cfg_.n_clients, cfg_.lambda, r, cfg_.seed);

  // Every client submits one fixed-size dummy transaction per round.
  trace_.push_back({r, Phase::upload});
  PhaseClock up_clock(wallclock);
  double t_up = 0.0;
  for (int64_t c = 0; c < cfg_.n_clients; ++c) {
    report.participants.push_back(c);
    t_up = std::max(t_up, cfg_.delay.base_latency +
                              static_cast<double>(kDummyTxModelBytes) *
                                  cfg_.delay.per_byte +
                              jitter(c, r));
  }
  report.t_up = up_clock.resolve(t_up);

  trace_.push_back({r, Phase::exchange});
  PhaseClock ex_clock(wallclock);
  const double pool_bytes =
      static_cast<double>(cfg_.n_clients) * static_cast<double>(kDummyTxModelBytes);
  report.t_ex = ex_clock.resolve(static_cast<double>(cfg_.n_miners - 1) *
                                 (cfg_.delay.base_latency +
                                  pool_bytes * cfg_.delay.per_byte));

  trace_.push_back({r, Phase::mining});
  PhaseClock bl_clock(wallclock);
  const int64_t backlog = queue_len_ + cfg_.n_clients;
  const int64_t drained = std::min<int64_t>(backlog, cfg_.block_capacity);
  queue_len_ = backlog - drained;
  report.queue_len = queue_len_;

  double t_win = mining_time(r, 0);
  int64_t winner = 0;
  for (int k = 1; k < cfg_.n_miners; ++k) {
    const double t = mining_time(r, k);
    if (t < t_win) {
      t_win = t;
      winner = k;
    }
  }
  Block block;
  block.index = chains_.front().length();
  block.prev_hash = chains_.front().latest().hash;
  block.round = r;
  block.global_gradient.client_id = kGlobalClient;
  block.global_gradient.round = r;
  for (int64_t j = 0; j < drained; ++j) block.transactions.push_back({j, 0.0});
  block.miner = winner;
  const MineResult mined =
      mine(block, cfg_.difficulty, cfg_.difficulty * 1000 + 100000,
           derive_seed(cfg_.seed, "mine-nonce", static_cast<uint64_t>(r)));
  block.nonce = mined.nonce;
  block.hash = mined.hash;
  for (Chain& chain : chains_) chain.append(block, cfg_.difficulty);
  report.winning_miner = winner;
  report.block_hash = block.hash;

  // Every miner redundantly rebroadcasts the block over all m(m-1) links
  // (fork-cost surrogate), and the standing backlog charges extra block
  // intervals at the pool's aggregate hash rate.
  const double model_block_bytes = static_cast<double>(
      kBlockHeaderBytes + static_cast<size_t>(drained) * kDummyTxModelBytes);
  const double links =
      static_cast<double>(cfg_.n_miners) * static_cast<double>(cfg_.n_miners - 1);
  const double queue_wait =
      static_cast<double>(queue_len_) / static_cast<double>(cfg_.block_capacity) *
      (static_cast<double>(cfg_.difficulty) /
       (static_cast<double>(cfg_.n_miners) * cfg_.delay.hash_rate));
  report.t_bl = bl_clock.resolve(
      t_win + links * (cfg_.delay.base_latency +
                       model_block_bytes * cfg_.delay.per_byte) +
      queue_wait);

  report.mean_accuracy = std::nan("");
  report.global_loss = std::nan("");
  report.detection = std::nan("");
  accuracy_history_.push_back(report.mean_accuracy);
  loss_history_.push_back(report.global_loss);
  report.total_delay =
      report.t_local + report.t_up + report.t_ex + report.t_gl + report.t_bl;
  return report;
}

std::vector<RoundReport> Simulation::run() {
  std::vector<RoundReport> reports;
  reports.reserve(static_cast<size_t>(cfg_.rounds));
  for (int r = 0; r < cfg_.rounds; ++r) reports.push_back(run_round());
  return reports;
}

std::vector<uint8_t> serialize_report(const RoundReport& r) {
  ByteWriter w;
  w.u64(static_cast<uint64_t>(r.round));
  w.f64(r.t_local);
  w.f64(r.t_up);
  w.f64(r.t_ex);
  w.f64(r.t_gl);
  w.f64(r.t_bl);
  w.f64(r.total_delay);
  w.f64(r.mean_accuracy);
  w.f64(r.global_loss);
  w.u64(r.selected.size());
  for (const int64_t c : r.selected) w.u64(static_cast<uint64_t>(c));
  w.u64(r.participants.size());
  for (const int64_t c : r.participants) w.u64(static_cast<uint64_t>(c));
  w.u64(r.attackers.size());
  for (const int64_t c : r.attackers) w.u64(static_cast<uint64_t>(c));
  w.u64(r.contribution.labels.size());
  for (const auto& [id, label] : r.contribution.labels) {
    w.u64(static_cast<uint64_t>(id));
    w.u8(label == ContributionLabel::high ? 1 : 0);
  }
  w.u64(r.contribution.thetas.size());
  for (const auto& [id, t] : r.contribution.thetas) {
    w.u64(static_cast<uint64_t>(id));
    w.f64(t);
  }
  w.u64(r.contribution.rewards.size());
  for (const RewardEntry& e : r.contribution.rewards) {
    w.u64(static_cast<uint64_t>(e.client));
    w.f64(e.amount);
  }
  w.u64(r.contribution.dropped.size());
  for (const int64_t c : r.contribution.dropped) w.u64(static_cast<uint64_t>(c));
  w.u8(r.contribution.degenerate ? 1 : 0);
  w.u8(r.contribution.zero_theta_fallback ? 1 : 0);
  w.f64(r.detection);
  w.u64(static_cast<uint64_t>(r.winning_miner));
  w.raw(r.block_hash);
  w.u64(static_cast<uint64_t>(r.queue_len));
  w.f64(r.reward_sum);
  return w.take();
}

}  // namespace fairbfl
