#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "fairbfl/data.hpp"
#include "fairbfl/incentive.hpp"
#include "fairbfl/ledger.hpp"
#include "fairbfl/model.hpp"

namespace fairbfl {

enum class Mode { bfl, fl, chain };
enum class TimeMode { simulated, wallclock };
enum class Perturbation { sign_flip, gaussian };
enum class Aggregation { simple, fair };
enum class LrSchedule { fixed, inverse_decay };

struct AttackConfig {
  bool enabled = false;
  int min_attackers = 1;
  int max_attackers = 3;
  Perturbation perturbation = Perturbation::sign_flip;
  double scale = 5.0;
};

struct DelayConfig {
  double base_latency = 0.005;        // seconds per link
  double per_byte = 1e-8;             // seconds per transferred byte
  double jitter_mean = 0.002;         // exponential client-link jitter, seconds
  double hash_rate = 2e4;             // hashes per second per miner
  double local_step_cost = 0.002;     // seconds per SGD step
  double cluster_pair_cost = 1e-5;    // seconds per pairwise distance
  double aggregate_value_cost = 1e-8; // seconds per accumulated value
  TimeMode time_mode = TimeMode::simulated;
};

struct DataConfig {
  std::string images_path;  // with labels_path selects IDX input
  std::string labels_path;
  int synth_samples = 2000;
  int synth_features = 20;
  int synth_classes = 10;
  double synth_separation = 1.0;
  PartitionMode partition = PartitionMode::noniid;
  int shards_per_client = 2;
  double noisy_client_fraction = 0.0;  // clients whose shards get label noise
  double label_noise_rate = 0.0;
};

struct SimConfig {
  int n_clients = 100;
  int n_miners = 2;
  double lambda = 0.1;
  HyperParams hp;
  int rounds = 100;
  Mode mode = Mode::bfl;
  Strategy strategy = Strategy::keep;
  Aggregation aggregation = Aggregation::fair;
  bool aggregate_literal = false;  // keep the printed 1/lambda prefactor
  bool theta_similarity = false;   // weight by 1 - theta/2 instead of theta
  uint64_t difficulty = 1024;
  int block_capacity = 20;
  ClusterParams cluster;
  double base = 1.0;
  LrSchedule lr_schedule = LrSchedule::fixed;
  int hidden_width = 0;  // 0 trains the logistic model, >0 the mlp
  AttackConfig attack;
  DelayConfig delay;
  DataConfig data;
  uint64_t seed = 1;
};

// Throws ConfigError naming the offending key.
void validate(const SimConfig& cfg);

struct RoundReport {
  int64_t round = 0;
  double t_local = 0.0, t_up = 0.0, t_ex = 0.0, t_gl = 0.0, t_bl = 0.0;
  double total_delay = 0.0;
  double mean_accuracy = 0.0;
  double global_loss = 0.0;
  std::vector<int64_t> selected;
  std::vector<int64_t> participants;  // selected minus the prior round's drops
  std::set<int64_t> attackers;
  ContributionReport contribution;
  double detection = 0.0;  // NaN when no attackers this round
  int64_t winning_miner = -1;
  Digest block_hash{};
  int64_t queue_len = 0;  // chain mode backlog after this round
  double reward_sum = 0.0;
};

std::vector<uint8_t> serialize_report(const RoundReport& r);

enum class Phase { local_update, upload, exchange, global_update, mining };

struct PhaseEvent {
  int64_t round = 0;
  Phase phase = Phase::local_update;
};

std::vector<int64_t> select_clients(int n, double lambda, int64_t round,
                                    uint64_t seed);

std::map<int64_t, int64_t> associate(const std::vector<int64_t>& clients,
                                     int n_miners, uint64_t seed);

std::vector<GradientSet> exchange(const std::vector<GradientSet>& per_miner);

GradientVector inject_attack(const GradientVector& gradient, const AttackConfig& cfg,
                             uint64_t seed);

// First 1-based round ending a streak of five consecutive accuracy changes
// within 0.005 each.
std::optional<int> check_convergence(const std::vector<double>& accuracy);

struct EnvelopeResult {
  double c = 0.0;
  int violations = 0;
  double gamma = 0.0;
};

// Fits the smallest c with F(round r) - f_star <= c / (gamma + r) over rounds
// [fit_begin, fit_end], then counts violations of that envelope over
// (fit_end, check_end]. Rounds are 1-based positions in the loss history.
EnvelopeResult convergence_envelope(const std::vector<double>& loss, double f_star,
                                 double mu, double L, int epochs, int fit_begin,
                                 int fit_end, int check_end);

class Simulation {
 public:
  explicit Simulation(const SimConfig& cfg);

  RoundReport run_round();
  std::vector<RoundReport> run();  // all configured rounds

  const SimConfig& config() const { return cfg_; }
  const DataSet& dataset() const { return ds_; }
  const std::vector<DataShard>& shards() const { return shards_; }
  const std::vector<Chain>& chains() const { return chains_; }
  const ModelParams& global_params() const { return params_; }
  const std::vector<GradientVector>& server_globals() const { return server_globals_; }
  const std::vector<PhaseEvent>& trace() const { return trace_; }
  const std::set<int64_t>& noisy_clients() const { return noisy_clients_; }
  const std::vector<double>& accuracy_history() const { return accuracy_history_; }
  const std::vector<double>& loss_history() const { return loss_history_; }
  int64_t current_round() const { return round_; }
  double gram_lambda_max() const { return lambda_max_; }
  double gamma() const { return gamma_; }

 private:
  RoundReport run_bfl_round(int64_t r);
  RoundReport run_fl_round(int64_t r);
  RoundReport run_chain_round(int64_t r);

  std::vector<int64_t> pick_participants(int64_t r, RoundReport& report);
  std::set<int64_t> pick_attackers(const std::vector<int64_t>& participants,
                                   int64_t r);
  GradientSet collect_gradients(const std::vector<int64_t>& participants,
                                const std::set<int64_t>& attackers, int64_t r,
                                bool sign, std::map<int64_t, int>* steps,
                                std::map<int64_t, size_t>* bytes);
  double round_eta(int64_t r) const;
  void apply_global(const GradientVector& global);
  void fill_metrics(RoundReport& report);
  double jitter(int64_t client, int64_t r) const;
  double mining_time(int64_t r, int64_t miner) const;

  SimConfig cfg_;
  DataSet ds_;
  ModelLayout layout_;
  std::vector<DataShard> shards_;
  ModelParams params_;
  std::vector<Chain> chains_;
  std::vector<GradientVector> server_globals_;  // fl mode global record
  ToyRsa scheme_;
  KeyRegistry registry_;
  std::map<int64_t, KeyPair> keypairs_;
  std::set<int64_t> noisy_clients_;
  std::set<int64_t> dropped_prev_;
  std::vector<PhaseEvent> trace_;
  std::vector<double> accuracy_history_;
  std::vector<double> loss_history_;
  int64_t round_ = 0;
  int64_t queue_len_ = 0;
  double lambda_max_ = 0.0;
  double gamma_ = 0.0;
};

}  // namespace fairbfl
