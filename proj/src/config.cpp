#include "fairbfl/config.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>

#include "fairbfl/errors.hpp"

namespace fairbfl {

namespace {

int64_t parse_int(const std::string& key, const std::string& value) {
  char* end = nullptr;
  const long long v = std::strtoll(value.c_str(), &end, 10);
  if (end == value.c_str() || *end != '\0') {
    throw ConfigError(key + ": expected an integer, got '" + value + "'");
  }
  return v;
}

uint64_t parse_uint(const std::string& key, const std::string& value) {
  char* end = nullptr;
  const unsigned long long v = std::strtoull(value.c_str(), &end, 10);
  if (end == value.c_str() || *end != '\0' || value.find('-') != std::string::npos) {
    throw ConfigError(key + ": expected a non-negative integer, got '" + value + "'");
  }
  return v;
}

double parse_real(const std::string& key, const std::string& value) {
  char* end = nullptr;
  const double v = std::strtod(value.c_str(), &end);
  if (end == value.c_str() || *end != '\0') {
    throw ConfigError(key + ": expected a number, got '" + value + "'");
  }
  return v;
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  throw ConfigError(key + ": expected true or false, got '" + value + "'");
}

std::string trim(const std::string& s) {
  const size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

}  // namespace

void apply_config_entry(SimConfig& cfg, const std::string& key,
                        const std::string& value) {
  if (key == "n_clients") cfg.n_clients = static_cast<int>(parse_int(key, value));
  else if (key == "n_miners") cfg.n_miners = static_cast<int>(parse_int(key, value));
  else if (key == "lambda") cfg.lambda = parse_real(key, value);
  else if (key == "eta") cfg.hp.eta = parse_real(key, value);
  else if (key == "epochs") cfg.hp.epochs = static_cast<int>(parse_int(key, value));
  else if (key == "batch_size") cfg.hp.batch_size = static_cast<int>(parse_int(key, value));
  else if (key == "mu") cfg.hp.mu = parse_real(key, value);
  else if (key == "rounds") cfg.rounds = static_cast<int>(parse_int(key, value));
  else if (key == "mode") {
    if (value == "bfl") cfg.mode = Mode::bfl;
    else if (value == "fl") cfg.mode = Mode::fl;
    else if (value == "chain") cfg.mode = Mode::chain;
    else throw ConfigError("mode: expected bfl, fl, or chain, got '" + value + "'");
  } else if (key == "strategy") {
    if (value == "keep") cfg.strategy = Strategy::keep;
    else if (value == "discard") cfg.strategy = Strategy::discard;
    else throw ConfigError("strategy: expected keep or discard, got '" + value + "'");
  } else if (key == "aggregation") {
    if (value == "simple") cfg.aggregation = Aggregation::simple;
    else if (value == "fair") cfg.aggregation = Aggregation::fair;
    else throw ConfigError("aggregation: expected simple or fair, got '" + value + "'");
  } else if (key == "aggregate_literal") {
    cfg.aggregate_literal = parse_bool(key, value);
  } else if (key == "theta_similarity") {
    cfg.theta_similarity = parse_bool(key, value);
  } else if (key == "difficulty") {
    cfg.difficulty = parse_uint(key, value);
  } else if (key == "block_capacity") {
    cfg.block_capacity = static_cast<int>(parse_int(key, value));
  } else if (key == "cluster_eps") {
    cfg.cluster.eps = parse_real(key, value);
  } else if (key == "cluster_min_pts") {
    cfg.cluster.min_pts = static_cast<int>(parse_int(key, value));
  } else if (key == "cluster_metric") {
    if (value == "cosine") cfg.cluster.metric = ClusterMetric::cosine;
    else if (value == "euclidean") cfg.cluster.metric = ClusterMetric::euclidean;
    else throw ConfigError("cluster_metric: expected cosine or euclidean, got '" +
                           value + "'");
  } else if (key == "base") {
    cfg.base = parse_real(key, value);
  } else if (key == "lr_schedule") {
    if (value == "fixed") cfg.lr_schedule = LrSchedule::fixed;
    else if (value == "inverse_decay") cfg.lr_schedule = LrSchedule::inverse_decay;
    else throw ConfigError("lr_schedule: expected fixed or inverse_decay, got '" +
                           value + "'");
  } else if (key == "hidden_width") {
    cfg.hidden_width = static_cast<int>(parse_int(key, value));
  } else if (key == "attack_enabled") {
    cfg.attack.enabled = parse_bool(key, value);
  } else if (key == "attack_min") {
    cfg.attack.min_attackers = static_cast<int>(parse_int(key, value));
  } else if (key == "attack_max") {
    cfg.attack.max_attackers = static_cast<int>(parse_int(key, value));
  } else if (key == "attack_perturbation") {
    if (value == "sign_flip") cfg.attack.perturbation = Perturbation::sign_flip;
    else if (value == "gaussian") cfg.attack.perturbation = Perturbation::gaussian;
    else throw ConfigError(
        "attack_perturbation: expected sign_flip or gaussian, got '" + value + "'");
  } else if (key == "attack_scale") {
    cfg.attack.scale = parse_real(key, value);
  } else if (key == "base_latency") {
    cfg.delay.base_latency = parse_real(key, value);
  } else if (key == "per_byte") {
    cfg.delay.per_byte = parse_real(key, value);
  } else if (key == "jitter_mean") {
    cfg.delay.jitter_mean = parse_real(key, value);
  } else if (key == "hash_rate") {
    cfg.delay.hash_rate = parse_real(key, value);
  } else if (key == "local_step_cost") {
    cfg.delay.local_step_cost = parse_real(key, value);
  } else if (key == "cluster_pair_cost") {
    cfg.delay.cluster_pair_cost = parse_real(key, value);
  } else if (key == "aggregate_value_cost") {
    cfg.delay.aggregate_value_cost = parse_real(key, value);
  } else if (key == "time_mode") {
    if (value == "simulated") cfg.delay.time_mode = TimeMode::simulated;
    else if (value == "wallclock") cfg.delay.time_mode = TimeMode::wallclock;
    else throw ConfigError("time_mode: expected simulated or wallclock, got '" +
                           value + "'");
  } else if (key == "images_path") {
    cfg.data.images_path = value;
  } else if (key == "labels_path") {
    cfg.data.labels_path = value;
  } else if (key == "synth_samples") {
    cfg.data.synth_samples = static_cast<int>(parse_int(key, value));
  } else if (key == "synth_features") {
    cfg.data.synth_features = static_cast<int>(parse_int(key, value));
  } else if (key == "synth_classes") {
    cfg.data.synth_classes = static_cast<int>(parse_int(key, value));
  } else if (key == "synth_separation") {
    cfg.data.synth_separation = parse_real(key, value);
  } else if (key == "partition") {
    if (value == "iid") cfg.data.partition = PartitionMode::iid;
    else if (value == "noniid") cfg.data.partition = PartitionMode::noniid;
    else throw ConfigError("partition: expected iid or noniid, got '" + value + "'");
  } else if (key == "shards_per_client") {
    cfg.data.shards_per_client = static_cast<int>(parse_int(key, value));
  } else if (key == "noisy_client_fraction") {
    cfg.data.noisy_client_fraction = parse_real(key, value);
  } else if (key == "label_noise_rate") {
    cfg.data.label_noise_rate = parse_real(key, value);
  } else if (key == "seed") {
    cfg.seed = parse_uint(key, value);
  } else {
    throw ConfigError("unknown key: " + key);
  }
}

SimConfig parse_config(const std::string& path,
                       const std::vector<std::pair<std::string, std::string>>& overrides) {
  SimConfig cfg;
  if (!path.empty()) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      const size_t hash = line.find('#');
      if (hash != std::string::npos) line = line.substr(0, hash);
      line = trim(line);
      if (line.empty()) continue;
      const size_t eq = line.find('=');
      if (eq == std::string::npos) {
        throw ConfigError(path + ":" + std::to_string(line_no) +
                          ": expected key=value");
      }
      apply_config_entry(cfg, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
  }
  for (const auto& [key, value] : overrides) apply_config_entry(cfg, key, value);
  validate(cfg);
  return cfg;
}

std::string dump_config(const SimConfig& cfg) {
  std::string out;
  char buf[256];
  const auto put = [&out](const std::string& key, const std::string& value) {
    out += key;
    out += '=';
    out += value;
    out += '\n';
  };
  const auto put_int = [&](const std::string& key, long long v) {
    std::snprintf(buf, sizeof(buf), "%lld", v);
    put(key, buf);
  };
  const auto put_real = [&](const std::string& key, double v) {
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    put(key, buf);
  };
  const auto put_bool = [&](const std::string& key, bool v) {
    put(key, v ? "true" : "false");
  };

  put_int("n_clients", cfg.n_clients);
  put_int("n_miners", cfg.n_miners);
  put_real("lambda", cfg.lambda);
  put_real("eta", cfg.hp.eta);
  put_int("epochs", cfg.hp.epochs);
  put_int("batch_size", cfg.hp.batch_size);
  put_real("mu", cfg.hp.mu);
  put_int("rounds", cfg.rounds);
  put("mode", cfg.mode == Mode::bfl ? "bfl" : cfg.mode == Mode::fl ? "fl" : "chain");
  put("strategy", cfg.strategy == Strategy::keep ? "keep" : "discard");
  put("aggregation", cfg.aggregation == Aggregation::simple ? "simple" : "fair");
  put_bool("aggregate_literal", cfg.aggregate_literal);
  put_bool("theta_similarity", cfg.theta_similarity);
  std::snprintf(buf, sizeof(buf), "%llu",
                static_cast<unsigned long long>(cfg.difficulty));
  put("difficulty", buf);
  put_int("block_capacity", cfg.block_capacity);
  put_real("cluster_eps", cfg.cluster.eps);
  put_int("cluster_min_pts", cfg.cluster.min_pts);
  put("cluster_metric",
      cfg.cluster.metric == ClusterMetric::cosine ? "cosine" : "euclidean");
  put_real("base", cfg.base);
  put("lr_schedule",
      cfg.lr_schedule == LrSchedule::fixed ? "fixed" : "inverse_decay");
  put_int("hidden_width", cfg.hidden_width);
  put_bool("attack_enabled", cfg.attack.enabled);
  put_int("attack_min", cfg.attack.min_attackers);
  put_int("attack_max", cfg.attack.max_attackers);
  put("attack_perturbation",
      cfg.attack.perturbation == Perturbation::sign_flip ? "sign_flip" : "gaussian");
  put_real("attack_scale", cfg.attack.scale);
  put_real("base_latency", cfg.delay.base_latency);
  put_real("per_byte", cfg.delay.per_byte);
  put_real("jitter_mean", cfg.delay.jitter_mean);
  put_real("hash_rate", cfg.delay.hash_rate);
  put_real("local_step_cost", cfg.delay.local_step_cost);
  put_real("cluster_pair_cost", cfg.delay.cluster_pair_cost);
  put_real("aggregate_value_cost", cfg.delay.aggregate_value_cost);
  put("time_mode",
      cfg.delay.time_mode == TimeMode::simulated ? "simulated" : "wallclock");
  put("images_path", cfg.data.images_path);
  put("labels_path", cfg.data.labels_path);
  put_int("synth_samples", cfg.data.synth_samples);
  put_int("synth_features", cfg.data.synth_features);
  put_int("synth_classes", cfg.data.synth_classes);
  put_real("synth_separation", cfg.data.synth_separation);
  put("partition", cfg.data.partition == PartitionMode::iid ? "iid" : "noniid");
  put_int("shards_per_client", cfg.data.shards_per_client);
  put_real("noisy_client_fraction", cfg.data.noisy_client_fraction);
  put_real("label_noise_rate", cfg.data.label_noise_rate);
  std::snprintf(buf, sizeof(buf), "%llu", static_cast<unsigned long long>(cfg.seed));
  put("seed", buf);
  return out;
}

}  // namespace fairbfl
