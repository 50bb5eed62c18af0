#include "fairbfl/presets.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "fairbfl/config.hpp"
#include "fairbfl/errors.hpp"
#include "fairbfl/sha256.hpp"

namespace fairbfl {

namespace {

struct PresetRun {
  std::string param;
  SimConfig cfg;
};

std::string fmt_real(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%g", v);
  return buf;
}

std::vector<PresetRun> build_runs(const std::string& name, const SimConfig& base) {
  std::vector<PresetRun> runs;

  if (name == "general") {
    runs.push_back({"", base});
    return runs;
  }

  if (name == "lr_sweep") {
    for (const double eta : {0.01, 0.05, 0.10, 0.15, 0.20}) {
      SimConfig cfg = base;
      cfg.rounds = 50;
      cfg.hp.eta = eta;
      runs.push_back({"eta=" + fmt_real(eta), cfg});
    }
    return runs;
  }

  if (name == "worker_sweep") {
    for (const int n : {10, 30, 100}) {
      for (const Mode mode : {Mode::fl, Mode::bfl, Mode::chain}) {
        SimConfig cfg = base;
        cfg.rounds = 20;
        cfg.n_clients = n;
        cfg.mode = mode;
        cfg.block_capacity = 20;
        const char* mode_name = mode == Mode::fl ? "fl" : mode == Mode::bfl ? "bfl"
                                                                            : "chain";
        runs.push_back({"n=" + std::to_string(n) + ";mode=" + mode_name, cfg});
      }
    }
    return runs;
  }

  if (name == "miner_sweep") {
    for (const int m : {2, 4, 8}) {
      for (const Mode mode : {Mode::bfl, Mode::chain}) {
        SimConfig cfg = base;
        cfg.rounds = 20;
        cfg.n_clients = 10;
        cfg.lambda = 0.5;
        cfg.n_miners = m;
        cfg.mode = mode;
        cfg.block_capacity = 20;  // holds every round's transactions, no backlog
        const char* mode_name = mode == Mode::bfl ? "bfl" : "chain";
        runs.push_back({"m=" + std::to_string(m) + ";mode=" + mode_name, cfg});
      }
    }
    return runs;
  }

  if (name == "discard_vs_keep") {
    for (const Strategy strategy : {Strategy::keep, Strategy::discard}) {
      SimConfig cfg = base;
      cfg.rounds = 60;
      cfg.n_clients = 20;
      cfg.lambda = 0.5;
      cfg.strategy = strategy;
      cfg.data.partition = PartitionMode::iid;
      cfg.data.noisy_client_fraction = 0.2;
      cfg.data.label_noise_rate = 1.0;
      cfg.data.synth_samples = 600;
      cfg.cluster.eps = 0.5;
      runs.push_back(
          {std::string("strategy=") +
               (strategy == Strategy::keep ? "keep" : "discard"),
           cfg});
    }
    return runs;
  }

  if (name == "security") {
    for (const PartitionMode partition : {PartitionMode::noniid, PartitionMode::iid}) {
      SimConfig cfg = base;
      cfg.rounds = 10;
      cfg.n_clients = 10;
      cfg.n_miners = 2;
      cfg.lambda = 1.0;
      cfg.strategy = Strategy::discard;
      cfg.attack.enabled = true;
      cfg.attack.min_attackers = 1;
      cfg.attack.max_attackers = 3;
      cfg.attack.perturbation = Perturbation::gaussian;
      cfg.attack.scale = 0.065;
      cfg.data.synth_samples = 600;
      cfg.data.partition = partition;
      cfg.cluster.metric = ClusterMetric::euclidean;
      cfg.cluster.eps = partition == PartitionMode::iid ? 0.45 : 0.9;
      runs.push_back(
          {std::string("partition=") +
               (partition == PartitionMode::iid ? "iid" : "noniid"),
           cfg});
    }
    return runs;
  }

  throw ConfigError("unknown preset: " + name);
}

}  // namespace

std::vector<std::string> preset_names() {
  return {"general", "lr_sweep",        "worker_sweep",
          "miner_sweep", "discard_vs_keep", "security"};
}

bool is_preset(const std::string& name) {
  for (const std::string& p : preset_names()) {
    if (p == name) return true;
  }
  return false;
}

std::string run_id_for(const SimConfig& cfg) {
  const std::string resolved = dump_config(cfg);
  const Digest d = sha256(std::span<const uint8_t>(
      reinterpret_cast<const uint8_t*>(resolved.data()), resolved.size()));
  return to_hex(d).substr(0, 12);
}

PresetOutcome run_preset(
    const std::string& name, const std::string& out_dir,
    const std::vector<std::pair<std::string, std::string>>& overrides) {
  SimConfig base;
  for (const auto& [key, value] : overrides) apply_config_entry(base, key, value);
  const std::vector<PresetRun> runs = build_runs(name, base);

  std::filesystem::create_directories(out_dir);
  PresetOutcome outcome;
  outcome.total_runs = static_cast<int>(runs.size());

  std::vector<MetricsRow> rows;
  std::string security_report;
  std::string failures;

  for (const PresetRun& run : runs) {
    try {
      validate(run.cfg);
      const std::string run_id = run_id_for(run.cfg);

      const std::string manifest_path = out_dir + "/" + run_id + ".manifest.txt";
      std::ofstream manifest(manifest_path, std::ios::binary);
      manifest << "run_id=" << run_id << '\n'
               << "preset=" << name << '\n'
               << "param=" << run.param << '\n'
               << dump_config(run.cfg);
      manifest.close();
      outcome.outputs.push_back(manifest_path);

      Simulation sim(run.cfg);
      const auto reports = sim.run();
      double detection_sum = 0.0;
      int detection_rounds = 0;
      std::string section;
      for (const RoundReport& report : reports) {
        rows.push_back(make_row(run_id, run.param, report));
        if (name == "security") {
          std::string attackers, dropped;
          for (const int64_t a : report.attackers) {
            attackers += (attackers.empty() ? "" : ";") + std::to_string(a);
          }
          for (const int64_t d : report.contribution.dropped) {
            dropped += (dropped.empty() ? "" : ";") + std::to_string(d);
          }
          char line[160];
          std::snprintf(line, sizeof(line), "%lld [%s] [%s] %.4f\n",
                        static_cast<long long>(report.round), attackers.c_str(),
                        dropped.c_str(), report.detection);
          section += line;
          if (!report.attackers.empty()) {
            detection_sum += report.detection;
            ++detection_rounds;
          }
        }
      }
      if (name == "security") {
        security_report += "distribution " + run.param + " run " + run_id + "\n";
        security_report += "round attackers dropped detection\n";
        security_report += section;
        char avg[96];
        std::snprintf(avg, sizeof(avg), "average_detection=%.4f\n\n",
                      detection_rounds > 0 ? detection_sum / detection_rounds : 0.0);
        security_report += avg;
      }
    } catch (const std::exception& e) {
      ++outcome.failed_runs;
      failures += run.param + ": " + e.what() + "\n";
    }
  }

  if (!rows.empty()) {
    const std::string csv_path = out_dir + "/" + name + ".csv";
    write_csv(csv_path, rows);
    outcome.outputs.push_back(csv_path);

    const std::string summary_path = out_dir + "/" + name + "_summary.csv";
    std::ofstream summary(summary_path, std::ios::binary);
    summary << summary_table(summarize(rows));
    outcome.outputs.push_back(summary_path);
  }
  if (!security_report.empty()) {
    const std::string report_path = out_dir + "/" + name + "_report.txt";
    std::ofstream report(report_path, std::ios::binary);
    report << security_report;
    outcome.outputs.push_back(report_path);
  }
  if (!failures.empty()) {
    const std::string fail_path = out_dir + "/" + name + "_failures.txt";
    std::ofstream fail(fail_path, std::ios::binary);
    fail << failures;
    outcome.outputs.push_back(fail_path);
  }
  return outcome;
}

}  // namespace fairbfl
