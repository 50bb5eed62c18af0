#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "fairbfl/orchestrator.hpp"

namespace fairbfl {

// One CSV row per (run, round). List fields are semicolon-joined so the file
// needs no quoting; doubles print as %.17g and parse back bit-exactly.
struct MetricsRow {
  std::string run_id;
  std::string param;  // sweep coordinate, e.g. "eta=0.05"
  int64_t round = 0;
  double t_local = 0.0, t_up = 0.0, t_ex = 0.0, t_gl = 0.0, t_bl = 0.0;
  double total_delay = 0.0;
  double mean_accuracy = 0.0;
  double global_loss = 0.0;
  double detection = 0.0;
  int64_t winning_miner = -1;
  std::string block_hash;
  int64_t queue_len = 0;
  double reward_sum = 0.0;
  std::string selected;      // "0;3;7"
  std::string participants;
  std::string attackers;
  std::string dropped;
  std::string rewards;       // "client:amount;client:amount"

  bool operator==(const MetricsRow& other) const;
};

MetricsRow make_row(const std::string& run_id, const std::string& param,
                    const RoundReport& report);

std::string csv_header();
std::string to_csv_line(const MetricsRow& row);
MetricsRow from_csv_line(const std::string& line);

void write_csv(const std::string& path, const std::vector<MetricsRow>& rows);
std::vector<MetricsRow> read_csv(const std::string& path);

struct RunSummary {
  std::string run_id;
  std::string param;
  int rounds = 0;
  double avg_delay = 0.0;
  double avg_accuracy = 0.0;
  std::optional<int> convergence_round;
  std::map<int64_t, double> total_reward;
};

// Groups rows by run id (first-seen order) and reduces each run.
std::vector<RunSummary> summarize(const std::vector<MetricsRow>& rows);

std::string summary_table(const std::vector<RunSummary>& summaries);

}  // namespace fairbfl
