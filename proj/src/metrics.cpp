#include "fairbfl/metrics.hpp"

#include <bit>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>

#include "fairbfl/errors.hpp"

namespace fairbfl {

namespace {

const char* kHeader =
    "run_id,param,round,t_local,t_up,t_ex,t_gl,t_bl,total_delay,mean_accuracy,"
    "global_loss,detection,winning_miner,block_hash,queue_len,reward_sum,selected,"
    "participants,attackers,dropped,rewards";

std::string fmt_real(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

bool bits_equal(double a, double b) {
  return std::bit_cast<uint64_t>(a) == std::bit_cast<uint64_t>(b);
}

std::string join_ids(const std::vector<int64_t>& ids) {
  std::string out;
  for (size_t i = 0; i < ids.size(); ++i) {
    if (i > 0) out += ';';
    out += std::to_string(ids[i]);
  }
  return out;
}

std::string join_ids(const std::set<int64_t>& ids) {
  return join_ids(std::vector<int64_t>(ids.begin(), ids.end()));
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> parts;
  size_t begin = 0;
  while (true) {
    const size_t end = s.find(sep, begin);
    if (end == std::string::npos) {
      parts.push_back(s.substr(begin));
      return parts;
    }
    parts.push_back(s.substr(begin, end - begin));
    begin = end + 1;
  }
}

double parse_real_field(const std::string& s) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end == s.c_str() || *end != '\0') {
    throw FormatError("metrics: bad numeric field '" + s + "'");
  }
  return v;
}

int64_t parse_int_field(const std::string& s) {
  char* end = nullptr;
  const long long v = std::strtoll(s.c_str(), &end, 10);
  if (end == s.c_str() || *end != '\0') {
    throw FormatError("metrics: bad integer field '" + s + "'");
  }
  return v;
}

}  // namespace

bool MetricsRow::operator==(const MetricsRow& other) const {
  return run_id == other.run_id && param == other.param && round == other.round &&
         bits_equal(t_local, other.t_local) && bits_equal(t_up, other.t_up) &&
         bits_equal(t_ex, other.t_ex) && bits_equal(t_gl, other.t_gl) &&
         bits_equal(t_bl, other.t_bl) &&
         bits_equal(total_delay, other.total_delay) &&
         bits_equal(mean_accuracy, other.mean_accuracy) &&
         bits_equal(global_loss, other.global_loss) &&
         bits_equal(detection, other.detection) &&
         winning_miner == other.winning_miner && block_hash == other.block_hash &&
         queue_len == other.queue_len && bits_equal(reward_sum, other.reward_sum) &&
         selected == other.selected && participants == other.participants &&
         attackers == other.attackers && dropped == other.dropped &&
         rewards == other.rewards;
}

MetricsRow make_row(const std::string& run_id, const std::string& param,
                    const RoundReport& report) {
  MetricsRow row;
  row.run_id = run_id;
  row.param = param;
  row.round = report.round;
  row.t_local = report.t_local;
  row.t_up = report.t_up;
  row.t_ex = report.t_ex;
  row.t_gl = report.t_gl;
  row.t_bl = report.t_bl;
  row.total_delay = report.total_delay;
  row.mean_accuracy = report.mean_accuracy;
  row.global_loss = report.global_loss;
  row.detection = report.detection;
  row.winning_miner = report.winning_miner;
  row.block_hash = to_hex(report.block_hash);
  row.queue_len = report.queue_len;
  row.reward_sum = report.reward_sum;
  row.selected = join_ids(report.selected);
  row.participants = join_ids(report.participants);
  row.attackers = join_ids(report.attackers);
  row.dropped = join_ids(report.contribution.dropped);
  std::string rewards;
  for (size_t i = 0; i < report.contribution.rewards.size(); ++i) {
    if (i > 0) rewards += ';';
    rewards += std::to_string(report.contribution.rewards[i].client) + ':' +
               fmt_real(report.contribution.rewards[i].amount);
  }
  row.rewards = rewards;
  return row;
}

std::string csv_header() { return kHeader; }

std::string to_csv_line(const MetricsRow& r) {
  if (r.param.find_first_of(",\n") != std::string::npos) {
    throw FormatError("metrics: param must not contain commas or newlines");
  }
  std::string out;
  out += r.run_id;
  out += ',' + r.param;
  out += ',' + std::to_string(r.round);
  out += ',' + fmt_real(r.t_local);
  out += ',' + fmt_real(r.t_up);
  out += ',' + fmt_real(r.t_ex);
  out += ',' + fmt_real(r.t_gl);
  out += ',' + fmt_real(r.t_bl);
  out += ',' + fmt_real(r.total_delay);
  out += ',' + fmt_real(r.mean_accuracy);
  out += ',' + fmt_real(r.global_loss);
  out += ',' + fmt_real(r.detection);
  out += ',' + std::to_string(r.winning_miner);
  out += ',' + r.block_hash;
  out += ',' + std::to_string(r.queue_len);
  out += ',' + fmt_real(r.reward_sum);
  out += ',' + r.selected;
  out += ',' + r.participants;
  out += ',' + r.attackers;
  out += ',' + r.dropped;
  out += ',' + r.rewards;
  return out;
}

MetricsRow from_csv_line(const std::string& line) {
  const auto f = split(line, ',');
  if (f.size() != 21) {
    throw FormatError("metrics: expected 21 fields, got " + std::to_string(f.size()));
  }
  MetricsRow r;
  r.run_id = f[0];
  r.param = f[1];
  r.round = parse_int_field(f[2]);
  r.t_local = parse_real_field(f[3]);
  r.t_up = parse_real_field(f[4]);
  r.t_ex = parse_real_field(f[5]);
  r.t_gl = parse_real_field(f[6]);
  r.t_bl = parse_real_field(f[7]);
  r.total_delay = parse_real_field(f[8]);
  r.mean_accuracy = parse_real_field(f[9]);
  r.global_loss = parse_real_field(f[10]);
  r.detection = parse_real_field(f[11]);
  r.winning_miner = parse_int_field(f[12]);
  r.block_hash = f[13];
  r.queue_len = parse_int_field(f[14]);
  r.reward_sum = parse_real_field(f[15]);
  r.selected = f[16];
  r.participants = f[17];
  r.attackers = f[18];
  r.dropped = f[19];
  r.rewards = f[20];
  return r;
}

void write_csv(const std::string& path, const std::vector<MetricsRow>& rows) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write " + path);
  out << kHeader << '\n';
  for (const MetricsRow& r : rows) out << to_csv_line(r) << '\n';
}

std::vector<MetricsRow> read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot read " + path);
  std::string line;
  if (!std::getline(in, line) || line != kHeader) {
    throw FormatError(path + ": missing or unexpected header line");
  }
  std::vector<MetricsRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    rows.push_back(from_csv_line(line));
  }
  return rows;
}

std::vector<RunSummary> summarize(const std::vector<MetricsRow>& rows) {
  if (rows.empty()) throw EmptyMetrics("summarize: no rows");
  std::vector<RunSummary> out;
  std::map<std::string, size_t> index;
  std::map<std::string, std::vector<double>> accuracy;
  for (const MetricsRow& r : rows) {
    if (index.count(r.run_id) == 0) {
      index[r.run_id] = out.size();
      out.push_back({r.run_id, r.param, 0, 0.0, 0.0, std::nullopt, {}});
    }
    RunSummary& s = out[index[r.run_id]];
    s.rounds += 1;
    s.avg_delay += r.total_delay;
    s.avg_accuracy += r.mean_accuracy;
    accuracy[r.run_id].push_back(r.mean_accuracy);
    if (!r.rewards.empty()) {
      for (const std::string& pair : split(r.rewards, ';')) {
        const size_t colon = pair.find(':');
        if (colon == std::string::npos) {
          throw FormatError("metrics: bad reward entry '" + pair + "'");
        }
        const int64_t client = parse_int_field(pair.substr(0, colon));
        s.total_reward[client] += parse_real_field(pair.substr(colon + 1));
      }
    }
  }
  for (RunSummary& s : out) {
    s.avg_delay /= s.rounds;
    s.avg_accuracy /= s.rounds;
    s.convergence_round = check_convergence(accuracy[s.run_id]);
  }
  return out;
}

std::string summary_table(const std::vector<RunSummary>& summaries) {
  std::string out = "run_id,param,rounds,avg_delay,avg_accuracy,convergence_round\n";
  for (const RunSummary& s : summaries) {
    out += s.run_id + ',' + s.param + ',' + std::to_string(s.rounds) + ',' +
           fmt_real(s.avg_delay) + ',' + fmt_real(s.avg_accuracy) + ',';
    out += s.convergence_round ? std::to_string(*s.convergence_round) : "none";
    out += '\n';
  }
  return out;
}

}  // namespace fairbfl
