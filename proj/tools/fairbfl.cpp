#include <cstdio>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"
#include "fairbfl/config.hpp"
#include "fairbfl/metrics.hpp"
#include "fairbfl/orchestrator.hpp"
#include "fairbfl/presets.hpp"

namespace {

std::vector<std::pair<std::string, std::string>> split_overrides(
    const std::vector<std::string>& raw) {
  std::vector<std::pair<std::string, std::string>> overrides;
  for (const std::string& entry : raw) {
    const size_t eq = entry.find('=');
    if (eq == std::string::npos) {
      throw fairbfl::ConfigError("override must look like key=value: " + entry);
    }
    overrides.emplace_back(entry.substr(0, eq), entry.substr(eq + 1));
  }
  return overrides;
}

std::string default_out_dir() {
  if (const char* env = std::getenv("FAIRBFL_OUT")) return env;
  return "out";
}

int run_single(const std::string& config_path,
               const std::vector<std::string>& raw_overrides,
               const std::string& out_dir) {
  const fairbfl::SimConfig cfg =
      fairbfl::parse_config(config_path, split_overrides(raw_overrides));
  const std::string run_id = fairbfl::run_id_for(cfg);

  std::filesystem::create_directories(out_dir);
  {
    std::ofstream manifest(out_dir + "/" + run_id + ".manifest.txt",
                           std::ios::binary);
    manifest << "run_id=" << run_id << '\n' << fairbfl::dump_config(cfg);
  }

  fairbfl::Simulation sim(cfg);
  const std::vector<fairbfl::RoundReport> reports = sim.run();

  std::vector<fairbfl::MetricsRow> rows;
  rows.reserve(reports.size());
  for (const fairbfl::RoundReport& report : reports) {
    rows.push_back(fairbfl::make_row(run_id, "", report));
  }
  const std::string csv_path = out_dir + "/" + run_id + ".csv";
  fairbfl::write_csv(csv_path, rows);

  std::printf("%s", fairbfl::summary_table(fairbfl::summarize(rows)).c_str());
  std::printf("wrote %s (%zu rounds)\n", csv_path.c_str(), rows.size());
  return 0;
}

int run_preset_cmd(const std::string& name,
                   const std::vector<std::string>& raw_overrides,
                   const std::string& out_dir) {
  if (!fairbfl::is_preset(name)) {
    std::fprintf(stderr, "unknown preset: %s\navailable:", name.c_str());
    for (const std::string& p : fairbfl::preset_names()) {
      std::fprintf(stderr, " %s", p.c_str());
    }
    std::fprintf(stderr, "\n");
    return 2;
  }
  const fairbfl::PresetOutcome outcome =
      fairbfl::run_preset(name, out_dir, split_overrides(raw_overrides));

  const std::string csv_path = out_dir + "/" + name + ".csv";
  if (std::filesystem::exists(csv_path)) {
    const auto rows = fairbfl::read_csv(csv_path);
    std::printf("%s", fairbfl::summary_table(fairbfl::summarize(rows)).c_str());
  }
  for (const std::string& path : outcome.outputs) {
    std::printf("wrote %s\n", path.c_str());
  }
  if (outcome.failed_runs > 0) {
    std::fprintf(stderr, "%d of %d runs failed\n", outcome.failed_runs,
                 outcome.total_runs);
    return 1;
  }
  std::printf("%d runs completed\n", outcome.total_runs);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"blockchain-coupled federated learning simulator"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir = default_out_dir();
  std::vector<std::string> overrides;

  CLI::App* run = app.add_subcommand("run", "run one simulation");
  run->add_option("--config", config_path, "config file (key=value lines)");
  run->add_option("--set", overrides, "override, key=value (repeatable)");
  run->add_option("--out", out_dir, "output directory");

  std::string preset_name;
  std::string preset_out = default_out_dir();
  std::vector<std::string> preset_overrides;

  CLI::App* preset = app.add_subcommand("preset", "run a named experiment suite");
  preset->add_option("name", preset_name, "preset name")->required();
  preset->add_option("--set", preset_overrides, "override, key=value (repeatable)");
  preset->add_option("--out", preset_out, "output directory");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) return run_single(config_path, overrides, out_dir);
    return run_preset_cmd(preset_name, preset_overrides, preset_out);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
