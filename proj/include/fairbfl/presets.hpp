#pragma once

#include <string>
#include <utility>
#include <vector>

#include "fairbfl/metrics.hpp"
#include "fairbfl/orchestrator.hpp"

namespace fairbfl {

std::vector<std::string> preset_names();
bool is_preset(const std::string& name);

// Short content hash of the resolved config, used to name run outputs.
std::string run_id_for(const SimConfig& cfg);

struct PresetOutcome {
  int total_runs = 0;
  int failed_runs = 0;
  std::vector<std::string> outputs;  // files written under out_dir
};

// Executes every run of the preset, writing <name>.csv, <name>_summary.csv,
// one manifest per run, and for the security preset a per-round detection
// report. Overrides are applied to the base config before the preset pins
// its swept values. Failed runs are recorded and the rest continue.
PresetOutcome run_preset(
    const std::string& name, const std::string& out_dir,
    const std::vector<std::pair<std::string, std::string>>& overrides = {});

}  // namespace fairbfl
