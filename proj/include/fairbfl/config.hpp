#pragma once

#include <string>
#include <utility>
#include <vector>

#include "fairbfl/orchestrator.hpp"

namespace fairbfl {

// Applies "key=value" to the config; ConfigError on unknown key or bad value.
void apply_config_entry(SimConfig& cfg, const std::string& key,
                        const std::string& value);

// Precedence: built-in defaults, then file entries, then overrides. An empty
// path skips the file. Validates the final config.
SimConfig parse_config(const std::string& path,
                       const std::vector<std::pair<std::string, std::string>>& overrides);

// Full resolved config, one key=value per line, parseable by parse_config.
std::string dump_config(const SimConfig& cfg);

}  // namespace fairbfl
