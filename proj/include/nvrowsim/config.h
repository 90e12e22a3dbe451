#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "nvrowsim/simulator.h"

namespace nvrowsim {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct OutputConfig {
  std::string dir = "out";
  bool json = true;
  bool csv = true;
  bool commands_csv = false;
};

struct ExperimentConfig {
  SystemConfig system;
  // Technology is resolved from the preset plus any explicit ratio overrides.
  std::string tech_profile = "dram";
  std::optional<double> alpha, beta, gamma, delta, endurance;
  std::optional<ProtocolKind> protocol;
  std::uint64_t seed = 1;
  // Per-core source: "trace:<path>" or "gen:<generator spec>".
  std::vector<std::string> workload;
  OutputConfig output;
  // Relative trace paths resolve against this directory.
  std::filesystem::path base_dir = ".";

  // Applies the technology settings to `system.tech`.
  void resolve();
};

// Typed view of one `[section] key`; the table drives parsing, echoing and
// sweep overrides.
struct ConfigField {
  std::string section;
  std::string key;
  std::function<void(ExperimentConfig&, const std::string&)> set;
  std::function<std::string(const ExperimentConfig&)> get;
};

const std::vector<ConfigField>& config_fields();

// Sets `section.key`; throws ConfigError for unknown keys or bad values.
void set_config_value(ExperimentConfig& cfg, const std::string& section,
                      const std::string& key, const std::string& value);

ExperimentConfig parse_config(std::istream& in, const std::filesystem::path& base_dir = ".");
ExperimentConfig load_config(const std::filesystem::path& path);

// Effective (fully defaulted) configuration, section -> key -> value.
nlohmann::ordered_json config_to_json(const ExperimentConfig& cfg);
std::vector<std::string> config_columns();
std::vector<std::string> config_values(const ExperimentConfig& cfg);

// Builds the per-core traces named in the workload section. Generated traces
// default to seed `seed + core` and to base address `core * capacity / cores`
// unless the generator text sets them. Trace errors propagate as TraceError.
std::vector<std::vector<TraceRecord>> build_workload(const ExperimentConfig& cfg);

}  // namespace nvrowsim
