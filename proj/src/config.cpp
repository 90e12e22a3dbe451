#include "nvrowsim/config.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

namespace nvrowsim {

namespace {

constexpr std::size_t kMaxCores = 64;

std::uint64_t to_u64(const std::string& key, const std::string& v) {
  std::uint64_t out = 0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || p != v.data() + v.size() || v.empty())
    throw ConfigError("'" + key + "': expected a non-negative integer, got '" + v + "'");
  return out;
}

double to_double(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const double d = std::stod(v, &used);
    if (used == v.size() && std::isfinite(d)) return d;
  } catch (const std::exception&) {
  }
  throw ConfigError("'" + key + "': expected a number, got '" + v + "'");
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "on" || v == "true" || v == "1" || v == "yes") return true;
  if (v == "off" || v == "false" || v == "0" || v == "no") return false;
  throw ConfigError("'" + key + "': expected on/off, got '" + v + "'");
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string fmt_bool(bool b) { return b ? "on" : "off"; }

template <typename T>
ConfigField uint_field(const char* section, const char* key, T SystemConfig::*group,
                       std::uint64_t T::*member) {
  return {section, key,
          [=](ExperimentConfig& c, const std::string& v) {
            c.system.*group.*member = to_u64(key, v);
          },
          [=](const ExperimentConfig& c) { return std::to_string(c.system.*group.*member); }};
}

template <typename T, typename M>
ConfigField int_field(const char* section, const char* key, T SystemConfig::*group,
                      M T::*member) {
  return {section, key,
          [=](ExperimentConfig& c, const std::string& v) {
            const std::uint64_t n = to_u64(key, v);
            if (n > 0x7FFFFFFF) throw ConfigError(std::string("'") + key + "': value too large");
            c.system.*group.*member = static_cast<M>(n);
          },
          [=](const ExperimentConfig& c) { return std::to_string(c.system.*group.*member); }};
}

ConfigField optional_double(const char* key, std::optional<double> ExperimentConfig::*member) {
  return {"tech", key,
          [=](ExperimentConfig& c, const std::string& v) {
            if (v == "default") c.*member = std::nullopt;
            else c.*member = to_double(key, v);
          },
          [=](const ExperimentConfig& c) {
            return c.*member ? fmt(*(c.*member)) : std::string("default");
          }};
}

std::vector<ConfigField> make_fields() {
  using G = Geometry;
  using C = ControllerParams;
  std::vector<ConfigField> f;

  f.push_back(int_field("memory", "channels", &SystemConfig::geometry, &G::channels));
  f.push_back(int_field("memory", "ranks", &SystemConfig::geometry, &G::ranks_per_channel));
  f.push_back(int_field("memory", "banks", &SystemConfig::geometry, &G::banks_per_rank));
  f.push_back(int_field("memory", "chips", &SystemConfig::geometry, &G::chips_per_rank));
  f.push_back(uint_field("memory", "rows_per_bank", &SystemConfig::geometry, &G::rows_per_bank));
  f.push_back(uint_field("memory", "row_bytes", &SystemConfig::geometry, &G::row_bytes_per_chip));
  f.push_back(
      uint_field("memory", "buffer_bytes", &SystemConfig::geometry, &G::buffer_bytes_per_chip));
  f.push_back(uint_field("memory", "block_bytes", &SystemConfig::geometry, &G::cache_block_bytes));
  f.push_back(uint_field("memory", "prefetch_bytes", &SystemConfig::geometry,
                         &G::prefetch_bytes_per_chip));
  f.push_back({"memory", "mapping",
               [](ExperimentConfig& c, const std::string& v) {
                 try {
                   c.system.mapping = parse_mapping(v);
                 } catch (const std::exception&) {
                   throw ConfigError("'mapping': expected row or block, got '" + v + "'");
                 }
               },
               [](const ExperimentConfig& c) { return std::string(to_string(c.system.mapping)); }});

  f.push_back({"tech", "profile",
               [](ExperimentConfig& c, const std::string& v) {
                 try {
                   (void)TechnologyProfile::preset(v);
                 } catch (const std::exception&) {
                   throw ConfigError("'profile': expected dram, pcm or sttram, got '" + v + "'");
                 }
                 c.tech_profile = v;
               },
               [](const ExperimentConfig& c) { return c.tech_profile; }});
  f.push_back(optional_double("alpha", &ExperimentConfig::alpha));
  f.push_back(optional_double("beta", &ExperimentConfig::beta));
  f.push_back(optional_double("gamma", &ExperimentConfig::gamma));
  f.push_back(optional_double("delta", &ExperimentConfig::delta));
  f.push_back(optional_double("endurance", &ExperimentConfig::endurance));
  f.push_back({"tech", "protocol",
               [](ExperimentConfig& c, const std::string& v) {
                 if (v == "default") c.protocol.reset();
                 else if (v == "dram") c.protocol = ProtocolKind::DRAM;
                 else if (v == "nvm") c.protocol = ProtocolKind::NVM;
                 else throw ConfigError("'protocol': expected dram or nvm, got '" + v + "'");
               },
               [](const ExperimentConfig& c) {
                 if (!c.protocol) return std::string("default");
                 return std::string(*c.protocol == ProtocolKind::DRAM ? "dram" : "nvm");
               }});
  using F = FixedTimings;
  f.push_back(int_field("tech", "tCL", &SystemConfig::fixed, &F::tCL));
  f.push_back(int_field("tech", "tCWL", &SystemConfig::fixed, &F::tCWL));
  f.push_back(int_field("tech", "tCCD", &SystemConfig::fixed, &F::tCCD));
  f.push_back(int_field("tech", "tBURST", &SystemConfig::fixed, &F::tBURST));
  f.push_back(int_field("tech", "tWTR", &SystemConfig::fixed, &F::tWTR));
  f.push_back(int_field("tech", "tRAS", &SystemConfig::fixed, &F::tRAS));
  f.push_back({"tech", "lifetime_floor_years",
               [](ExperimentConfig& c, const std::string& v) {
                 c.system.lifetime_floor_years = to_double("lifetime_floor_years", v);
               },
               [](const ExperimentConfig& c) { return fmt(c.system.lifetime_floor_years); }});

  f.push_back(int_field("controller", "read_queue", &SystemConfig::controller,
                        &C::read_queue_capacity));
  f.push_back(int_field("controller", "write_queue", &SystemConfig::controller,
                        &C::write_queue_capacity));
  f.push_back(int_field("controller", "drain_high", &SystemConfig::controller, &C::drain_high));
  f.push_back(int_field("controller", "drain_low", &SystemConfig::controller, &C::drain_low));
  f.push_back({"controller", "forwarding",
               [](ExperimentConfig& c, const std::string& v) {
                 c.system.controller.forwarding = to_bool("forwarding", v);
               },
               [](const ExperimentConfig& c) { return fmt_bool(c.system.controller.forwarding); }});
  f.push_back({"controller", "coalescing",
               [](ExperimentConfig& c, const std::string& v) {
                 c.system.controller.coalescing = to_bool("coalescing", v);
               },
               [](const ExperimentConfig& c) { return fmt_bool(c.system.controller.coalescing); }});
  f.push_back({"controller", "timeout",
               [](ExperimentConfig& c, const std::string& v) {
                 c.system.controller.timeout = static_cast<Cycle>(to_u64("timeout", v));
               },
               [](const ExperimentConfig& c) { return std::to_string(c.system.controller.timeout); }});

  f.push_back({"frontend", "cores",
               [](ExperimentConfig& c, const std::string& v) {
                 const auto n = to_u64("cores", v);
                 if (n == 0 || n > kMaxCores) throw ConfigError("'cores': expected 1..64");
                 c.system.cores = static_cast<std::uint32_t>(n);
               },
               [](const ExperimentConfig& c) { return std::to_string(c.system.cores); }});
  f.push_back(int_field("frontend", "ipc", &SystemConfig::core, &CoreParams::ipc_max));
  f.push_back(int_field("frontend", "miss_buffers", &SystemConfig::core, &CoreParams::miss_buffers));
  f.push_back(int_field("frontend", "clock_ratio", &SystemConfig::core, &CoreParams::clock_ratio));
  f.push_back({"frontend", "cache",
               [](ExperimentConfig& c, const std::string& v) {
                 c.system.cache_enabled = to_bool("cache", v);
               },
               [](const ExperimentConfig& c) { return fmt_bool(c.system.cache_enabled); }});
  f.push_back(uint_field("frontend", "cache_bytes", &SystemConfig::cache, &CacheParams::capacity_bytes));
  f.push_back(int_field("frontend", "cache_ways", &SystemConfig::cache, &CacheParams::ways));
  f.push_back(int_field("frontend", "cache_line_bytes", &SystemConfig::cache, &CacheParams::line_bytes));
  f.push_back({"frontend", "flush_at_end",
               [](ExperimentConfig& c, const std::string& v) {
                 c.system.flush_cache_at_end = to_bool("flush_at_end", v);
               },
               [](const ExperimentConfig& c) { return fmt_bool(c.system.flush_cache_at_end); }});
  f.push_back({"frontend", "close_banks_at_end",
               [](ExperimentConfig& c, const std::string& v) {
                 c.system.close_banks_at_end = to_bool("close_banks_at_end", v);
               },
               [](const ExperimentConfig& c) { return fmt_bool(c.system.close_banks_at_end); }});
  f.push_back({"frontend", "replay",
               [](ExperimentConfig& c, const std::string& v) {
                 c.system.replay = to_bool("replay", v);
               },
               [](const ExperimentConfig& c) { return fmt_bool(c.system.replay); }});

  f.push_back({"workload", "seed",
               [](ExperimentConfig& c, const std::string& v) { c.seed = to_u64("seed", v); },
               [](const ExperimentConfig& c) { return std::to_string(c.seed); }});

  f.push_back({"output", "dir",
               [](ExperimentConfig& c, const std::string& v) { c.output.dir = v; },
               [](const ExperimentConfig& c) { return c.output.dir; }});
  f.push_back({"output", "json",
               [](ExperimentConfig& c, const std::string& v) { c.output.json = to_bool("json", v); },
               [](const ExperimentConfig& c) { return fmt_bool(c.output.json); }});
  f.push_back({"output", "csv",
               [](ExperimentConfig& c, const std::string& v) { c.output.csv = to_bool("csv", v); },
               [](const ExperimentConfig& c) { return fmt_bool(c.output.csv); }});
  f.push_back({"output", "commands_csv",
               [](ExperimentConfig& c, const std::string& v) {
                 c.output.commands_csv = to_bool("commands_csv", v);
               },
               [](const ExperimentConfig& c) { return fmt_bool(c.output.commands_csv); }});
  return f;
}

// "core<N>" for N in 0..63, else nullopt.
std::optional<std::size_t> core_key(const std::string& key) {
  if (key.size() < 5 || key.compare(0, 4, "core") != 0) return std::nullopt;
  std::size_t n = 0;
  const auto [p, ec] = std::from_chars(key.data() + 4, key.data() + key.size(), n);
  if (ec != std::errc{} || p != key.data() + key.size() || n >= kMaxCores) return std::nullopt;
  if (key.size() > 5 && key[4] == '0') return std::nullopt;
  return n;
}

bool has_key(const std::string& spec, const std::string& key) {
  std::istringstream in(spec);
  std::string item;
  while (std::getline(in, item, ','))
    if (item.compare(0, key.size() + 1, key + "=") == 0) return true;
  return false;
}

}  // namespace

void ExperimentConfig::resolve() {
  TechnologyProfile t = TechnologyProfile::preset(tech_profile);
  if (alpha) t.alpha = *alpha;
  if (beta) t.beta = *beta;
  if (gamma) t.gamma = *gamma;
  if (delta) t.delta = *delta;
  if (endurance) t.endurance_writes = *endurance;
  if (protocol) t.protocol = *protocol;
  system.tech = t;
}

const std::vector<ConfigField>& config_fields() {
  static const std::vector<ConfigField> fields = make_fields();
  return fields;
}

void set_config_value(ExperimentConfig& cfg, const std::string& section,
                      const std::string& key, const std::string& value) {
  if (section == "workload") {
    if (auto n = core_key(key)) {
      if (value.rfind("trace:", 0) != 0 && value.rfind("gen:", 0) != 0)
        throw ConfigError("'[workload] " + key + "': expected trace:<path> or gen:<spec>");
      if (cfg.workload.size() <= *n) cfg.workload.resize(*n + 1);
      cfg.workload[*n] = value;
      return;
    }
  }
  for (const auto& f : config_fields()) {
    if (f.section == section && f.key == key) {
      f.set(cfg, value);
      return;
    }
  }
  throw ConfigError("unknown config key '" + key + "' in section [" + section + "]");
}

ExperimentConfig parse_config(std::istream& in, const std::filesystem::path& base_dir) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(std::string("config syntax: ") + e.what());
  }
  ExperimentConfig cfg;
  cfg.base_dir = base_dir;
  for (const auto& [section, body] : tree) {
    if (body.empty() && !body.data().empty())
      throw ConfigError("config key '" + section + "' outside of any section");
    for (const auto& [key, value] : body) set_config_value(cfg, section, key, value.data());
  }
  for (std::size_t i = 0; i < cfg.workload.size(); ++i)
    if (cfg.workload[i].empty())
      throw ConfigError("[workload] core" + std::to_string(i) + " is missing");
  if (cfg.workload.size() > cfg.system.cores)
    throw ConfigError("[workload] names " + std::to_string(cfg.workload.size()) +
                      " cores but [frontend] cores = " + std::to_string(cfg.system.cores));
  try {
    cfg.resolve();
    cfg.system.validate();
    (void)cfg.system.device_context();
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(e.what());
  }
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  return parse_config(in, path.has_parent_path() ? path.parent_path() : ".");
}

nlohmann::ordered_json config_to_json(const ExperimentConfig& cfg) {
  nlohmann::ordered_json j;
  // Output settings do not affect results, so reports stay location independent.
  for (const auto& f : config_fields())
    if (f.section != "output") j[f.section][f.key] = f.get(cfg);
  for (std::size_t i = 0; i < cfg.workload.size(); ++i)
    j["workload"]["core" + std::to_string(i)] = cfg.workload[i];
  return j;
}

std::vector<std::string> config_columns() {
  std::vector<std::string> cols;
  for (const auto& f : config_fields())
    if (f.section != "output") cols.push_back(f.section + "." + f.key);
  return cols;
}

std::vector<std::string> config_values(const ExperimentConfig& cfg) {
  std::vector<std::string> vals;
  for (const auto& f : config_fields())
    if (f.section != "output") vals.push_back(f.get(cfg));
  return vals;
}

std::vector<std::vector<TraceRecord>> build_workload(const ExperimentConfig& cfg) {
  const std::uint64_t capacity = cfg.system.geometry.capacity_bytes();
  const std::uint64_t partition = capacity / cfg.system.cores;
  std::vector<std::vector<TraceRecord>> traces;
  for (std::size_t i = 0; i < cfg.workload.size(); ++i) {
    const std::string& src = cfg.workload[i];
    if (src.rfind("trace:", 0) == 0) {
      std::filesystem::path p = src.substr(6);
      if (p.is_relative()) p = cfg.base_dir / p;
      traces.push_back(load_trace(p.string(), capacity));
      continue;
    }
    const std::string text = src.substr(4);
    GeneratorSpec spec;
    try {
      spec = parse_generator_spec(text);
    } catch (const std::exception& e) {
      throw ConfigError("[workload] core" + std::to_string(i) + ": " + e.what());
    }
    if (!has_key(text, "seed")) spec.seed = cfg.seed + i;
    if (!has_key(text, "base")) spec.base_address = i * partition;
    try {
      traces.push_back(generate(spec));
    } catch (const TraceError&) {
      throw;
    } catch (const std::exception& e) {
      throw TraceError(0, 0, "core" + std::to_string(i) + " generator: " + e.what());
    }
    if (spec.base_address + spec.footprint_bytes > capacity)
      throw TraceError(0, 0, "core" + std::to_string(i) +
                                 " generator footprint extends beyond physical capacity");
  }
  return traces;
}

}  // namespace nvrowsim
