#include "nvrowsim/cli.h"

#include <algorithm>
#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "nvrowsim/config.h"
#include "nvrowsim/sweep.h"
#include "nvrowsim/validator.h"

namespace nvrowsim {

namespace fs = std::filesystem;

namespace {

std::vector<std::string> split_csv(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream in(s);
  std::string item;
  while (std::getline(in, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

std::ofstream open_out(const fs::path& p) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream os(p, std::ios::binary);
  if (!os) throw std::ios_base::failure("cannot write " + p.string());
  return os;
}

std::string utc_timestamp() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

struct RunOptions {
  std::string config;
  std::string out;
  bool deterministic = false;
  bool validate = false;
};

int do_run(const RunOptions& o, std::ostream& out) {
  ExperimentConfig cfg = load_config(o.config);
  if (!o.out.empty()) cfg.output.dir = o.out;
  const auto traces = build_workload(cfg);
  std::vector<Command> commands;
  const bool keep = o.validate || cfg.output.commands_csv;
  const StatsReport r = run_experiment(cfg, traces, o.validate, keep ? &commands : nullptr);

  const fs::path dir = cfg.output.dir;
  fs::create_directories(dir);
  if (cfg.output.json) {
    nlohmann::ordered_json j;
    j["tool"] = "nvrowsim";
    if (!o.deterministic) j["timestamp"] = utc_timestamp();
    j["config"] = config_to_json(cfg);
    j["report"] = to_json(r);
    auto os = open_out(dir / "report.json");
    os << j.dump(2) << '\n';
  }
  if (cfg.output.csv) {
    auto os = open_out(dir / "report.csv");
    auto cols = config_columns();
    for (auto& c : metric_columns()) cols.push_back(c);
    write_csv_row(os, cols);
    auto vals = config_values(cfg);
    for (auto& v : metric_values(r)) vals.push_back(v);
    write_csv_row(os, vals);
  }
  if (cfg.output.commands_csv) {
    auto os = open_out(dir / "commands.csv");
    write_command_csv_header(os);
    for (const auto& c : commands) write_command_csv_row(os, c);
  }

  std::uint64_t requests = 0;
  for (const auto& c : r.cores) requests += c.requests;
  out << "requests=" << requests << " cycles=" << r.elapsed_cycles
      << " hit_rate=" << r.hit_rate() << " energy_pj=" << r.energy.total;
  if (o.validate) out << " validated=" << commands.size() << " commands";
  out << '\n';
  return kExitOk;
}

struct SweepCliOptions {
  std::string config;
  std::string buffer_sizes;
  std::string tech;
  std::string mapping;
  std::string cache = "off";
  std::string csv;
  unsigned threads = 0;
  bool validate = false;
};

int do_sweep(const SweepCliOptions& o, std::ostream& out) {
  const ExperimentConfig cfg = load_config(o.config);
  SweepAxes axes;
  for (const auto& b : split_csv(o.buffer_sizes)) {
    try {
      std::size_t used = 0;
      axes.buffer_sizes.push_back(std::stoull(b, &used));
      if (used != b.size()) throw std::invalid_argument(b);
    } catch (const std::exception&) {
      throw ConfigError("--buffer-sizes: '" + b + "' is not a byte count");
    }
  }
  axes.techs = split_csv(o.tech);
  for (const auto& m : split_csv(o.mapping)) {
    try {
      axes.mappings.push_back(parse_mapping(m));
    } catch (const std::exception&) {
      throw ConfigError("--mapping: expected row or block, got '" + m + "'");
    }
  }
  axes.cache.clear();
  for (const auto& c : split_csv(o.cache)) {
    if (c == "on") axes.cache.push_back(true);
    else if (c == "off") axes.cache.push_back(false);
    else throw ConfigError("--cache: expected on and/or off, got '" + c + "'");
  }

  const auto rows = run_sweep(cfg, axes, {sweep_threads(o.threads), o.validate});
  const fs::path csv = o.csv.empty() ? fs::path(cfg.output.dir) / "sweep.csv" : fs::path(o.csv);
  auto os = open_out(csv);
  write_sweep_csv(os, rows);
  out << rows.size() << " rows written to " << csv.string() << '\n';
  return kExitOk;
}

struct GenOptions {
  std::string kind;
  std::uint64_t length = 0;
  std::uint64_t footprint = 0;
  std::uint64_t seed = 1;
  std::string out;
  double gap = 0.0;
  std::uint64_t stride = 64;
  std::optional<double> read_fraction;
  std::uint64_t base = 0;
};

int do_gen_trace(const GenOptions& o, std::ostream& out) {
  GeneratorSpec spec;
  try {
    spec.kind = parse_generator_kind(o.kind);
  } catch (const std::exception& e) {
    throw ConfigError(e.what());
  }
  spec.length = o.length;
  spec.footprint_bytes = o.footprint;
  spec.seed = o.seed;
  spec.gap_mean = o.gap;
  spec.stride = o.stride;
  spec.base_address = o.base;
  spec.read_fraction = o.read_fraction.value_or(spec.kind == GeneratorKind::Mixed ? 0.5 : 1.0);
  std::vector<TraceRecord> records;
  try {
    records = generate(spec);
  } catch (const std::invalid_argument& e) {
    throw TraceError(0, 0, e.what());
  }
  auto os = open_out(o.out);
  os << "# " << format_generator_spec(spec) << '\n';
  write_trace(os, records);
  out << records.size() << " records written to " << o.out << '\n';
  return kExitOk;
}

int do_report(const std::string& in_dir, const std::string& csv, std::ostream& out) {
  std::vector<fs::path> files;
  if (!fs::is_directory(in_dir)) throw ConfigError("--in: not a directory: " + in_dir);
  for (const auto& e : fs::recursive_directory_iterator(in_dir))
    if (e.is_regular_file() && e.path().extension() == ".json") files.push_back(e.path());
  std::sort(files.begin(), files.end());

  std::vector<std::string> cols = {"source"};
  for (auto& c : config_columns()) cols.push_back(c);
  for (auto& c : metric_columns()) cols.push_back(c);
  auto os = open_out(csv);
  write_csv_row(os, cols);
  std::size_t rows = 0;
  for (const auto& f : files) {
    std::ifstream is(f);
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(is);
    } catch (const std::exception& e) {
      throw ConfigError(f.string() + ": " + e.what());
    }
    if (!j.is_object() || !j.contains("report") || !j.contains("config")) continue;
    std::vector<std::string> cells = {fs::relative(f, in_dir).generic_string()};
    for (const auto& field : config_fields()) {
      if (field.section == "output") continue;
      const auto& sec = j["config"];
      if (sec.contains(field.section) && sec[field.section].contains(field.key))
        cells.push_back(sec[field.section][field.key].get<std::string>());
      else
        cells.push_back("");
    }
    StatsReport r;
    try {
      r = report_from_json(j["report"]);
    } catch (const std::exception& e) {
      throw ConfigError(f.string() + ": malformed report: " + e.what());
    }
    for (auto& v : metric_values(r)) cells.push_back(v);
    write_csv_row(os, cells);
    ++rows;
  }
  out << rows << " reports collected into " << csv << '\n';
  return kExitOk;
}

}  // namespace

int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Cycle-level DRAM/NVM main-memory simulator with small row buffers", "nvrowsim"};
  app.require_subcommand(1);

  RunOptions run;
  auto* run_cmd = app.add_subcommand("run", "Simulate one configuration");
  run_cmd->add_option("--config", run.config, "INI experiment file")->required();
  run_cmd->add_option("--out", run.out, "Output directory (overrides [output] dir)");
  run_cmd->add_flag("--deterministic", run.deterministic, "Omit the timestamp from the JSON report");
  run_cmd->add_flag("--validate", run.validate, "Re-check the command stream for timing legality");

  SweepCliOptions sweep;
  auto* sweep_cmd = app.add_subcommand("sweep", "Run a cross product of configurations");
  sweep_cmd->add_option("--config", sweep.config, "INI experiment file")->required();
  sweep_cmd->add_option("--buffer-sizes", sweep.buffer_sizes, "Per-chip buffer bytes, comma separated")
      ->required();
  sweep_cmd->add_option("--tech", sweep.tech, "dram,pcm,sttram")->required();
  sweep_cmd->add_option("--mapping", sweep.mapping, "row,block")->required();
  sweep_cmd->add_option("--cache", sweep.cache, "on,off");
  sweep_cmd->add_option("--csv", sweep.csv, "Output CSV (default <output dir>/sweep.csv)");
  sweep_cmd->add_option("--threads", sweep.threads, "Worker threads (0 = hardware threads)");
  sweep_cmd->add_flag("--validate", sweep.validate, "Re-check every run for timing legality");

  GenOptions gen;
  auto* gen_cmd = app.add_subcommand("gen-trace", "Write a synthetic trace");
  gen_cmd->add_option("--kind", gen.kind, "stream, random, strided or mixed")->required();
  gen_cmd->add_option("--length", gen.length, "Records")->required();
  gen_cmd->add_option("--footprint", gen.footprint, "Bytes covered by the addresses")->required();
  gen_cmd->add_option("--seed", gen.seed, "Generator seed")->required();
  gen_cmd->add_option("--out", gen.out, "Trace file")->required();
  gen_cmd->add_option("--gap", gen.gap, "Mean instruction gap");
  gen_cmd->add_option("--stride", gen.stride, "Stride in bytes (strided)");
  gen_cmd->add_option("--read-fraction", gen.read_fraction, "Probability of a read");
  gen_cmd->add_option("--base", gen.base, "Address offset");

  std::string report_in, report_csv;
  auto* report_cmd = app.add_subcommand("report", "Collect JSON reports into one CSV");
  report_cmd->add_option("--in", report_in, "Directory with report JSON files")->required();
  report_cmd->add_option("--csv", report_csv, "Output CSV")->required();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*run_cmd) return do_run(run, out);
    if (*sweep_cmd) return do_sweep(sweep, out);
    if (*gen_cmd) return do_gen_trace(gen, out);
    if (*report_cmd) return do_report(report_in, report_csv, out);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const TechError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const TraceError& e) {
    err << "trace error: " << e.what() << '\n';
    return kExitTrace;
  } catch (const InvariantViolation& e) {
    err << "invariant violated: " << e.what() << '\n';
    return kExitInvariant;
  } catch (const DeviceError& e) {
    err << "invariant violated: device protocol: " << e.what() << '\n';
    return kExitInvariant;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitIo;
  }
  return kExitConfig;
}

}  // namespace nvrowsim
