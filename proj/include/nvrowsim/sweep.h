#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "nvrowsim/config.h"
#include "nvrowsim/metrics.h"

namespace nvrowsim {

struct SweepAxes {
  std::vector<std::uint64_t> buffer_sizes;
  std::vector<std::string> techs;
  std::vector<Mapping> mappings;
  std::vector<bool> cache = {false};
};

struct SweepOptions {
  unsigned threads = 1;
  bool validate = false;
};

struct SweepRow {
  std::string run_kind;  // "shared" or "alone"
  std::optional<std::uint32_t> core;  // alone runs only
  ExperimentConfig config;
  StatsReport report;
  // WRITE commands relative to the 1KB/chip DRAM cache-off point of the same
  // mapping, when that point is part of the sweep.
  std::optional<double> normalized_writes;
};

// Parallelism: `requested` (0 = hardware threads) capped by NVROWSIM_THREADS.
unsigned sweep_threads(unsigned requested = 0);

// Runs one configuration; with `validate` the command stream is re-checked
// and any violation raises InvariantViolation.
StatsReport run_experiment(const ExperimentConfig& cfg,
                           const std::vector<std::vector<TraceRecord>>& traces,
                           bool validate, std::vector<Command>* commands = nullptr);

// Alone-run baselines come first (per mapping x cache, DRAM with a full-row
// buffer, one row per core), followed by the cross product in axis order
// buffer size, technology, mapping, cache. Rows are ordered identically for
// any thread count.
std::vector<SweepRow> run_sweep(const ExperimentConfig& base, const SweepAxes& axes,
                                const SweepOptions& options);

std::vector<std::string> sweep_columns();
void write_sweep_csv(std::ostream& os, const std::vector<SweepRow>& rows);
void write_csv_row(std::ostream& os, const std::vector<std::string>& cells);

}  // namespace nvrowsim
