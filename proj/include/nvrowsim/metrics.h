#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "nvrowsim/controller.h"
#include "nvrowsim/device.h"

namespace nvrowsim {

inline constexpr double kSecondsPerYear = 31'557'600.0;

struct CoreStats {
  std::uint64_t requests = 0;
  std::uint64_t reads = 0;
  std::uint64_t writes = 0;
  std::uint64_t instructions = 0;
  Cycle first_pass_cycles = 0;
};

struct EnergyBreakdown {
  double activate = 0.0;
  double read = 0.0;
  double write = 0.0;
  double array_write = 0.0;
  double total = 0.0;
  double transfer_fraction = 0.0;  // (read + write) / total, 0 when total is 0
};

struct StatsReport {
  std::vector<CoreStats> cores;
  LookupCounts row_buffer;
  EnergyBreakdown energy;  // picojoules
  std::array<std::uint64_t, 4> commands{};
  std::uint64_t bus_busy_cycles = 0;
  std::uint64_t memory_reads = 0;   // READ commands
  std::uint64_t memory_writes = 0;  // WRITE commands
  std::uint64_t coalesced_writes = 0;
  std::uint64_t forwarded_reads = 0;
  std::uint64_t array_bytes_written = 0;
  std::uint64_t array_block_writes = 0;
  std::uint64_t cache_hits = 0;
  std::uint64_t cache_misses = 0;
  std::uint64_t cache_writebacks = 0;
  std::uint64_t flushed_lines = 0;
  Cycle elapsed_cycles = 0;
  double elapsed_seconds = 0.0;
  double array_write_bytes_per_second = 0.0;
  std::uint64_t capacity_bytes = 0;
  std::optional<double> endurance_writes;
  std::optional<double> lifetime_years;  // absent for DRAM; +inf when nothing written
  double lifetime_floor_years = 5.0;
  // Set when the projected lifetime falls below the floor.
  std::optional<double> flagged_write_rate;
  std::optional<double> weighted_speedup;

  double hit_rate() const;
  std::vector<Cycle> first_pass_cycles() const;
};

double hit_rate(const LookupCounts& c);
double hit_rate(const StatsReport& r);

// Sum over cores of alone / shared runtime.
double weighted_speedup(std::span<const Cycle> shared, std::span<const Cycle> alone);

// Ideal wear leveling: capacity * endurance bytes can be written before the
// first cell fails. Infinite when nothing is written.
double lifetime_years(double capacity_bytes, double endurance_writes,
                      double array_bytes_written, double elapsed_seconds);

EnergyBreakdown energy_breakdown(std::span<const EnergyEvent> events);
EnergyBreakdown energy_breakdown(const std::array<double, 4>& by_kind);

// Derives hit rate, lifetime and the floor flag from the raw counters.
void finalize_report(StatsReport& r);

// Merges partial reports by field-wise addition of counters.
StatsReport merge_reports(const StatsReport& a, const StatsReport& b);

nlohmann::ordered_json to_json(const StatsReport& r);
StatsReport report_from_json(const nlohmann::json& j);

// Stable metric columns for the per-run CSV.
std::vector<std::string> metric_columns();
std::vector<std::string> metric_values(const StatsReport& r);

}  // namespace nvrowsim
