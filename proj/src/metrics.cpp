#include "nvrowsim/metrics.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <stdexcept>

namespace nvrowsim {

double hit_rate(const LookupCounts& c) {
  if (c.total() == 0) throw std::domain_error("hit_rate: no row-buffer lookups");
  return static_cast<double>(c.hits) / static_cast<double>(c.total());
}

double hit_rate(const StatsReport& r) { return hit_rate(r.row_buffer); }

double StatsReport::hit_rate() const {
  return row_buffer.total() == 0 ? 0.0 : nvrowsim::hit_rate(row_buffer);
}

std::vector<Cycle> StatsReport::first_pass_cycles() const {
  std::vector<Cycle> out;
  for (const auto& c : cores) out.push_back(c.first_pass_cycles);
  return out;
}

double weighted_speedup(std::span<const Cycle> shared, std::span<const Cycle> alone) {
  if (alone.size() != shared.size() || alone.empty())
    throw std::invalid_argument("weighted_speedup: missing alone-run baseline");
  double sum = 0.0;
  for (std::size_t i = 0; i < shared.size(); ++i) {
    if (shared[i] <= 0 || alone[i] <= 0)
      throw std::invalid_argument("weighted_speedup: runtimes must be positive");
    sum += static_cast<double>(alone[i]) / static_cast<double>(shared[i]);
  }
  return sum;
}

double lifetime_years(double capacity_bytes, double endurance_writes,
                      double array_bytes_written, double elapsed_seconds) {
  if (elapsed_seconds <= 0) throw std::domain_error("lifetime_years: zero elapsed time");
  if (array_bytes_written <= 0) return std::numeric_limits<double>::infinity();
  const double rate = array_bytes_written / elapsed_seconds;
  return capacity_bytes * endurance_writes / rate / kSecondsPerYear;
}

EnergyBreakdown energy_breakdown(const std::array<double, 4>& by_kind) {
  EnergyBreakdown e;
  e.activate = by_kind[static_cast<std::size_t>(EnergyKind::Activate)];
  e.read = by_kind[static_cast<std::size_t>(EnergyKind::Read)];
  e.write = by_kind[static_cast<std::size_t>(EnergyKind::Write)];
  e.array_write = by_kind[static_cast<std::size_t>(EnergyKind::ArrayWrite)];
  e.total = e.activate + e.read + e.write + e.array_write;
  e.transfer_fraction = e.total > 0 ? (e.read + e.write) / e.total : 0.0;
  return e;
}

EnergyBreakdown energy_breakdown(std::span<const EnergyEvent> events) {
  std::array<double, 4> sums{};
  for (const auto& ev : events) sums[static_cast<std::size_t>(ev.kind)] += ev.picojoules;
  return energy_breakdown(sums);
}

void finalize_report(StatsReport& r) {
  r.array_write_bytes_per_second =
      r.elapsed_seconds > 0 ? static_cast<double>(r.array_bytes_written) / r.elapsed_seconds
                            : 0.0;
  r.lifetime_years.reset();
  r.flagged_write_rate.reset();
  if (r.endurance_writes && r.elapsed_seconds > 0) {
    r.lifetime_years = lifetime_years(static_cast<double>(r.capacity_bytes), *r.endurance_writes,
                                      static_cast<double>(r.array_bytes_written),
                                      r.elapsed_seconds);
    if (*r.lifetime_years < r.lifetime_floor_years)
      r.flagged_write_rate = r.array_write_bytes_per_second;
  }
}

StatsReport merge_reports(const StatsReport& a, const StatsReport& b) {
  StatsReport m = a;
  m.cores.insert(m.cores.end(), b.cores.begin(), b.cores.end());
  m.row_buffer.hits += b.row_buffer.hits;
  m.row_buffer.closed_misses += b.row_buffer.closed_misses;
  m.row_buffer.conflicts += b.row_buffer.conflicts;
  m.energy = energy_breakdown(std::array<double, 4>{
      a.energy.activate + b.energy.activate, a.energy.read + b.energy.read,
      a.energy.write + b.energy.write, a.energy.array_write + b.energy.array_write});
  for (std::size_t k = 0; k < 4; ++k) m.commands[k] += b.commands[k];
  m.bus_busy_cycles += b.bus_busy_cycles;
  m.memory_reads += b.memory_reads;
  m.memory_writes += b.memory_writes;
  m.coalesced_writes += b.coalesced_writes;
  m.forwarded_reads += b.forwarded_reads;
  m.array_bytes_written += b.array_bytes_written;
  m.array_block_writes += b.array_block_writes;
  m.cache_hits += b.cache_hits;
  m.cache_misses += b.cache_misses;
  m.cache_writebacks += b.cache_writebacks;
  m.flushed_lines += b.flushed_lines;
  // Partials of one run share the clock.
  m.elapsed_cycles = std::max(a.elapsed_cycles, b.elapsed_cycles);
  m.elapsed_seconds = std::max(a.elapsed_seconds, b.elapsed_seconds);
  finalize_report(m);
  return m;
}

namespace {

const char* kCommandNames[4] = {"activate", "precharge", "read", "write"};

template <typename T>
nlohmann::ordered_json opt(const std::optional<T>& v) {
  if (!v) return nullptr;
  if constexpr (std::is_floating_point_v<T>) {
    if (!std::isfinite(*v)) return nullptr;
  }
  return *v;
}

std::string num(double v) {
  if (std::isinf(v)) return "inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

}  // namespace

nlohmann::ordered_json to_json(const StatsReport& r) {
  nlohmann::ordered_json j;
  auto& cores = j["cores"] = nlohmann::ordered_json::array();
  for (const auto& c : r.cores)
    cores.push_back({{"requests", c.requests},
                     {"reads", c.reads},
                     {"writes", c.writes},
                     {"instructions", c.instructions},
                     {"first_pass_cycles", c.first_pass_cycles}});
  j["row_buffer"] = {{"hits", r.row_buffer.hits},
                     {"closed_misses", r.row_buffer.closed_misses},
                     {"conflicts", r.row_buffer.conflicts},
                     {"hit_rate", r.hit_rate()}};
  j["energy_pj"] = {{"activate", r.energy.activate},
                    {"read", r.energy.read},
                    {"write", r.energy.write},
                    {"array_write", r.energy.array_write},
                    {"total", r.energy.total},
                    {"transfer_fraction", r.energy.transfer_fraction}};
  nlohmann::ordered_json cmds;
  for (std::size_t k = 0; k < 4; ++k) cmds[kCommandNames[k]] = r.commands[k];
  j["memory"] = {{"commands", cmds},
                 {"bus_busy_cycles", r.bus_busy_cycles},
                 {"read_commands", r.memory_reads},
                 {"write_commands", r.memory_writes},
                 {"coalesced_writes", r.coalesced_writes},
                 {"forwarded_reads", r.forwarded_reads}};
  j["cache"] = {{"hits", r.cache_hits},
                {"misses", r.cache_misses},
                {"writebacks", r.cache_writebacks},
                {"flushed_lines", r.flushed_lines}};
  j["wear"] = {{"array_bytes_written", r.array_bytes_written},
               {"array_block_writes", r.array_block_writes},
               {"writes_per_second", r.array_write_bytes_per_second},
               {"capacity_bytes", r.capacity_bytes},
               {"endurance_writes", opt(r.endurance_writes)}};
  j["time"] = {{"elapsed_cycles", r.elapsed_cycles}, {"elapsed_seconds", r.elapsed_seconds}};
  const bool infinite = r.lifetime_years && std::isinf(*r.lifetime_years);
  j["derived"] = {{"weighted_speedup", opt(r.weighted_speedup)},
                  {"lifetime_years", opt(r.lifetime_years)},
                  {"lifetime_infinite", infinite},
                  {"lifetime_floor_years", r.lifetime_floor_years},
                  {"lifetime_meets_floor", !r.flagged_write_rate.has_value()},
                  {"flagged_write_rate", opt(r.flagged_write_rate)}};
  return j;
}

StatsReport report_from_json(const nlohmann::json& j) {
  StatsReport r;
  for (const auto& c : j.at("cores"))
    r.cores.push_back({c.at("requests"), c.at("reads"), c.at("writes"),
                       c.at("instructions"), c.at("first_pass_cycles")});
  const auto& rb = j.at("row_buffer");
  r.row_buffer = {rb.at("hits"), rb.at("closed_misses"), rb.at("conflicts")};
  const auto& e = j.at("energy_pj");
  r.energy = energy_breakdown(std::array<double, 4>{e.at("activate"), e.at("read"),
                                                    e.at("write"), e.at("array_write")});
  const auto& m = j.at("memory");
  for (std::size_t k = 0; k < 4; ++k) r.commands[k] = m.at("commands").at(kCommandNames[k]);
  r.bus_busy_cycles = m.at("bus_busy_cycles");
  r.memory_reads = m.at("read_commands");
  r.memory_writes = m.at("write_commands");
  r.coalesced_writes = m.at("coalesced_writes");
  r.forwarded_reads = m.at("forwarded_reads");
  const auto& c = j.at("cache");
  r.cache_hits = c.at("hits");
  r.cache_misses = c.at("misses");
  r.cache_writebacks = c.at("writebacks");
  r.flushed_lines = c.at("flushed_lines");
  const auto& w = j.at("wear");
  r.array_bytes_written = w.at("array_bytes_written");
  r.array_block_writes = w.at("array_block_writes");
  r.capacity_bytes = w.at("capacity_bytes");
  if (!w.at("endurance_writes").is_null()) r.endurance_writes = w.at("endurance_writes").get<double>();
  r.elapsed_cycles = j.at("time").at("elapsed_cycles");
  r.elapsed_seconds = j.at("time").at("elapsed_seconds");
  const auto& d = j.at("derived");
  r.lifetime_floor_years = d.at("lifetime_floor_years");
  if (!d.at("weighted_speedup").is_null()) r.weighted_speedup = d.at("weighted_speedup").get<double>();
  finalize_report(r);
  return r;
}

std::vector<std::string> metric_columns() {
  return {"hits",           "closed_misses",     "conflicts",         "hit_rate",
          "energy_activate_pj", "energy_read_pj", "energy_write_pj", "energy_array_write_pj",
          "energy_total_pj", "transfer_fraction", "cmd_activate",    "cmd_precharge",
          "cmd_read",       "cmd_write",         "bus_busy_cycles",   "coalesced_writes",
          "forwarded_reads", "array_block_writes", "array_bytes_written", "writes_per_second",
          "elapsed_cycles", "elapsed_seconds",   "weighted_speedup",  "lifetime_years",
          "lifetime_meets_floor", "flagged_write_rate"};
}

std::vector<std::string> metric_values(const StatsReport& r) {
  auto u = [](std::uint64_t v) { return std::to_string(v); };
  return {u(r.row_buffer.hits),
          u(r.row_buffer.closed_misses),
          u(r.row_buffer.conflicts),
          num(r.hit_rate()),
          num(r.energy.activate),
          num(r.energy.read),
          num(r.energy.write),
          num(r.energy.array_write),
          num(r.energy.total),
          num(r.energy.transfer_fraction),
          u(r.commands[0]),
          u(r.commands[1]),
          u(r.commands[2]),
          u(r.commands[3]),
          u(r.bus_busy_cycles),
          u(r.coalesced_writes),
          u(r.forwarded_reads),
          u(r.array_block_writes),
          u(r.array_bytes_written),
          num(r.array_write_bytes_per_second),
          std::to_string(r.elapsed_cycles),
          num(r.elapsed_seconds),
          r.weighted_speedup ? num(*r.weighted_speedup) : "",
          r.lifetime_years ? num(*r.lifetime_years) : "",
          r.flagged_write_rate ? "false" : "true",
          r.flagged_write_rate ? num(*r.flagged_write_rate) : ""};
}

}  // namespace nvrowsim
