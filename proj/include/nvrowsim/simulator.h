#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <vector>

#include "nvrowsim/controller.h"
#include "nvrowsim/frontend.h"
#include "nvrowsim/metrics.h"
#include "nvrowsim/techmodel.h"
#include "nvrowsim/trace.h"

namespace nvrowsim {

struct SystemConfig {
  Geometry geometry;
  Mapping mapping = Mapping::RowInterleaved;
  TechnologyProfile tech = TechnologyProfile::dram();
  FixedTimings fixed;
  ControllerParams controller;
  CoreParams core;
  std::uint32_t cores = 8;
  bool cache_enabled = false;
  CacheParams cache;
  bool flush_cache_at_end = true;
  bool close_banks_at_end = true;
  bool replay = true;
  double lifetime_floor_years = 5.0;

  // Throws DeviceError / TechError for inconsistent settings.
  void validate() const;
  DeviceContext device_context() const;
};

// Value observed by a core read when it completed; used to check that
// forwarding and coalescing never change program-visible data.
struct ReadResult {
  std::uint32_t core_id = 0;
  std::uint64_t trace_index = 0;
  std::uint64_t block_address = 0;
  std::uint64_t data_tag = 0;
  Cycle completion_cycle = 0;
  bool from_cache = false;
};

// Tag identifying the data written by one trace record.
constexpr std::uint64_t write_tag(std::uint32_t core, std::uint64_t pass,
                                  std::uint64_t trace_index) {
  return (std::uint64_t{core} + 1) << 48 | (pass & 0xFFFF) << 32 | (trace_index & 0xFFFFFFFF);
}

// One simulation instance: cores, optional cache, one controller per channel.
// Each memory cycle delivers completions, steps the cores in index order and
// then ticks the controllers in channel order.
class System {
 public:
  System(SystemConfig config, std::vector<std::vector<TraceRecord>> traces,
         EventLog log = {}, std::vector<ReadResult>* reads = nullptr);

  StatsReport run();

  const MemoryImage& memory() const { return memory_; }
  const SystemConfig& config() const { return config_; }

 private:
  IssueOutcome issue(const IssueRequest& r, Cycle now);
  IssueOutcome issue_uncached(const IssueRequest& r, std::uint64_t block, Cycle now);
  IssueOutcome issue_cached(const IssueRequest& r, std::uint64_t block, Cycle now);
  MemoryRequest make_request(std::uint32_t core, Op op, std::uint64_t block,
                             RequestSource source) ;
  void deliver(Cycle now);
  std::uint64_t activity() const;

  SystemConfig config_;
  DeviceContext ctx_;
  std::vector<std::vector<TraceRecord>> traces_;
  EventLog log_;
  std::vector<ReadResult>* reads_;
  MemoryImage memory_;
  std::vector<Controller> controllers_;
  std::vector<Core> cores_;
  std::unique_ptr<EdramCache> cache_;
  std::uint64_t next_id_ = 0;
  std::uint64_t issued_ = 0;
  std::uint64_t delivered_ = 0;
};

// Convenience wrapper for a single run.
StatsReport simulate(const SystemConfig& config,
                     std::vector<std::vector<TraceRecord>> traces,
                     EventLog log = {}, MemoryImage* final_memory = nullptr);

}  // namespace nvrowsim
