#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <utility>
#include <vector>

#include "nvrowsim/device.h"
#include "nvrowsim/trace.h"

namespace nvrowsim {

struct CacheParams {
  std::uint64_t capacity_bytes = 32ull << 20;
  std::uint32_t line_bytes = 64;
  std::uint32_t ways = 8;
};

struct CacheAccessResult {
  bool hit = false;
  bool fill_needed = false;
  std::optional<std::uint64_t> writeback;  // evicted dirty block address
  std::uint64_t writeback_tag = 0;
};

// Write-back, write-allocate, set-associative LRU cache in front of memory.
// Only dirty lines carry a data tag; clean lines mirror memory.
class EdramCache {
 public:
  explicit EdramCache(CacheParams p = {});

  CacheAccessResult access(std::uint64_t block_address, Op op, std::uint64_t write_tag = 0);
  // What access() would report, without touching any state.
  CacheAccessResult probe(std::uint64_t block_address, Op op) const;
  // Returns every dirty line as (block address, tag) in set/way order and
  // marks it clean.
  std::vector<std::pair<std::uint64_t, std::uint64_t>> flush();

  std::uint64_t sets() const { return sets_; }
  std::uint64_t lines() const { return lines_.size(); }
  std::vector<std::uint32_t> lru_ranks(std::uint64_t set) const;

  std::uint64_t hits() const { return hits_; }
  std::uint64_t misses() const { return misses_; }
  std::uint64_t writebacks() const { return writebacks_; }

 private:
  struct Line {
    std::uint64_t tag = 0;
    bool valid = false;
    bool dirty = false;
    std::uint32_t lru_rank = 0;  // 0 = most recently used
    std::uint64_t data_tag = 0;
  };

  std::uint64_t set_of(std::uint64_t block) const { return (block / p_.line_bytes) % sets_; }
  std::uint64_t tag_of(std::uint64_t block) const { return (block / p_.line_bytes) / sets_; }
  std::optional<std::uint32_t> find(std::uint64_t set, std::uint64_t tag) const;
  std::uint32_t victim(std::uint64_t set) const;
  void touch(std::uint64_t set, std::uint32_t way);

  CacheParams p_;
  std::uint64_t sets_ = 0;
  std::vector<Line> lines_;  // set-major
  std::uint64_t hits_ = 0;
  std::uint64_t misses_ = 0;
  std::uint64_t writebacks_ = 0;
};

struct CoreParams {
  std::uint32_t ipc_max = 3;
  std::uint32_t miss_buffers = 8;
  std::uint32_t clock_ratio = 10;  // core cycles per memory cycle
};

enum class IssueOutcome {
  Stalled,      // memory side refused; retry next cycle
  Outstanding,  // read occupies a miss buffer until completion
  Done,         // nothing to wait for (write, or cache hit)
};

struct IssueRequest {
  std::uint32_t core_id = 0;
  TraceRecord record;
  std::uint64_t trace_index = 0;
  std::uint64_t pass = 0;
  bool first_pass = true;
};

using IssueFn = std::function<IssueOutcome(const IssueRequest&)>;

struct CoreState {
  std::size_t cursor = 0;
  std::uint64_t pass = 0;
  std::uint64_t gap_remaining = 0;
  std::uint32_t outstanding_reads = 0;
  std::uint32_t first_pass_outstanding = 0;
  bool done = false;  // first pass issued and all of its reads returned
  bool stopped = false;
  std::uint64_t completed_instructions = 0;
  Cycle cycles_elapsed = 0;  // first-pass runtime in memory cycles
  std::uint64_t requests = 0;
  std::uint64_t reads = 0;
  std::uint64_t writes = 0;
};

// Gap/IPC core model: each core cycle retires up to ipc_max instructions of
// the current gap, then issues the record's memory request.
class Core {
 public:
  Core(std::uint32_t id, const std::vector<TraceRecord>* trace, CoreParams params,
       bool replay);

  // Advances `clock_ratio` core cycles within memory cycle `now`.
  void step(Cycle now, const IssueFn& issue);
  // Single core cycle; returns false when the core cannot make progress.
  bool core_cycle(Cycle now, const IssueFn& issue);
  void on_read_complete(Cycle now, bool first_pass);
  // Stops replay issue once every core has finished its first pass.
  void stop() { state_.stopped = true; }

  const CoreState& state() const { return state_; }
  std::uint32_t id() const { return id_; }
  bool finished_issuing() const;

 private:
  void mark_done_if_complete(Cycle now);

  std::uint32_t id_;
  const std::vector<TraceRecord>* trace_;
  CoreParams params_;
  bool replay_;
  CoreState state_;
};

}  // namespace nvrowsim
