#pragma once

#include <array>
#include <cstdint>
#include <deque>
#include <optional>
#include <unordered_map>
#include <vector>

#include "nvrowsim/device.h"
#include "nvrowsim/trace.h"

namespace nvrowsim {

// Functional backing store: block address -> tag of the last write.
using MemoryImage = std::unordered_map<std::uint64_t, std::uint64_t>;

enum class RequestSource { Core, CacheFill, CacheWriteback, Flush };

struct MemoryRequest {
  std::uint64_t id = 0;
  std::uint32_t core_id = 0;
  Op op = Op::Read;
  std::uint64_t block_address = 0;
  PhysicalLocation location;
  Cycle enqueue_cycle = 0;
  std::optional<Cycle> completion_cycle;
  // Write: identity of the data written. Read: identity of the data returned.
  std::uint64_t data_tag = 0;
  RequestSource source = RequestSource::Core;
  bool classified = false;  // row-buffer lookup already counted
  bool forwarded = false;
  // Front-end bookkeeping carried through to completion.
  bool core_waits = false;  // occupies a miss buffer of `core_id`
  bool first_pass = true;
  std::uint64_t trace_index = 0;
};

struct ControllerParams {
  std::size_t read_queue_capacity = 64;
  std::size_t write_queue_capacity = 64;
  std::size_t drain_high = 48;
  std::size_t drain_low = 16;
  bool forwarding = true;
  bool coalescing = true;
  Cycle timeout = 1'000'000;
};

struct QueueState {
  std::deque<MemoryRequest> read_queue;
  std::deque<MemoryRequest> write_queue;
  bool drain_mode = false;
};

enum class EnqueueResult { Accepted, Coalesced, Forwarded, Rejected };

const char* to_string(EnqueueResult r);

// Writes to a block already in the write queue overwrite it in place when
// coalescing is on. Reads to a queued block are answered from the youngest
// matching write after `forward_latency` cycles when forwarding is on.
EnqueueResult enqueue(QueueState& q, MemoryRequest& req, const ControllerParams& p,
                      Cycle forward_latency);

// Watermark hysteresis for write draining.
bool update_drain(QueueState& q, const ControllerParams& p);

struct ScheduleChoice {
  Command command;
  bool from_write_queue = false;
  std::size_t index = 0;
};

// FR-FCFS: issuable row-hit column commands first, then the preferred queue
// (reads unless draining), then oldest (enqueue cycle, id). A PRECHARGE is
// held back while any queued request still needs the bank's open segment or
// latched row. Bank phases must already be settled for `now`.
std::optional<ScheduleChoice> schedule(const QueueState& q, const ChannelState& channel,
                                       Cycle now, const DeviceContext& ctx);

struct LookupCounts {
  std::uint64_t hits = 0;
  std::uint64_t closed_misses = 0;
  std::uint64_t conflicts = 0;

  std::uint64_t total() const { return hits + closed_misses + conflicts; }
};

struct ChannelStats {
  LookupCounts lookups;
  std::array<std::uint64_t, 4> commands{};   // by CommandKind
  std::array<double, 4> energy_pj{};          // by EnergyKind
  std::uint64_t array_bytes_written = 0;
  std::uint64_t array_block_writes = 0;
  std::uint64_t bus_busy_cycles = 0;
  std::uint64_t coalesced_writes = 0;
  std::uint64_t forwarded_reads = 0;
  std::uint64_t rejected = 0;
};

// Optional raw event capture for tests and the debug CSV.
struct EventLog {
  std::vector<Command>* commands = nullptr;
  std::vector<EnergyEvent>* energy = nullptr;
  std::vector<WearEvent>* wear = nullptr;
};

class Controller {
 public:
  Controller(std::uint32_t channel, DeviceContext ctx, ControllerParams params,
             MemoryImage* memory, EventLog log = {});

  EnqueueResult enqueue(MemoryRequest req, Cycle now);
  bool has_room(Op op) const;

  // One memory cycle: settle banks, update drain mode, issue at most one
  // command (two for an NVM row/column address pair).
  void tick(Cycle now);

  // End-of-run: closes open buffers one command at a time. Returns true once
  // every bank is closed.
  bool close_banks(Cycle now);

  // Requests whose data phase ended at or before `now`.
  std::vector<MemoryRequest> take_completed(Cycle now);

  bool idle() const;
  std::size_t pending() const;

  const QueueState& queues() const { return queues_; }
  const ChannelState& channel_state() const { return channel_; }
  const ChannelStats& stats() const { return stats_; }
  const DeviceContext& context() const { return ctx_; }

 private:
  void issue(const Command& cmd);
  void check_starvation(Cycle now) const;
  Cycle next_ready(Cycle now) const;

  std::uint32_t channel_index_;
  DeviceContext ctx_;
  ControllerParams params_;
  MemoryImage* memory_;
  EventLog log_;
  ChannelState channel_;
  QueueState queues_;
  std::vector<MemoryRequest> in_flight_;
  ChannelStats stats_;
  Cycle wake_ = 0;  // scheduling is skipped before this cycle
};

}  // namespace nvrowsim
