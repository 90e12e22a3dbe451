#include "nvrowsim/simulator.h"

#include <algorithm>
#include <deque>
#include <sstream>

namespace nvrowsim {

void SystemConfig::validate() const {
  geometry.validate();
  tech.validate();
  if (cores == 0) throw DeviceError("frontend: cores must be at least 1");
  if (controller.read_queue_capacity == 0 || controller.write_queue_capacity == 0)
    throw DeviceError("controller: queue capacities must be positive");
  if (controller.drain_low >= controller.drain_high ||
      controller.drain_high > controller.write_queue_capacity)
    throw DeviceError("controller: need drain_low < drain_high <= write queue capacity");
  if (controller.timeout <= 0) throw DeviceError("controller: timeout must be positive");
  if (core.miss_buffers == 0) throw DeviceError("frontend: miss_buffers must be positive");
  if (cache_enabled && cache.line_bytes != geometry.cache_block_bytes)
    throw DeviceError("frontend: cache line must equal the memory block size");
}

DeviceContext SystemConfig::device_context() const {
  DeviceContext ctx;
  ctx.geometry = geometry;
  ctx.timing = derive_timing(tech, geometry.buffer_bytes_per_chip,
                             geometry.row_bytes_per_chip, fixed);
  ctx.energy = energy_table(tech);
  ctx.protocol = tech.protocol;
  return ctx;
}

System::System(SystemConfig config, std::vector<std::vector<TraceRecord>> traces,
               EventLog log, std::vector<ReadResult>* reads)
    : config_(std::move(config)), traces_(std::move(traces)), log_(log), reads_(reads) {
  config_.validate();
  if (traces_.size() > config_.cores)
    throw DeviceError("workload names " + std::to_string(traces_.size()) +
                      " cores but only " + std::to_string(config_.cores) +
                      " are configured");
  const std::uint64_t capacity = config_.geometry.capacity_bytes();
  for (const auto& t : traces_)
    for (std::size_t i = 0; i < t.size(); ++i)
      if (t[i].address >= capacity)
        throw TraceError(i + 1, 0, "address beyond physical capacity");

  ctx_ = config_.device_context();
  for (std::uint32_t c = 0; c < config_.geometry.channels; ++c)
    controllers_.emplace_back(c, ctx_, config_.controller, &memory_, log_);
  for (std::uint32_t i = 0; i < traces_.size(); ++i)
    cores_.emplace_back(i, &traces_[i], config_.core, config_.replay);
  if (config_.cache_enabled) cache_ = std::make_unique<EdramCache>(config_.cache);
}

MemoryRequest System::make_request(std::uint32_t core, Op op, std::uint64_t block,
                                   RequestSource source) {
  MemoryRequest req;
  req.id = next_id_++;
  req.core_id = core;
  req.op = op;
  req.block_address = block;
  req.location = decode_address(block, config_.geometry, config_.mapping);
  req.source = source;
  return req;
}

IssueOutcome System::issue(const IssueRequest& r, Cycle now) {
  const std::uint64_t block = r.record.address & ~(config_.geometry.cache_block_bytes - 1);
  const IssueOutcome out =
      cache_ ? issue_cached(r, block, now) : issue_uncached(r, block, now);
  if (out != IssueOutcome::Stalled) ++issued_;
  return out;
}

IssueOutcome System::issue_uncached(const IssueRequest& r, std::uint64_t block, Cycle now) {
  MemoryRequest req = make_request(r.core_id, r.record.op, block, RequestSource::Core);
  req.first_pass = r.first_pass;
  req.trace_index = r.trace_index;
  if (req.op == Op::Write) req.data_tag = write_tag(r.core_id, r.pass, r.trace_index);
  else req.core_waits = true;
  Controller& ctrl = controllers_[req.location.channel];
  const EnqueueResult res = ctrl.enqueue(req, now);
  if (res == EnqueueResult::Rejected) {
    --next_id_;
    return IssueOutcome::Stalled;
  }
  return req.op == Op::Read ? IssueOutcome::Outstanding : IssueOutcome::Done;
}

IssueOutcome System::issue_cached(const IssueRequest& r, std::uint64_t block, Cycle now) {
  const Op op = r.record.op;
  const CacheAccessResult probe = cache_->probe(block, op);
  if (probe.hit) {
    const std::uint64_t tag = write_tag(r.core_id, r.pass, r.trace_index);
    cache_->access(block, op, tag);
    return IssueOutcome::Done;
  }

  // A miss needs room for the fill read and the dirty victim's writeback
  // before the cache state may change.
  const Geometry& g = config_.geometry;
  const auto fill_loc = decode_address(block, g, config_.mapping);
  if (!controllers_[fill_loc.channel].has_room(Op::Read)) return IssueOutcome::Stalled;
  if (probe.writeback) {
    const auto wb_loc = decode_address(*probe.writeback, g, config_.mapping);
    if (!controllers_[wb_loc.channel].has_room(Op::Write)) return IssueOutcome::Stalled;
  }

  const std::uint64_t tag = write_tag(r.core_id, r.pass, r.trace_index);
  const CacheAccessResult res = cache_->access(block, op, tag);
  if (res.writeback) {
    MemoryRequest wb =
        make_request(r.core_id, Op::Write, *res.writeback, RequestSource::CacheWriteback);
    wb.data_tag = res.writeback_tag;
    wb.first_pass = r.first_pass;
    if (controllers_[wb.location.channel].enqueue(wb, now) == EnqueueResult::Rejected)
      throw InvariantViolation("cache writeback rejected after room check");
  }
  MemoryRequest fill = make_request(r.core_id, Op::Read, block, RequestSource::CacheFill);
  fill.first_pass = r.first_pass;
  fill.trace_index = r.trace_index;
  fill.core_waits = op == Op::Read;
  if (controllers_[fill.location.channel].enqueue(fill, now) == EnqueueResult::Rejected)
    throw InvariantViolation("cache fill rejected after room check");
  return op == Op::Read ? IssueOutcome::Outstanding : IssueOutcome::Done;
}

void System::deliver(Cycle now) {
  for (auto& ctrl : controllers_) {
    for (const MemoryRequest& req : ctrl.take_completed(now)) {
      ++delivered_;
      if (!req.core_waits) continue;
      cores_[req.core_id].on_read_complete(now, req.first_pass);
      if (reads_)
        reads_->push_back({req.core_id, req.trace_index, req.block_address, req.data_tag,
                           *req.completion_cycle, req.source == RequestSource::CacheFill});
    }
  }
}

std::uint64_t System::activity() const {
  std::uint64_t n = issued_ + delivered_;
  for (const auto& ctrl : controllers_)
    for (auto c : ctrl.stats().commands) n += c;
  return n;
}

StatsReport System::run() {
  std::deque<std::pair<std::uint64_t, std::uint64_t>> flush;
  std::uint64_t flushed = 0;
  bool first_pass_complete = false;
  Cycle now = 0;
  Cycle last_progress = 0;
  std::uint64_t last_activity = 0;

  const auto all_done = [this] {
    return std::all_of(cores_.begin(), cores_.end(),
                       [](const Core& c) { return c.state().done; });
  };

  for (;; ++now) {
    deliver(now);

    if (!first_pass_complete) {
      if (!all_done())
        for (auto& core : cores_)
          core.step(now, [this, now](const IssueRequest& r) { return issue(r, now); });
      if (all_done()) {
        first_pass_complete = true;
        for (auto& core : cores_) core.stop();
        if (cache_ && config_.flush_cache_at_end)
          for (const auto& line : cache_->flush()) flush.push_back(line);
      }
    }

    while (!flush.empty()) {
      MemoryRequest req =
          make_request(0, Op::Write, flush.front().first, RequestSource::Flush);
      req.data_tag = flush.front().second;
      req.first_pass = false;
      if (controllers_[req.location.channel].enqueue(req, now) == EnqueueResult::Rejected) {
        --next_id_;
        break;
      }
      flush.pop_front();
      ++flushed;
      ++issued_;
    }

    for (auto& ctrl : controllers_) ctrl.tick(now);

    if (first_pass_complete && flush.empty() &&
        std::all_of(controllers_.begin(), controllers_.end(),
                    [](const Controller& c) { return c.idle(); })) {
      if (!config_.close_banks_at_end) break;
      bool closed = true;
      for (auto& ctrl : controllers_) closed = ctrl.close_banks(now) && closed;
      if (closed) break;
    }

    const std::uint64_t a = activity();
    if (a != last_activity) {
      last_activity = a;
      last_progress = now;
    } else if (now - last_progress > config_.controller.timeout) {
      throw InvariantViolation("forward progress: no request issued, command sent or data "
                               "returned for " + std::to_string(config_.controller.timeout) +
                               " cycles");
    }
  }

  StatsReport r;
  for (const auto& core : cores_) {
    const CoreState& s = core.state();
    r.cores.push_back({s.requests, s.reads, s.writes, s.completed_instructions,
                       s.cycles_elapsed});
  }
  std::array<double, 4> energy{};
  for (const auto& ctrl : controllers_) {
    const ChannelStats& s = ctrl.stats();
    r.row_buffer.hits += s.lookups.hits;
    r.row_buffer.closed_misses += s.lookups.closed_misses;
    r.row_buffer.conflicts += s.lookups.conflicts;
    for (std::size_t k = 0; k < 4; ++k) {
      r.commands[k] += s.commands[k];
      energy[k] += s.energy_pj[k];
    }
    r.bus_busy_cycles += s.bus_busy_cycles;
    r.coalesced_writes += s.coalesced_writes;
    r.forwarded_reads += s.forwarded_reads;
    r.array_bytes_written += s.array_bytes_written;
    r.array_block_writes += s.array_block_writes;
  }
  r.energy = energy_breakdown(energy);
  r.memory_reads = r.commands[static_cast<std::size_t>(CommandKind::Read)];
  r.memory_writes = r.commands[static_cast<std::size_t>(CommandKind::Write)];
  if (cache_) {
    r.cache_hits = cache_->hits();
    r.cache_misses = cache_->misses();
    r.cache_writebacks = cache_->writebacks();
  }
  r.flushed_lines = flushed;
  r.elapsed_cycles = now + 1;
  r.elapsed_seconds = static_cast<double>(r.elapsed_cycles) * ctx_.timing.clock_period_ns * 1e-9;
  r.capacity_bytes = config_.geometry.capacity_bytes();
  r.endurance_writes = config_.tech.endurance_writes;
  r.lifetime_floor_years = config_.lifetime_floor_years;
  finalize_report(r);
  return r;
}

StatsReport simulate(const SystemConfig& config, std::vector<std::vector<TraceRecord>> traces,
                     EventLog log, MemoryImage* final_memory) {
  System sys(config, std::move(traces), log);
  StatsReport r = sys.run();
  if (final_memory) *final_memory = sys.memory();
  return r;
}

}  // namespace nvrowsim
