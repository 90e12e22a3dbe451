#include "nvrowsim/controller.h"

#include <algorithm>
#include <limits>
#include <tuple>

namespace nvrowsim {

const char* to_string(EnqueueResult r) {
  switch (r) {
    case EnqueueResult::Accepted: return "accepted";
    case EnqueueResult::Coalesced: return "coalesced";
    case EnqueueResult::Forwarded: return "forwarded";
    case EnqueueResult::Rejected: return "rejected";
  }
  return "?";
}

EnqueueResult enqueue(QueueState& q, MemoryRequest& req, const ControllerParams& p,
                      Cycle forward_latency) {
  if (req.op == Op::Write) {
    // A queued read of the block must still see the older data, so the
    // write then gets its own entry.
    const bool read_pending =
        std::any_of(q.read_queue.begin(), q.read_queue.end(),
                    [&](const MemoryRequest& r) { return r.block_address == req.block_address; });
    if (p.coalescing && !read_pending) {
      for (auto w = q.write_queue.rbegin(); w != q.write_queue.rend(); ++w) {
        if (w->block_address == req.block_address) {
          w->data_tag = req.data_tag;
          return EnqueueResult::Coalesced;
        }
      }
    }
    if (q.write_queue.size() >= p.write_queue_capacity) return EnqueueResult::Rejected;
    q.write_queue.push_back(req);
    return EnqueueResult::Accepted;
  }

  if (p.forwarding) {
    for (auto w = q.write_queue.rbegin(); w != q.write_queue.rend(); ++w) {
      if (w->block_address == req.block_address) {
        req.data_tag = w->data_tag;
        req.completion_cycle = req.enqueue_cycle + forward_latency;
        req.forwarded = true;
        return EnqueueResult::Forwarded;
      }
    }
  }
  if (q.read_queue.size() >= p.read_queue_capacity) return EnqueueResult::Rejected;
  q.read_queue.push_back(req);
  return EnqueueResult::Accepted;
}

bool update_drain(QueueState& q, const ControllerParams& p) {
  const std::size_t writes = q.write_queue.size();
  if (writes >= p.drain_high || (q.read_queue.empty() && writes > 0)) {
    q.drain_mode = true;
  } else if (writes <= p.drain_low) {
    q.drain_mode = false;
  }
  return q.drain_mode;
}

namespace {

bool is_column(CommandKind k) {
  return k == CommandKind::Read || k == CommandKind::Write;
}

// True when an older request in `other` touches the same block, so a column
// command for `req` would reorder a read and a write of that block.
bool blocked_by_older(const MemoryRequest& req, const std::deque<MemoryRequest>& other) {
  return std::any_of(other.begin(), other.end(), [&](const MemoryRequest& o) {
    return o.block_address == req.block_address && o.id < req.id;
  });
}

}  // namespace

std::optional<ScheduleChoice> schedule(const QueueState& q, const ChannelState& channel,
                                       Cycle now, const DeviceContext& ctx) {
  const ProtocolKind protocol = ctx.protocol;
  const std::deque<MemoryRequest>* queues[2] = {&q.read_queue, &q.write_queue};

  // Scratch buffers reused across calls on the same thread.
  thread_local std::vector<char> keep_open;
  thread_local std::vector<CommandKind> next[2];
  keep_open.assign(channel.banks.size(), 0);
  for (int w = 0; w < 2; ++w) {
    next[w].clear();
    for (const auto& req : *queues[w]) {
      const auto& loc = req.location;
      const CommandKind k = next_command(channel.bank(loc), loc, w == 1, protocol);
      next[w].push_back(k);
      if (is_column(k) || (protocol == ProtocolKind::NVM && k == CommandKind::Activate))
        keep_open[channel.bank_index(loc.rank, loc.bank)] = 1;
    }
  }

  using Key = std::tuple<int, int, Cycle, std::uint64_t>;
  std::optional<ScheduleChoice> best;
  Key best_key{};
  for (int w = 0; w < 2; ++w) {
    const int class_rank = (w == 1) != q.drain_mode ? 1 : 0;
    for (std::size_t i = 0; i < queues[w]->size(); ++i) {
      const MemoryRequest& req = (*queues[w])[i];
      const CommandKind k = next[w][i];
      const auto& loc = req.location;
      if (k == CommandKind::Precharge &&
          keep_open[channel.bank_index(loc.rank, loc.bank)])
        continue;
      const Key key{is_column(k) ? 0 : 1, class_rank, req.enqueue_cycle, req.id};
      if (best && !(key < best_key)) continue;
      if (earliest_issue(channel, loc, k, now, ctx.timing, protocol) > now) continue;
      if (is_column(k) && blocked_by_older(req, *queues[1 - w])) continue;
      best = ScheduleChoice{Command{k, loc, now}, w == 1, i};
      best_key = key;
    }
  }
  return best;
}

Controller::Controller(std::uint32_t channel, DeviceContext ctx, ControllerParams params,
                       MemoryImage* memory, EventLog log)
    : channel_index_(channel),
      ctx_(std::move(ctx)),
      params_(params),
      memory_(memory),
      log_(log),
      channel_(ctx_.geometry) {}

// Nothing can change before the first cycle at which some queued request's
// next command becomes legal or a bank finishes activating or precharging.
// Precharges held back for open-row users wait for a column command, which
// resets the wake cycle anyway.
Cycle Controller::next_ready(Cycle now) const {
  const ProtocolKind protocol = ctx_.protocol;
  thread_local std::vector<char> keep_open;
  keep_open.assign(channel_.banks.size(), 0);
  for (int w = 0; w < 2; ++w)
    for (const auto& req : w ? queues_.write_queue : queues_.read_queue) {
      const auto& loc = req.location;
      const CommandKind k = next_command(channel_.bank(loc), loc, w == 1, protocol);
      if (is_column(k) || (protocol == ProtocolKind::NVM && k == CommandKind::Activate))
        keep_open[channel_.bank_index(loc.rank, loc.bank)] = 1;
    }
  Cycle wake = std::numeric_limits<Cycle>::max();
  for (int w = 0; w < 2; ++w)
    for (const auto& req : w ? queues_.write_queue : queues_.read_queue) {
      const auto& loc = req.location;
      const CommandKind k = next_command(channel_.bank(loc), loc, w == 1, protocol);
      if (k == CommandKind::Precharge && keep_open[channel_.bank_index(loc.rank, loc.bank)])
        continue;
      wake = std::min(wake, earliest_issue(channel_, loc, k, now, ctx_.timing, protocol));
    }
  for (const auto& b : channel_.banks) {
    if (b.phase == BankPhase::Activating) wake = std::min(wake, b.last_activate + ctx_.timing.tRCD);
    if (b.phase == BankPhase::Precharging) wake = std::min(wake, b.last_precharge + ctx_.timing.tRP);
  }
  return std::max(wake, now + 1);
}

EnqueueResult Controller::enqueue(MemoryRequest req, Cycle now) {
  req.enqueue_cycle = now;
  const Cycle forward_latency = ctx_.timing.tCL + ctx_.timing.tBURST;
  const EnqueueResult r = nvrowsim::enqueue(queues_, req, params_, forward_latency);
  if (r == EnqueueResult::Accepted) {
    // A new request only adds a candidate; the others keep their readiness.
    const auto& loc = req.location;
    const CommandKind k =
        next_command(channel_.bank(loc), loc, req.op == Op::Write, ctx_.protocol);
    wake_ = std::min(wake_, earliest_issue(channel_, loc, k, now, ctx_.timing, ctx_.protocol));
  }
  switch (r) {
    case EnqueueResult::Forwarded:
      ++stats_.forwarded_reads;
      in_flight_.push_back(req);
      break;
    case EnqueueResult::Coalesced: ++stats_.coalesced_writes; break;
    case EnqueueResult::Rejected: ++stats_.rejected; break;
    case EnqueueResult::Accepted: break;
  }
  return r;
}

bool Controller::has_room(Op op) const {
  return op == Op::Read ? queues_.read_queue.size() < params_.read_queue_capacity
                        : queues_.write_queue.size() < params_.write_queue_capacity;
}

void Controller::issue(const Command& cmd) {
  wake_ = 0;
  CommandOutcome out = apply_command(channel_, cmd, ctx_);
  ++stats_.commands[static_cast<std::size_t>(cmd.kind)];
  for (const auto& e : out.energy) {
    stats_.energy_pj[static_cast<std::size_t>(e.kind)] += e.picojoules;
    if (log_.energy) log_.energy->push_back(e);
  }
  for (const auto& w : out.wear) {
    stats_.array_bytes_written += w.bytes_written_to_array;
    ++stats_.array_block_writes;
    if (log_.wear) log_.wear->push_back(w);
  }
  if (log_.commands) log_.commands->push_back(cmd);
}

void Controller::check_starvation(Cycle now) const {
  for (const auto* q : {&queues_.read_queue, &queues_.write_queue}) {
    if (!q->empty() && now - q->front().enqueue_cycle > params_.timeout)
      throw InvariantViolation("starvation: request " + std::to_string(q->front().id) +
                               " on channel " + std::to_string(channel_index_) +
                               " waited more than " + std::to_string(params_.timeout) +
                               " cycles");
  }
}

void Controller::tick(Cycle now) {
  if (queues_.read_queue.empty() && queues_.write_queue.empty()) {
    queues_.drain_mode = false;
    return;
  }
  check_starvation(now);
  if (now < wake_) return;
  for (auto& b : channel_.banks) b.settle(now, ctx_.timing);
  update_drain(queues_, params_);

  const auto choice = schedule(queues_, channel_, now, ctx_);
  if (!choice) {
    wake_ = next_ready(now);
    return;
  }

  auto& queue = choice->from_write_queue ? queues_.write_queue : queues_.read_queue;
  MemoryRequest& req = queue[choice->index];
  const BankState& bank = channel_.bank(req.location);
  if (!req.classified) {
    switch (lookup(bank, req.location)) {
      case LookupResult::Hit: ++stats_.lookups.hits; break;
      case LookupResult::ClosedMiss: ++stats_.lookups.closed_misses; break;
      case LookupResult::Conflict: ++stats_.lookups.conflicts; break;
    }
    req.classified = true;
  }

  const Command& cmd = choice->command;
  issue(cmd);

  switch (cmd.kind) {
    case CommandKind::Read:
    case CommandKind::Write: {
      const TimingSet& t = ctx_.timing;
      if (cmd.kind == CommandKind::Read) {
        auto it = memory_->find(req.block_address);
        req.data_tag = it == memory_->end() ? 0 : it->second;
        req.completion_cycle = now + t.tCL + t.tBURST;
      } else {
        (*memory_)[req.block_address] = req.data_tag;
        req.completion_cycle = now + t.tCWL + t.tBURST;
      }
      stats_.bus_busy_cycles += static_cast<std::uint64_t>(t.tBURST);
      in_flight_.push_back(req);
      queue.erase(queue.begin() + static_cast<std::ptrdiff_t>(choice->index));
      break;
    }
    case CommandKind::Precharge:
      if (ctx_.protocol == ProtocolKind::NVM &&
          earliest_issue(channel_, req.location, CommandKind::Activate, now,
                         ctx_.timing, ctx_.protocol) == now)
        issue(Command{CommandKind::Activate, req.location, now});
      break;
    case CommandKind::Activate:
      break;
  }
}

bool Controller::close_banks(Cycle now) {
  const Geometry& g = ctx_.geometry;
  bool any_open = false;
  for (std::uint32_t i = 0; i < channel_.banks.size(); ++i) {
    BankState& b = channel_.banks[i];
    b.settle(now, ctx_.timing);
    if (!b.open_row) continue;
    any_open = true;
    PhysicalLocation loc;
    loc.channel = channel_index_;
    loc.rank = i / g.banks_per_rank;
    loc.bank = i % g.banks_per_rank;
    loc.row = *b.open_row;
    loc.segment = b.open_segment.value_or(0);
    loc.block_column = loc.segment * g.blocks_per_segment();
    if (earliest_issue(channel_, loc, CommandKind::Precharge, now, ctx_.timing,
                       ctx_.protocol) <= now) {
      issue(Command{CommandKind::Precharge, loc, now});
      return false;
    }
  }
  return !any_open;
}

std::vector<MemoryRequest> Controller::take_completed(Cycle now) {
  std::vector<MemoryRequest> done;
  auto split = std::stable_partition(in_flight_.begin(), in_flight_.end(),
                                     [now](const MemoryRequest& r) {
                                       return *r.completion_cycle > now;
                                     });
  done.assign(std::make_move_iterator(split), std::make_move_iterator(in_flight_.end()));
  in_flight_.erase(split, in_flight_.end());
  std::sort(done.begin(), done.end(), [](const auto& a, const auto& b) {
    return std::tie(*a.completion_cycle, a.id) < std::tie(*b.completion_cycle, b.id);
  });
  return done;
}

bool Controller::idle() const {
  return queues_.read_queue.empty() && queues_.write_queue.empty() && in_flight_.empty();
}

std::size_t Controller::pending() const {
  return queues_.read_queue.size() + queues_.write_queue.size() + in_flight_.size();
}

}  // namespace nvrowsim
