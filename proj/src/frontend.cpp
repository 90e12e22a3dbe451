#include "nvrowsim/frontend.h"

#include <algorithm>
#include <stdexcept>

namespace nvrowsim {

EdramCache::EdramCache(CacheParams p) : p_(p) {
  if (p_.line_bytes == 0 || p_.ways == 0 || p_.capacity_bytes % p_.line_bytes != 0)
    throw std::invalid_argument("cache: capacity must be a multiple of the line size");
  const std::uint64_t lines = p_.capacity_bytes / p_.line_bytes;
  if (lines % p_.ways != 0 || lines == 0)
    throw std::invalid_argument("cache: line count must be a multiple of the associativity");
  sets_ = lines / p_.ways;
  lines_.resize(lines);
  for (std::uint64_t s = 0; s < sets_; ++s)
    for (std::uint32_t w = 0; w < p_.ways; ++w) lines_[s * p_.ways + w].lru_rank = w;
}

std::optional<std::uint32_t> EdramCache::find(std::uint64_t set, std::uint64_t tag) const {
  for (std::uint32_t w = 0; w < p_.ways; ++w) {
    const Line& l = lines_[set * p_.ways + w];
    if (l.valid && l.tag == tag) return w;
  }
  return std::nullopt;
}

std::uint32_t EdramCache::victim(std::uint64_t set) const {
  std::uint32_t lru = 0;
  for (std::uint32_t w = 0; w < p_.ways; ++w) {
    const Line& l = lines_[set * p_.ways + w];
    if (!l.valid) return w;
    if (l.lru_rank > lines_[set * p_.ways + lru].lru_rank) lru = w;
  }
  return lru;
}

void EdramCache::touch(std::uint64_t set, std::uint32_t way) {
  Line* base = &lines_[set * p_.ways];
  const std::uint32_t rank = base[way].lru_rank;
  for (std::uint32_t w = 0; w < p_.ways; ++w)
    if (base[w].lru_rank < rank) ++base[w].lru_rank;
  base[way].lru_rank = 0;
}

CacheAccessResult EdramCache::probe(std::uint64_t block_address, Op op) const {
  (void)op;
  const std::uint64_t set = set_of(block_address);
  CacheAccessResult r;
  if (find(set, tag_of(block_address))) {
    r.hit = true;
    return r;
  }
  r.fill_needed = true;
  const Line& v = lines_[set * p_.ways + victim(set)];
  if (v.valid && v.dirty) {
    r.writeback = (v.tag * sets_ + set) * p_.line_bytes;
    r.writeback_tag = v.data_tag;
  }
  return r;
}

CacheAccessResult EdramCache::access(std::uint64_t block_address, Op op,
                                     std::uint64_t write_tag) {
  const std::uint64_t set = set_of(block_address);
  CacheAccessResult r = probe(block_address, op);
  std::uint32_t way;
  if (r.hit) {
    ++hits_;
    way = *find(set, tag_of(block_address));
  } else {
    ++misses_;
    if (r.writeback) ++writebacks_;
    way = victim(set);
    Line& l = lines_[set * p_.ways + way];
    l.valid = true;
    l.dirty = false;
    l.tag = tag_of(block_address);
    l.data_tag = 0;
  }
  Line& l = lines_[set * p_.ways + way];
  if (op == Op::Write) {
    l.dirty = true;
    l.data_tag = write_tag;
  }
  touch(set, way);
  return r;
}

std::vector<std::pair<std::uint64_t, std::uint64_t>> EdramCache::flush() {
  std::vector<std::pair<std::uint64_t, std::uint64_t>> out;
  for (std::uint64_t s = 0; s < sets_; ++s) {
    for (std::uint32_t w = 0; w < p_.ways; ++w) {
      Line& l = lines_[s * p_.ways + w];
      if (l.valid && l.dirty) {
        out.emplace_back((l.tag * sets_ + s) * p_.line_bytes, l.data_tag);
        l.dirty = false;
      }
    }
  }
  return out;
}

std::vector<std::uint32_t> EdramCache::lru_ranks(std::uint64_t set) const {
  std::vector<std::uint32_t> ranks;
  for (std::uint32_t w = 0; w < p_.ways; ++w) ranks.push_back(lines_[set * p_.ways + w].lru_rank);
  return ranks;
}

Core::Core(std::uint32_t id, const std::vector<TraceRecord>* trace, CoreParams params,
           bool replay)
    : id_(id), trace_(trace), params_(params), replay_(replay) {
  if (params_.ipc_max == 0 || params_.clock_ratio == 0)
    throw std::invalid_argument("core: ipc_max and clock_ratio must be positive");
  if (trace_->empty()) {
    state_.done = true;
  } else {
    state_.gap_remaining = (*trace_)[0].gap;
  }
}

bool Core::finished_issuing() const {
  if (trace_->empty()) return true;
  if (state_.stopped) return true;
  return state_.pass > 0 && !replay_;
}

void Core::mark_done_if_complete(Cycle now) {
  if (!state_.done && state_.pass > 0 && state_.first_pass_outstanding == 0) {
    state_.done = true;
    state_.cycles_elapsed = now + 1;
  }
}

bool Core::core_cycle(Cycle now, const IssueFn& issue) {
  if (finished_issuing()) return false;
  // Replay starts only once the first pass has fully completed.
  if (state_.pass > 0 && !state_.done) return false;
  if (state_.gap_remaining > 0) {
    const std::uint64_t n = std::min<std::uint64_t>(params_.ipc_max, state_.gap_remaining);
    state_.gap_remaining -= n;
    if (state_.pass == 0) state_.completed_instructions += n;
    if (state_.gap_remaining > 0) return true;
  }

  const TraceRecord& rec = (*trace_)[state_.cursor];
  if (rec.op == Op::Read && state_.outstanding_reads >= params_.miss_buffers) return false;

  const bool first = state_.pass == 0;
  const IssueOutcome outcome = issue({id_, rec, state_.cursor, state_.pass, first});
  if (outcome == IssueOutcome::Stalled) return false;
  if (outcome == IssueOutcome::Outstanding) {
    ++state_.outstanding_reads;
    if (first) ++state_.first_pass_outstanding;
  }
  if (first) {
    ++state_.requests;
    ++(rec.op == Op::Read ? state_.reads : state_.writes);
    ++state_.completed_instructions;
  }

  if (++state_.cursor == trace_->size()) {
    state_.cursor = 0;
    ++state_.pass;
    mark_done_if_complete(now);
  }
  state_.gap_remaining = (*trace_)[state_.cursor].gap;
  return true;
}

void Core::step(Cycle now, const IssueFn& issue) {
  const bool was_done = state_.done;
  for (std::uint32_t c = 0; c < params_.clock_ratio; ++c) {
    if (!core_cycle(now, issue)) break;
    // Replay begins on the next memory cycle.
    if (state_.done && !was_done) break;
  }
}

void Core::on_read_complete(Cycle now, bool first_pass) {
  if (state_.outstanding_reads == 0)
    throw InvariantViolation("core " + std::to_string(id_) + ": read completion without a miss buffer");
  --state_.outstanding_reads;
  if (first_pass) {
    --state_.first_pass_outstanding;
    // A read returning at `now` ends its burst at the start of `now`.
    if (!state_.done && state_.pass > 0 && state_.first_pass_outstanding == 0) {
      state_.done = true;
      state_.cycles_elapsed = now;
    }
  }
}

}  // namespace nvrowsim
