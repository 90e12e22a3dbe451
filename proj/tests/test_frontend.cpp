#include <algorithm>
#include <list>
#include <map>
#include <random>

#include "doctest.h"
#include "nvrowsim/frontend.h"

using namespace nvrowsim;

namespace {

CacheParams small_cache() {
  CacheParams p;
  p.capacity_bytes = 64 * 8 * 16;  // 16 sets of 8 ways
  return p;
}

// Reference LRU cache: per set, a recency list of (block, dirty, tag).
struct RefCache {
  struct Entry {
    std::uint64_t block;
    bool dirty;
    std::uint64_t data;
  };
  std::uint64_t sets, ways, line;
  std::map<std::uint64_t, std::list<Entry>> by_set;

  CacheAccessResult access(std::uint64_t block, Op op, std::uint64_t tag) {
    CacheAccessResult r;
    auto& lst = by_set[(block / line) % sets];
    auto it = std::find_if(lst.begin(), lst.end(), [&](const Entry& e) { return e.block == block; });
    if (it != lst.end()) {
      r.hit = true;
      Entry e = *it;
      lst.erase(it);
      if (op == Op::Write) {
        e.dirty = true;
        e.data = tag;
      }
      lst.push_front(e);
      return r;
    }
    r.fill_needed = true;
    if (lst.size() == ways) {
      const Entry victim = lst.back();
      lst.pop_back();
      if (victim.dirty) {
        r.writeback = victim.block;
        r.writeback_tag = victim.data;
      }
    }
    lst.push_front({block, op == Op::Write, op == Op::Write ? tag : 0});
    return r;
  }
};

}  // namespace

TEST_CASE("repeated reads miss once then hit") {
  EdramCache c(small_cache());
  CHECK_FALSE(c.access(0x1000, Op::Read).hit);
  CHECK(c.access(0x1000, Op::Read).hit);
  CHECK(c.access(0x1000, Op::Read).hit);
  CHECK(c.hits() == 2);
  CHECK(c.misses() == 1);
}

TEST_CASE("nine blocks in one eight-way set thrash") {
  EdramCache c(small_cache());
  const std::uint64_t set_stride = 64 * c.sets();
  for (int round = 0; round < 3; ++round)
    for (std::uint64_t i = 0; i < 9; ++i) CHECK_FALSE(c.access(i * set_stride, Op::Read).hit);
  CHECK(c.hits() == 0);
  CHECK(c.writebacks() == 0);
}

TEST_CASE("evicting a dirty line produces a writeback with its data") {
  EdramCache c(small_cache());
  const std::uint64_t set_stride = 64 * c.sets();
  c.access(0, Op::Write, 42);
  for (std::uint64_t i = 1; i < 8; ++i) CHECK_FALSE(c.access(i * set_stride, Op::Read).writeback);
  const auto probe = c.probe(8 * set_stride, Op::Read);
  REQUIRE(probe.writeback);
  CHECK(c.misses() == 8);  // probe left the counters alone
  const auto r = c.access(8 * set_stride, Op::Read);
  REQUIRE(r.writeback);
  CHECK(*r.writeback == 0);
  CHECK(r.writeback_tag == 42);
  CHECK(c.writebacks() == 1);
}

TEST_CASE("flush returns dirty lines once") {
  EdramCache c(small_cache());
  c.access(0x40, Op::Write, 1);
  c.access(0x80, Op::Read);
  c.access(0xC0, Op::Write, 3);
  const auto lines = c.flush();
  REQUIRE(lines.size() == 2);
  CHECK(lines[0] == std::pair<std::uint64_t, std::uint64_t>{0x40, 1});
  CHECK(lines[1] == std::pair<std::uint64_t, std::uint64_t>{0xC0, 3});
  CHECK(c.flush().empty());
}

TEST_CASE("cache matches a reference LRU model") {
  EdramCache c(small_cache());
  RefCache ref{c.sets(), 8, 64, {}};
  std::mt19937_64 rng(11);
  for (int i = 0; i < 100000; ++i) {
    const std::uint64_t block = (rng() % 512) * 64;
    const Op op = rng() % 3 == 0 ? Op::Write : Op::Read;
    const auto got = c.access(block, op, i);
    const auto want = ref.access(block, op, i);
    REQUIRE(got.hit == want.hit);
    REQUIRE(got.writeback == want.writeback);
    if (want.writeback) REQUIRE(got.writeback_tag == want.writeback_tag);
    if (i % 997 == 0) {
      auto ranks = c.lru_ranks(block / 64 % c.sets());
      std::sort(ranks.begin(), ranks.end());
      for (std::uint32_t w = 0; w < 8; ++w) CHECK(ranks[w] == w);
    }
  }
}

TEST_CASE("default cache geometry") {
  EdramCache c;
  CHECK(c.lines() == (32u << 20) / 64);
  CHECK(c.sets() == c.lines() / 8);
}

TEST_CASE("gap is retired at ipc per core cycle") {
  const std::vector<TraceRecord> t = {{6, Op::Read, 0}};
  Core core(0, &t, CoreParams{}, false);
  int calls = 0;
  const IssueFn issue = [&](const IssueRequest&) {
    ++calls;
    return IssueOutcome::Outstanding;
  };
  CHECK(core.core_cycle(0, issue));
  CHECK(calls == 0);
  CHECK(core.core_cycle(0, issue));
  CHECK(calls == 1);
  CHECK(core.state().completed_instructions == 7);
}

TEST_CASE("miss buffers cap outstanding reads") {
  std::vector<TraceRecord> t(20, {0, Op::Read, 0});
  Core core(0, &t, CoreParams{}, false);
  int calls = 0;
  const IssueFn issue = [&](const IssueRequest&) {
    ++calls;
    return IssueOutcome::Outstanding;
  };
  core.step(0, issue);
  CHECK(calls == 8);
  core.step(1, issue);
  CHECK(calls == 8);
  core.on_read_complete(2, true);
  core.step(2, issue);
  CHECK(calls == 9);
}

TEST_CASE("zero-gap writes issue one per core cycle") {
  std::vector<TraceRecord> t(25, {0, Op::Write, 0});
  Core core(0, &t, CoreParams{}, false);
  int calls = 0;
  const IssueFn issue = [&](const IssueRequest&) {
    ++calls;
    return IssueOutcome::Done;
  };
  core.step(0, issue);
  CHECK(calls == 10);
  core.step(1, issue);
  core.step(2, issue);
  CHECK(calls == 25);
  CHECK(core.state().done);
  CHECK(core.state().cycles_elapsed == 3);
}

TEST_CASE("stalled issue retries the same record") {
  const std::vector<TraceRecord> t = {{0, Op::Write, 0x40}, {0, Op::Write, 0x80}};
  Core core(0, &t, CoreParams{}, false);
  std::vector<std::uint64_t> seen;
  bool refuse = true;
  const IssueFn issue = [&](const IssueRequest& r) {
    seen.push_back(r.record.address);
    return refuse ? IssueOutcome::Stalled : IssueOutcome::Done;
  };
  core.step(0, issue);
  CHECK(seen == std::vector<std::uint64_t>{0x40});
  refuse = false;
  core.step(1, issue);
  CHECK(seen == std::vector<std::uint64_t>{0x40, 0x40, 0x80});
}

TEST_CASE("replay waits for the first pass and is not counted") {
  const std::vector<TraceRecord> t = {{0, Op::Read, 0x40}};
  Core core(0, &t, CoreParams{}, true);
  std::vector<IssueRequest> seen;
  const IssueFn issue = [&](const IssueRequest& r) {
    seen.push_back(r);
    return IssueOutcome::Outstanding;
  };
  core.step(0, issue);
  CHECK(seen.size() == 1);
  core.step(1, issue);
  CHECK(seen.size() == 1);  // first-pass read still outstanding
  core.on_read_complete(5, true);
  CHECK(core.state().done);
  CHECK(core.state().cycles_elapsed == 5);
  core.step(6, issue);
  // Replay fills every miss buffer with repeats of the one record.
  REQUIRE(seen.size() == 9);
  CHECK_FALSE(seen[1].first_pass);
  CHECK(seen[1].pass == 1);
  CHECK(seen[8].pass == 8);
  CHECK(core.state().requests == 1);
  core.stop();
  core.on_read_complete(7, false);
  core.step(8, issue);
  CHECK(seen.size() == 9);
}
