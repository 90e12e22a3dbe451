// Acceptance run: one PASS/FAIL line per criterion, exit status 1 on any FAIL.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <list>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>

#include "nvrowsim/config.h"
#include "nvrowsim/simulator.h"
#include "nvrowsim/sweep.h"
#include "nvrowsim/validator.h"

using namespace nvrowsim;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok && pass) {
      pass = false;
      detail = what;
    }
  }
};

std::string fmt(const char* f, double a, double b = 0, double c = 0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c);
  return buf;
}

std::int64_t ceil_div(std::int64_t num, std::int64_t den) { return (num + den - 1) / den; }

SystemConfig base(const TechnologyProfile& p, std::uint64_t buffer, std::uint32_t cores) {
  SystemConfig c;
  c.tech = p;
  c.geometry.buffer_bytes_per_chip = buffer;
  c.cores = cores;
  return c;
}

std::vector<TraceRecord> gen(GeneratorKind kind, std::uint64_t length, std::uint64_t footprint,
                             std::uint64_t base_addr, std::uint64_t seed,
                             double read_fraction = 1.0, double gap = 0.0) {
  GeneratorSpec s;
  s.kind = kind;
  s.length = length;
  s.footprint_bytes = footprint;
  s.base_address = base_addr;
  s.seed = seed;
  s.read_fraction = read_fraction;
  s.gap_mean = gap;
  return generate(s);
}

const std::uint64_t kPart = 256ull << 20;  // per-core slice of the 2 GiB space

Outcome timing_table() {
  Outcome o;
  const TimingSet d = derive_timing(TechnologyProfile::dram(), 1024, 1024);
  o.require(d.tRCD == 8 && d.tWR == 8 && d.tRRD == 4 && d.tFAW == 20 && d.tRP == 8 &&
                d.tRTP == 4,
            "DRAM column differs");
  std::mt19937_64 rng(2024);
  for (int i = 0; i < 20; ++i) {
    // Ratios in hundredths keep the oracle in integer arithmetic.
    const std::int64_t a = 50 + rng() % 1950, g = 50 + rng() % 1950, dl = 50 + rng() % 1950;
    const std::int64_t md = 8ll << (rng() % 8);
    TechnologyProfile p{"x", a / 100.0, 1.0, g / 100.0, dl / 100.0, 1e8, ProtocolKind::NVM};
    const TimingSet t = derive_timing(p, md, 1024);
    const bool ok = t.tRCD == ceil_div(8 * g, 100) && t.tWR == ceil_div(8 * dl, 100) &&
                    t.tRRD == std::max<std::int64_t>(1, ceil_div(4 * a * md, 100 * 1024)) &&
                    t.tFAW == std::max<std::int64_t>(1, ceil_div(20 * a * md, 100 * 1024)) &&
                    t.tRP == 0 && t.tRTP == 0;
    o.require(ok, "NVM tuple " + std::to_string(i) + " differs");
  }
  o.detail = o.pass ? "DRAM column and 20 NVM tuples exact" : o.detail;
  return o;
}

Outcome energy_table_check() {
  Outcome o;
  std::mt19937_64 rng(77);
  for (int i = 0; i < 20; ++i) {
    TechnologyProfile p = rng() % 2 ? TechnologyProfile::pcm() : TechnologyProfile::dram();
    if (p.protocol == ProtocolKind::NVM) {
      p.alpha = 1 + double(rng() % 40) / 4;
      p.beta = 1 + double(rng() % 400) / 4;
    }
    const EnergyTable t = energy_table(p);
    const auto kind = static_cast<EnergyKind>(rng() % 4);
    const std::uint64_t bits = 512 * (1 + rng() % 128);
    const bool nvm = p.protocol == ProtocolKind::NVM;
    double per_bit = 0;
    switch (kind) {
      case EnergyKind::Activate: per_bit = nvm ? 0.3 * p.alpha : 0.3; break;
      case EnergyKind::Read: per_bit = 19.0; break;
      case EnergyKind::Write: per_bit = 24.2; break;
      case EnergyKind::ArrayWrite: per_bit = nvm ? 0.3 * p.beta : 0.3; break;
    }
    o.require(command_energy(t, kind, bits) == per_bit * double(bits),
              "case " + std::to_string(i) + " differs");
  }
  if (o.pass) o.detail = "20 randomized cases exact";
  return o;
}

Cycle isolated_latency(const TechnologyProfile& p, AccessScenario s, bool write) {
  const DeviceContext ctx = base(p, 1024, 1).device_context();
  MemoryImage mem;
  Controller c(0, ctx, ControllerParams{}, &mem);
  std::uint64_t id = 0;
  auto make = [&](Op op, std::uint64_t row, std::uint32_t col) {
    MemoryRequest r;
    r.id = id++;
    r.op = op;
    r.location.bank = 2;
    r.location.row = row;
    r.location.block_column = col;
    r.location.segment = col / ctx.geometry.blocks_per_segment();
    r.block_address = encode_address(r.location, ctx.geometry, Mapping::RowInterleaved);
    return r;
  };
  auto run = [&](Cycle from) -> Cycle {
    for (Cycle now = from; now < from + 10000; ++now) {
      c.tick(now);
      for (const auto& r : c.take_completed(now)) return *r.completion_cycle - from;
    }
    return -1;
  };
  if (s != AccessScenario::ClosedMiss) {
    c.enqueue(make(Op::Read, 5, 0), 0);
    run(0);
  }
  c.enqueue(make(write ? Op::Write : Op::Read, s == AccessScenario::Conflict ? 6 : 5, 9), 1000);
  return run(1000);
}

Outcome closed_form_latency() {
  Outcome o;
  int checked = 0;
  for (const auto& p : {TechnologyProfile::dram(), TechnologyProfile::sttram()}) {
    const TimingSet t = derive_timing(p, 1024, 1024);
    for (AccessScenario s :
         {AccessScenario::Hit, AccessScenario::ClosedMiss, AccessScenario::Conflict})
      for (bool w : {false, true}) {
        const Cycle got = isolated_latency(p, s, w);
        const Cycle want = service_latency_closed_form(s, w, t, p.protocol);
        o.require(got == want, p.name + " scenario " + std::to_string(int(s)) + " write=" +
                                   std::to_string(w) + ": " + std::to_string(got) + " vs " +
                                   std::to_string(want));
        ++checked;
      }
  }
  const Cycle dram = isolated_latency(TechnologyProfile::dram(), AccessScenario::Conflict, false);
  const Cycle stt = isolated_latency(TechnologyProfile::sttram(), AccessScenario::Conflict, false);
  o.require(dram == 28, "DRAM read conflict " + std::to_string(dram));
  o.require(stt == 20, "STT-RAM read conflict " + std::to_string(stt));
  o.require(dram - stt == 8, "difference is not tRP");
  if (o.pass)
    o.detail = std::to_string(checked) + " stepped cases exact; read conflict DRAM 28, STT-RAM 20";
  return o;
}

Outcome timing_fuzz() {
  Outcome o;
  std::mt19937_64 rng(31337);
  std::ostringstream summary;
  for (const auto& p : {TechnologyProfile::dram(), TechnologyProfile::pcm(),
                        TechnologyProfile::sttram()}) {
    std::uint64_t commands = 0;
    int run = 0;
    while (commands < 100000) {
      const std::uint64_t buf = 8ull << (run % 8);
      SystemConfig cfg = base(p, buf, 8);
      cfg.mapping = run % 2 ? Mapping::BlockInterleaved : Mapping::RowInterleaved;
      std::vector<std::vector<TraceRecord>> traces;
      for (std::uint32_t c = 0; c < 8; ++c) {
        const auto kind = static_cast<GeneratorKind>(rng() % 4);
        GeneratorSpec s;
        s.kind = kind;
        s.length = 1500;
        s.footprint_bytes = 1ull << (16 + rng() % 10);
        s.base_address = c * kPart;
        s.seed = rng();
        s.read_fraction = 0.5 + double(rng() % 50) / 100;
        s.gap_mean = double(rng() % 10);
        s.stride = 64ull << (rng() % 8);
        traces.push_back(generate(s));
      }
      std::vector<Command> cmds;
      simulate(cfg, traces, EventLog{&cmds});
      const auto v = validate_commands(cmds, cfg.geometry, cfg.device_context().timing,
                                       p.protocol);
      o.require(v.empty(), p.name + ": " + (v.empty() ? "" : v.front().rule));
      commands += cmds.size();
      ++run;
    }
    summary << p.name << " " << commands << " ";
  }
  if (o.pass) o.detail = "zero violations over commands: " + summary.str();
  return o;
}

Outcome hit_rate_oracle() {
  Outcome o;
  const auto stream = gen(GeneratorKind::Stream, 128 * 32, 128 * 32 * 64, 0, 1);
  const StatsReport full = simulate(base(TechnologyProfile::dram(), 1024, 1), {stream});
  o.require(full.row_buffer.hits * 128 == full.row_buffer.total() * 127,
            fmt("1KB stream hit rate %.6f", full.hit_rate()));
  double prev = -1;
  for (std::uint64_t buf = 8; buf <= 1024; buf *= 2) {
    const double h = simulate(base(TechnologyProfile::pcm(), buf, 1), {stream}).hit_rate();
    o.require(h >= prev, fmt("hit rate falls at %.0fB", double(buf)));
    prev = h;
  }
  int points = 0;
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    std::vector<std::vector<TraceRecord>> mix;
    for (std::uint32_t c = 0; c < 8; ++c)
      mix.push_back(gen(c < 6 ? GeneratorKind::Stream : GeneratorKind::Random, 4000, 1 << 22,
                        c * kPart, seed * 100 + c, 1.0, 5));
    for (std::uint64_t buf = 8; buf <= 1024; buf *= 2) {
      SystemConfig cfg = base(TechnologyProfile::dram(), buf, 8);
      const double row = simulate(cfg, mix).hit_rate();
      cfg.mapping = Mapping::BlockInterleaved;
      const double block = simulate(cfg, mix).hit_rate();
      o.require(row >= block, fmt("row %.4f < block %.4f at %.0fB", row, block, double(buf)));
      ++points;
    }
  }
  if (o.pass)
    o.detail = "127/128 exact; monotone over 8..1024B; row >= block at " +
               std::to_string(points) + " mix points";
  return o;
}

Outcome energy_direction() {
  Outcome o;
  std::vector<std::vector<TraceRecord>> mix, mix_w;
  for (std::uint32_t c = 0; c < 8; ++c) {
    const auto kind = c % 2 ? GeneratorKind::Random : GeneratorKind::Stream;
    mix.push_back(gen(kind, 4000, 1 << 24, c * kPart, 500 + c, 1.0, 10));
    mix_w.push_back(gen(kind, 4000, 1 << 24, c * kPart, 500 + c, 0.7, 10));
  }
  std::ostringstream info;
  for (Mapping m : {Mapping::RowInterleaved, Mapping::BlockInterleaved}) {
    SystemConfig dram = base(TechnologyProfile::dram(), 1024, 8);
    dram.mapping = m;
    const double e_dram = simulate(dram, mix).energy.total;
    for (const auto& p : {TechnologyProfile::pcm(), TechnologyProfile::sttram()}) {
      SystemConfig nvm = base(p, 64, 8);
      nvm.mapping = m;
      const double e = simulate(nvm, mix).energy.total;
      o.require(e < e_dram, p.name + fmt(" at 64B uses %.4g pJ vs DRAM %.4g", e, e_dram));
      if (m == Mapping::RowInterleaved) info << p.name << fmt(" saves %.1f%% ", 100 * (1 - e / e_dram));
      SystemConfig tiny = base(p, 8, 8);
      tiny.mapping = m;
      const double tf = simulate(tiny, mix).energy.transfer_fraction;
      o.require(tf > 0.9, p.name + fmt(" transfer fraction %.4f at 8B", tf));
    }
  }
  // Informational: with writes, PCM array writes (0.3 beta per bit) outweigh
  // the 0.9 transfer bound.
  const double tf_w = simulate(base(TechnologyProfile::pcm(), 8, 8), mix_w).energy.transfer_fraction;
  if (o.pass)
    o.detail = "read-only mix, row mapping: " + info.str() +
               fmt("; info: PCM transfer fraction with 30%% writes %.3f", tf_w);
  return o;
}

Outcome lifetime() {
  Outcome o;
  const double gib = 1024.0 * 1024 * 1024;
  const double y = lifetime_years(2 * gib, 1e8, 60 * gib, 60);
  o.require(std::abs(y - 6.34) <= 0.01, fmt("lifetime %.4f years", y));

  ExperimentConfig cfg = load_config(std::string(NVROWSIM_SOURCE_DIR) + "/data/default.ini");
  SweepAxes axes;
  for (std::uint64_t b = 8; b <= 1024; b *= 2) axes.buffer_sizes.push_back(b);
  axes.techs = {"pcm", "sttram"};
  axes.mappings = {Mapping::RowInterleaved, Mapping::BlockInterleaved};
  axes.cache = {false, true};
  SweepOptions opt;
  opt.threads = sweep_threads();
  const auto rows = run_sweep(cfg, axes, opt);
  int meets = 0, flagged = 0;
  for (const auto& r : rows) {
    if (r.run_kind != "shared") continue;
    const StatsReport& s = r.report;
    o.require(s.lifetime_years.has_value(), "NVM point without lifetime");
    if (!s.lifetime_years) continue;
    if (*s.lifetime_years >= s.lifetime_floor_years) {
      o.require(!s.flagged_write_rate, "point meets floor but is flagged");
      ++meets;
    } else {
      o.require(s.flagged_write_rate && *s.flagged_write_rate == s.array_write_bytes_per_second,
                "point below floor without flagged write rate");
      ++flagged;
    }
  }
  if (o.pass)
    o.detail = fmt("6.34 check %.4f; sweep points >= 5y: ", y) + std::to_string(meets) +
               ", flagged: " + std::to_string(flagged);
  return o;
}

Outcome cache_filter() {
  Outcome o;
  // Each block written four times, spaced so the blocks leave the row buffer.
  std::vector<TraceRecord> t;
  std::mt19937_64 rng(3);
  std::vector<std::uint64_t> blocks;
  for (int i = 0; i < 2000; ++i) blocks.push_back((rng() % (1u << 20)) * 64);
  std::sort(blocks.begin(), blocks.end());
  blocks.erase(std::unique(blocks.begin(), blocks.end()), blocks.end());
  for (int round = 0; round < 4; ++round) {
    std::shuffle(blocks.begin(), blocks.end(), rng);
    for (auto b : blocks) t.push_back({5, Op::Write, b});
  }
  SystemConfig cfg = base(TechnologyProfile::pcm(), 64, 1);
  const StatsReport off = simulate(cfg, {t});
  cfg.cache_enabled = true;
  const StatsReport on = simulate(cfg, {t});
  o.require(on.array_block_writes < off.array_block_writes,
            fmt("array writes %.0f with cache vs %.0f without", double(on.array_block_writes),
                double(off.array_block_writes)));

  // Reference LRU: per-set recency lists.
  CacheParams cp;
  EdramCache cache(cp);
  std::map<std::uint64_t, std::list<std::pair<std::uint64_t, bool>>> ref;
  std::mt19937_64 r2(9);
  std::uint64_t mismatches = 0;
  for (int i = 0; i < 100000; ++i) {
    // Confine accesses to 64 sets so evictions are frequent.
    const std::uint64_t set = r2() % 64, tag = r2() % 12;
    const std::uint64_t block = (tag * cache.sets() + set) * 64;
    const Op op = r2() % 3 ? Op::Read : Op::Write;
    const auto got = cache.access(block, op, i);
    auto& lst = ref[set];
    auto it = std::find_if(lst.begin(), lst.end(), [&](auto& e) { return e.first == block; });
    bool hit = it != lst.end();
    std::optional<std::uint64_t> wb;
    bool dirty = op == Op::Write;
    if (hit) {
      dirty |= it->second;
      lst.erase(it);
    } else if (lst.size() == 8) {
      if (lst.back().second) wb = lst.back().first;
      lst.pop_back();
    }
    lst.push_front({block, dirty});
    mismatches += got.hit != hit || got.writeback != wb;
  }
  o.require(mismatches == 0, std::to_string(mismatches) + " LRU mismatches");
  if (o.pass)
    o.detail = fmt("array writes %.0f -> %.0f (%.1f%% fewer); LRU matches on 1e5 accesses",
                   double(off.array_block_writes), double(on.array_block_writes),
                   100.0 * (1 - double(on.array_block_writes) / double(off.array_block_writes)));
  return o;
}

Outcome area() {
  Outcome o;
  for (std::uint64_t b = 8; b <= 512; b *= 2)
    o.require(area_feasibility(b, 1024).feasible, fmt("%.0fB reported infeasible", double(b)));
  o.require(!area_feasibility(1024, 1024).feasible, "1024B reported feasible");
  if (o.pass) o.detail = "feasible for 8..512B, infeasible at 1024B";
  return o;
}

Outcome determinism_and_coalescing() {
  Outcome o;
  ExperimentConfig cfg = load_config(std::string(NVROWSIM_SOURCE_DIR) + "/data/default.ini");
  const auto traces = build_workload(cfg);
  std::vector<Command> a, b;
  const std::string ja = to_json(run_experiment(cfg, traces, false, &a)).dump();
  const std::string jb = to_json(run_experiment(cfg, traces, false, &b)).dump();
  o.require(ja == jb, "reports differ between runs");
  o.require(a == b, "command streams differ between runs");

  std::mt19937_64 rng(404);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<TraceRecord> t;
    for (int i = 0; i < 80; ++i)
      t.push_back({rng() % 3, rng() % 2 ? Op::Read : Op::Write,
                   (rng() % 5) * 64 + (rng() % 3) * (1ull << 21)});
    MemoryImage flat;
    for (std::uint64_t i = 0; i < t.size(); ++i)
      if (t[i].op == Op::Write) flat[t[i].address] = write_tag(0, 0, i);
    for (bool coalesce : {true, false}) {
      SystemConfig sc = base(trial % 2 ? TechnologyProfile::pcm() : TechnologyProfile::dram(),
                             trial % 3 ? 64 : 1024, 1);
      sc.controller.coalescing = coalesce;
      MemoryImage mem;
      simulate(sc, {t}, {}, &mem);
      o.require(mem == flat, "trial " + std::to_string(trial) + " coalescing=" +
                                 std::to_string(coalesce) + " differs from flat memory");
    }
  }
  if (o.pass) o.detail = "byte-identical reports; 100 toy traces match flat memory";
  return o;
}

}  // namespace

int main() {
  struct Criterion {
    const char* name;
    std::function<Outcome()> check;
    double budget_secs;
  };
  const std::vector<Criterion> criteria = {
      {"timing table", timing_table, 1},
      {"energy table", energy_table_check, 1},
      {"closed-form latency", closed_form_latency, 5},
      {"timing legality fuzz", timing_fuzz, 60},
      {"hit-rate oracle", hit_rate_oracle, 120},
      {"energy direction", energy_direction, 120},
      {"lifetime", lifetime, 10},
      {"cache filter", cache_filter, 60},
      {"area feasibility", area, 1},
      {"determinism and coalescing", determinism_and_coalescing, 60},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].check();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("exception: ") + e.what();
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (secs > criteria[i].budget_secs) {
      o.pass = false;
      o.detail += fmt("; over the %.0fs budget", criteria[i].budget_secs);
    }
    std::printf("%s %2zu %-28s %6.2fs  %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].name,
                secs, o.detail.c_str());
    failed += !o.pass;
  }
  return failed == 0 ? 0 : 1;
}
