#include "nvrowsim/sweep.h"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <ostream>
#include <thread>

#include "nvrowsim/validator.h"

namespace nvrowsim {

unsigned sweep_threads(unsigned requested) {
  unsigned n = requested != 0 ? requested : std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("NVROWSIM_THREADS")) {
    const long cap = std::strtol(env, nullptr, 10);
    if (cap >= 1) n = std::min<unsigned>(n, static_cast<unsigned>(cap));
  }
  return n;
}

StatsReport run_experiment(const ExperimentConfig& cfg,
                           const std::vector<std::vector<TraceRecord>>& traces, bool validate,
                           std::vector<Command>* commands) {
  std::vector<Command> local;
  std::vector<Command>* log = commands ? commands : (validate ? &local : nullptr);
  EventLog events;
  events.commands = log;
  System sys(cfg.system, traces, events);
  StatsReport r = sys.run();
  if (validate) {
    const DeviceContext ctx = cfg.system.device_context();
    const auto violations = validate_commands(*log, ctx.geometry, ctx.timing, ctx.protocol);
    if (!violations.empty())
      throw InvariantViolation("timing legality: " + violations.front().rule + " at cycle " +
                               std::to_string(violations.front().cycle) + " (" +
                               std::to_string(violations.size()) + " violations)");
  }
  return r;
}

namespace {

struct Job {
  SweepRow row;
  std::vector<std::size_t> cores;  // trace indices run by this job
};

ExperimentConfig with_point(const ExperimentConfig& base, std::uint64_t buffer,
                            const std::string& tech, Mapping mapping, bool cache) {
  ExperimentConfig c = base;
  c.system.geometry.buffer_bytes_per_chip = buffer;
  c.tech_profile = tech;
  c.alpha = c.beta = c.gamma = c.delta = c.endurance = std::nullopt;
  c.protocol.reset();
  c.system.mapping = mapping;
  c.system.cache_enabled = cache;
  try {
    (void)TechnologyProfile::preset(tech);
    c.resolve();
    c.system.validate();
  } catch (const std::exception& e) {
    throw ConfigError(std::string("sweep point: ") + e.what());
  }
  return c;
}

bool same_point(const ExperimentConfig& a, Mapping m, bool cache) {
  return a.system.mapping == m && a.system.cache_enabled == cache;
}

}  // namespace

std::vector<SweepRow> run_sweep(const ExperimentConfig& base, const SweepAxes& axes,
                                const SweepOptions& options) {
  if (axes.buffer_sizes.empty() || axes.techs.empty() || axes.mappings.empty() ||
      axes.cache.empty())
    throw ConfigError("sweep: every axis needs at least one value");
  const auto traces = build_workload(base);

  std::vector<Job> jobs;
  for (Mapping m : axes.mappings) {
    for (bool cache : axes.cache) {
      const ExperimentConfig alone =
          with_point(base, base.system.geometry.row_bytes_per_chip, "dram", m, cache);
      for (std::size_t i = 0; i < traces.size(); ++i)
        jobs.push_back({{"alone", static_cast<std::uint32_t>(i), alone, {}, {}}, {i}});
    }
  }
  std::vector<std::size_t> all(traces.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  for (std::uint64_t b : axes.buffer_sizes)
    for (const auto& t : axes.techs)
      for (Mapping m : axes.mappings)
        for (bool cache : axes.cache)
          jobs.push_back({{"shared", std::nullopt, with_point(base, b, t, m, cache), {}, {}}, all});

  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (std::size_t j; (j = next.fetch_add(1)) < jobs.size();) {
      try {
        std::vector<std::vector<TraceRecord>> subset;
        for (std::size_t i : jobs[j].cores) subset.push_back(traces[i]);
        jobs[j].row.report = run_experiment(jobs[j].row.config, subset, options.validate);
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next = jobs.size();
      }
    }
  };
  const unsigned n = std::max(1u, std::min<unsigned>(options.threads, jobs.size()));
  if (n == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned i = 0; i < n; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);

  std::vector<SweepRow> rows;
  for (auto& j : jobs) rows.push_back(std::move(j.row));

  for (auto& row : rows) {
    if (row.run_kind != "shared") continue;
    std::vector<Cycle> shared = row.report.first_pass_cycles();
    std::vector<Cycle> alone(shared.size(), 0);
    for (const auto& a : rows)
      if (a.run_kind == "alone" && same_point(a.config, row.config.system.mapping,
                                              row.config.system.cache_enabled))
        alone[*a.core] = a.report.cores.at(0).first_pass_cycles;
    const bool usable = !shared.empty() &&
                        std::all_of(shared.begin(), shared.end(), [](Cycle c) { return c > 0; }) &&
                        std::all_of(alone.begin(), alone.end(), [](Cycle c) { return c > 0; });
    if (usable) row.report.weighted_speedup = weighted_speedup(shared, alone);

    for (const auto& ref : rows) {
      const auto& g = ref.config.system.geometry;
      if (ref.run_kind == "shared" && ref.config.tech_profile == "dram" &&
          g.buffer_bytes_per_chip == g.row_bytes_per_chip &&
          same_point(ref.config, row.config.system.mapping, false) &&
          ref.report.memory_writes > 0) {
        row.normalized_writes = static_cast<double>(row.report.memory_writes) /
                                static_cast<double>(ref.report.memory_writes);
        break;
      }
    }
  }
  return rows;
}

std::vector<std::string> sweep_columns() {
  std::vector<std::string> cols = {"run_kind", "core"};
  for (auto& c : config_columns()) cols.push_back(c);
  for (auto& c : metric_columns()) cols.push_back(c);
  cols.push_back("normalized_writes");
  return cols;
}

void write_csv_row(std::ostream& os, const std::vector<std::string>& cells) {
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) os << ',';
    const std::string& c = cells[i];
    if (c.find_first_of(",\"\n") == std::string::npos) {
      os << c;
      continue;
    }
    os << '"';
    for (char ch : c) {
      if (ch == '"') os << '"';
      os << ch;
    }
    os << '"';
  }
  os << '\n';
}

void write_sweep_csv(std::ostream& os, const std::vector<SweepRow>& rows) {
  write_csv_row(os, sweep_columns());
  for (const auto& r : rows) {
    std::vector<std::string> cells = {r.run_kind, r.core ? std::to_string(*r.core) : ""};
    for (auto& v : config_values(r.config)) cells.push_back(v);
    for (auto& v : metric_values(r.report)) cells.push_back(v);
    if (r.normalized_writes) {
      char buf[64];
      std::snprintf(buf, sizeof buf, "%.12g", *r.normalized_writes);
      cells.push_back(buf);
    } else {
      cells.push_back("");
    }
    write_csv_row(os, cells);
  }
}

}  // namespace nvrowsim
