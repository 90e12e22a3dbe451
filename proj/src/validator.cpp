#include "nvrowsim/validator.h"

#include <array>
#include <functional>
#include <map>
#include <optional>
#include <tuple>

namespace nvrowsim {

namespace {

enum class Scope { Bank, Rank, Channel };

struct Rule {
  CommandKind from;
  CommandKind to;
  Scope scope;
  const char* name;
  std::function<int(const TimingSet&)> gap;
  bool dram_only = false;
};

std::vector<Rule> rule_table() {
  using K = CommandKind;
  return {
      {K::Activate, K::Read, Scope::Bank, "tRCD A->R", [](auto& t) { return t.tRCD; }},
      {K::Activate, K::Write, Scope::Bank, "tRCD A->W", [](auto& t) { return t.tRCD; }},
      {K::Write, K::Precharge, Scope::Bank, "tWR W->P",
       [](auto& t) { return t.tCWL + t.tBURST + t.tWR; }},
      {K::Activate, K::Activate, Scope::Rank, "tRRD A->A", [](auto& t) { return t.tRRD; }},
      {K::Precharge, K::Activate, Scope::Bank, "tRP P->A", [](auto& t) { return t.tRP; }},
      {K::Read, K::Precharge, Scope::Bank, "tRTP R->P", [](auto& t) { return t.tRTP; }},
      {K::Activate, K::Precharge, Scope::Bank, "tRAS A->P",
       [](auto& t) { return t.enforce_tras ? t.tRAS : 0; }, true},
      {K::Read, K::Read, Scope::Channel, "tCCD R->R", [](auto& t) { return t.tCCD; }},
      {K::Write, K::Write, Scope::Channel, "tCCD W->W", [](auto& t) { return t.tCCD; }},
      {K::Write, K::Read, Scope::Rank, "tWTR W->R",
       [](auto& t) { return t.tCWL + t.tBURST + t.tWTR; }},
  };
}

using ScopeKey = std::tuple<int, std::uint32_t, std::uint32_t, std::uint32_t>;

ScopeKey scope_key(Scope s, const PhysicalLocation& l) {
  switch (s) {
    case Scope::Bank: return {0, l.channel, l.rank, l.bank};
    case Scope::Rank: return {1, l.channel, l.rank, 0};
    case Scope::Channel: return {2, l.channel, 0, 0};
  }
  return {};
}

struct ReplayBank {
  std::optional<std::uint64_t> row;
  std::optional<std::uint32_t> segment;
  std::optional<std::uint64_t> latched;
};

}  // namespace

std::vector<Violation> validate_commands(const std::vector<Command>& commands,
                                         const Geometry& g, const TimingSet& t,
                                         ProtocolKind protocol) {
  const auto rules = rule_table();
  std::vector<Violation> out;
  auto flag = [&](std::size_t i, const std::string& rule) {
    out.push_back({i, commands[i].cycle, rule});
  };

  std::map<std::pair<ScopeKey, CommandKind>, Cycle> last;
  std::map<std::tuple<std::uint32_t, std::uint32_t, std::uint32_t>, ReplayBank> banks;
  std::map<std::pair<std::uint32_t, std::uint32_t>, std::vector<Cycle>> rank_acts;
  std::map<std::uint32_t, std::vector<std::pair<Cycle, Cycle>>> bursts;
  std::map<std::uint32_t, std::vector<std::size_t>> bus_slot;  // channel -> indices at current cycle
  std::map<std::uint32_t, Cycle> bus_cycle;
  std::map<std::uint32_t, Cycle> channel_clock;

  for (std::size_t i = 0; i < commands.size(); ++i) {
    const Command& c = commands[i];
    const PhysicalLocation& l = c.location;

    if (l.channel >= g.channels || l.rank >= g.ranks_per_channel ||
        l.bank >= g.banks_per_rank || l.row >= g.rows_per_bank ||
        l.block_column >= g.blocks_per_row()) {
      flag(i, "location out of range");
      continue;
    }
    if (auto it = channel_clock.find(l.channel);
        it != channel_clock.end() && c.cycle < it->second)
      flag(i, "commands out of cycle order");
    channel_clock[l.channel] = c.cycle;

    // Command bus: one slot per cycle, except an NVM PRE->ACT address pair to
    // the same bank.
    auto& slot = bus_slot[l.channel];
    if (bus_cycle.count(l.channel) == 0 || bus_cycle[l.channel] != c.cycle) {
      slot.clear();
      bus_cycle[l.channel] = c.cycle;
    }
    slot.push_back(i);
    if (slot.size() == 2) {
      const Command& first = commands[slot[0]];
      const bool pair = protocol == ProtocolKind::NVM &&
                        first.kind == CommandKind::Precharge &&
                        c.kind == CommandKind::Activate &&
                        first.location.rank == l.rank && first.location.bank == l.bank;
      if (!pair) flag(i, "command bus: two commands in one cycle");
    } else if (slot.size() > 2) {
      flag(i, "command bus: more than two commands in one cycle");
    }

    for (const Rule& r : rules) {
      if (r.to != c.kind) continue;
      if (r.dram_only && protocol != ProtocolKind::DRAM) continue;
      auto it = last.find({scope_key(r.scope, l), r.from});
      if (it == last.end()) continue;
      const int gap = r.gap(t);
      if (c.cycle - it->second < gap)
        flag(i, std::string(r.name) + " (" + std::to_string(c.cycle - it->second) +
                    " < " + std::to_string(gap) + ")");
    }

    ReplayBank& bank = banks[{l.channel, l.rank, l.bank}];
    switch (c.kind) {
      case CommandKind::Activate: {
        if (protocol == ProtocolKind::DRAM) {
          if (bank.row) flag(i, "ACT to open bank");
        } else if (bank.latched != l.row) {
          flag(i, "NVM ACT without matching latched row");
        }
        bank.row = l.row;
        bank.segment = l.segment;
        bank.latched.reset();
        auto& acts = rank_acts[{l.channel, l.rank}];
        acts.push_back(c.cycle);
        int in_window = 0;
        for (auto a = acts.rbegin(); a != acts.rend() && c.cycle - *a < t.tFAW; ++a)
          ++in_window;
        if (in_window > 4) flag(i, "tFAW: more than four ACTs in window");
        break;
      }
      case CommandKind::Precharge:
        if (protocol == ProtocolKind::DRAM) {
          if (!bank.row) flag(i, "PRE to closed bank");
        } else {
          bank.latched = l.row;
        }
        bank.row.reset();
        bank.segment.reset();
        break;
      case CommandKind::Read:
      case CommandKind::Write: {
        if (bank.row != l.row || bank.segment != l.segment)
          flag(i, "column command to a segment that is not open");
        const Cycle start =
            c.cycle + (c.kind == CommandKind::Read ? t.tCL : t.tCWL);
        const Cycle end = start + t.tBURST;
        auto& bs = bursts[l.channel];
        for (std::size_t k = bs.size() > 16 ? bs.size() - 16 : 0; k < bs.size(); ++k)
          if (start < bs[k].second && bs[k].first < end)
            flag(i, "data bus: overlapping bursts");
        bs.emplace_back(start, end);
        break;
      }
    }

    for (Scope s : {Scope::Bank, Scope::Rank, Scope::Channel})
      last[{scope_key(s, l), c.kind}] = c.cycle;
  }
  return out;
}

}  // namespace nvrowsim
