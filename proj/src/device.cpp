#include "nvrowsim/device.h"

#include <algorithm>
#include <bit>
#include <istream>
#include <ostream>
#include <sstream>

namespace nvrowsim {

namespace {

unsigned log2u(std::uint64_t v) { return static_cast<unsigned>(std::countr_zero(v)); }

std::uint64_t take(std::uint64_t& bits, unsigned width) {
  const std::uint64_t v = bits & ((std::uint64_t{1} << width) - 1);
  bits >>= width;
  return v;
}

void put(std::uint64_t& acc, unsigned& shift, std::uint64_t value, unsigned width) {
  acc |= value << shift;
  shift += width;
}

}  // namespace

const char* to_string(Mapping m) {
  return m == Mapping::RowInterleaved ? "row" : "block";
}

Mapping parse_mapping(const std::string& s) {
  if (s == "row" || s == "RowInterleaved") return Mapping::RowInterleaved;
  if (s == "block" || s == "BlockInterleaved") return Mapping::BlockInterleaved;
  throw std::invalid_argument("unknown mapping '" + s + "'");
}

void Geometry::validate() const {
  auto need = [](bool ok, const char* what) {
    if (!ok) throw DeviceError(std::string("geometry: ") + what);
  };
  need(is_pow2(channels), "channels must be a power of two");
  need(is_pow2(ranks_per_channel), "ranks_per_channel must be a power of two");
  need(is_pow2(banks_per_rank), "banks_per_rank must be a power of two");
  need(is_pow2(rows_per_bank), "rows_per_bank must be a power of two");
  need(is_pow2(chips_per_rank), "chips_per_rank must be a power of two");
  need(is_pow2(row_bytes_per_chip), "row_bytes_per_chip must be a power of two");
  need(is_pow2(buffer_bytes_per_chip),
       "buffer_bytes_per_chip must be a power of two");
  need(is_pow2(prefetch_bytes_per_chip),
       "prefetch_bytes_per_chip must be a power of two");
  need(cache_block_bytes == prefetch_bytes_per_chip * chips_per_rank,
       "cache_block_bytes must equal prefetch_bytes_per_chip * chips_per_rank");
  need(buffer_bytes_per_chip >= prefetch_bytes_per_chip,
       "buffer_bytes_per_chip must be >= prefetch_bytes_per_chip");
  need(row_bytes_per_chip % buffer_bytes_per_chip == 0,
       "buffer_bytes_per_chip must divide row_bytes_per_chip");
  need(capacity_bytes() / chips_per_rank / row_bytes_per_chip == std::uint64_t{channels} *
           ranks_per_channel * banks_per_rank * rows_per_bank,
       "capacity overflows 64 bits");
}

PhysicalLocation decode_address(std::uint64_t addr, const Geometry& g,
                                Mapping mapping) {
  if (addr >= g.capacity_bytes())
    throw DeviceError("address 0x" + [&] {
      std::ostringstream os;
      os << std::hex << addr;
      return os.str();
    }() + " beyond physical capacity");

  std::uint64_t bits = addr >> log2u(g.cache_block_bytes);
  const unsigned col_w = log2u(g.blocks_per_row());
  const unsigned ch_w = log2u(g.channels);
  const unsigned bank_w = log2u(g.banks_per_rank);
  const unsigned rank_w = log2u(g.ranks_per_channel);

  PhysicalLocation loc;
  if (mapping == Mapping::RowInterleaved) {
    loc.block_column = static_cast<std::uint32_t>(take(bits, col_w));
    loc.channel = static_cast<std::uint32_t>(take(bits, ch_w));
    loc.bank = static_cast<std::uint32_t>(take(bits, bank_w));
    loc.rank = static_cast<std::uint32_t>(take(bits, rank_w));
  } else {
    loc.channel = static_cast<std::uint32_t>(take(bits, ch_w));
    loc.bank = static_cast<std::uint32_t>(take(bits, bank_w));
    loc.rank = static_cast<std::uint32_t>(take(bits, rank_w));
    loc.block_column = static_cast<std::uint32_t>(take(bits, col_w));
  }
  loc.row = bits;
  loc.segment = loc.block_column / g.blocks_per_segment();
  return loc;
}

std::uint64_t encode_address(const PhysicalLocation& loc, const Geometry& g,
                             Mapping mapping) {
  const unsigned col_w = log2u(g.blocks_per_row());
  const unsigned ch_w = log2u(g.channels);
  const unsigned bank_w = log2u(g.banks_per_rank);
  const unsigned rank_w = log2u(g.ranks_per_channel);

  std::uint64_t acc = 0;
  unsigned shift = log2u(g.cache_block_bytes);
  if (mapping == Mapping::RowInterleaved) {
    put(acc, shift, loc.block_column, col_w);
    put(acc, shift, loc.channel, ch_w);
    put(acc, shift, loc.bank, bank_w);
    put(acc, shift, loc.rank, rank_w);
  } else {
    put(acc, shift, loc.channel, ch_w);
    put(acc, shift, loc.bank, bank_w);
    put(acc, shift, loc.rank, rank_w);
    put(acc, shift, loc.block_column, col_w);
  }
  acc |= loc.row << shift;
  return acc;
}

const char* to_string(BankPhase p) {
  switch (p) {
    case BankPhase::Idle: return "Idle";
    case BankPhase::RowLatched: return "RowLatched";
    case BankPhase::Activating: return "Activating";
    case BankPhase::Active: return "Active";
    case BankPhase::Precharging: return "Precharging";
  }
  return "?";
}

const char* to_string(CommandKind k) {
  switch (k) {
    case CommandKind::Activate: return "ACT";
    case CommandKind::Precharge: return "PRE";
    case CommandKind::Read: return "RD";
    case CommandKind::Write: return "WR";
  }
  return "?";
}

CommandKind parse_command_kind(const std::string& s) {
  if (s == "ACT") return CommandKind::Activate;
  if (s == "PRE") return CommandKind::Precharge;
  if (s == "RD") return CommandKind::Read;
  if (s == "WR") return CommandKind::Write;
  throw std::invalid_argument("unknown command kind '" + s + "'");
}

const char* to_string(LookupResult r) {
  switch (r) {
    case LookupResult::Hit: return "hit";
    case LookupResult::ClosedMiss: return "closed_miss";
    case LookupResult::Conflict: return "conflict";
  }
  return "?";
}

void BankState::settle(Cycle now, const TimingSet& t) {
  if (phase == BankPhase::Activating && now >= last_activate + t.tRCD)
    phase = BankPhase::Active;
  else if (phase == BankPhase::Precharging && now >= last_precharge + t.tRP)
    phase = BankPhase::Idle;
}

std::uint32_t BankState::dirty_count() const {
  return static_cast<std::uint32_t>(std::count(dirty_mask.begin(), dirty_mask.end(), true));
}

ChannelState::ChannelState(const Geometry& g)
    : ranks(g.ranks_per_channel),
      banks(g.banks_per_channel()),
      banks_per_rank(g.banks_per_rank) {}

LookupResult lookup(const BankState& state, const PhysicalLocation& loc) {
  if (!state.open_row) return LookupResult::ClosedMiss;
  const bool open = state.phase == BankPhase::Active ||
                    state.phase == BankPhase::Activating;
  if (open && *state.open_row == loc.row && state.open_segment == loc.segment)
    return LookupResult::Hit;
  return LookupResult::Conflict;
}

CommandKind next_command(const BankState& state, const PhysicalLocation& loc,
                         bool is_write, ProtocolKind protocol) {
  if (lookup(state, loc) == LookupResult::Hit)
    return is_write ? CommandKind::Write : CommandKind::Read;
  if (protocol == ProtocolKind::DRAM)
    return state.open_row ? CommandKind::Precharge : CommandKind::Activate;
  if (state.phase == BankPhase::RowLatched && state.latched_row == loc.row)
    return CommandKind::Activate;
  return CommandKind::Precharge;
}

Cycle earliest_issue(const ChannelState& channel, const PhysicalLocation& loc,
                     CommandKind kind, Cycle now, const TimingSet& t,
                     ProtocolKind protocol) {
  const BankState& b = channel.bank(loc);
  const RankState& r = channel.ranks[loc.rank];
  Cycle at = now;
  auto need = [&at](Cycle c) { at = std::max(at, c); };

  switch (kind) {
    case CommandKind::Activate:
      if (protocol == ProtocolKind::DRAM) {
        if (b.open_row) throw DeviceError("ACTIVATE to a bank with an open row");
      } else if (b.phase != BankPhase::RowLatched || b.latched_row != loc.row) {
        throw DeviceError("NVM ACTIVATE without a latched row address");
      }
      need(b.last_precharge + t.tRP);
      need(r.last_activate + t.tRRD);
      if (r.activate_history.size() >= 4)
        need(r.activate_history[r.activate_history.size() - 4] + t.tFAW);
      break;
    case CommandKind::Precharge:
      if (protocol == ProtocolKind::DRAM && !b.open_row)
        throw DeviceError("DRAM PRECHARGE to a closed bank");
      need(b.last_write + t.tCWL + t.tBURST + t.tWR);
      need(b.last_read + t.tRTP);
      if (protocol == ProtocolKind::DRAM && t.enforce_tras)
        need(b.last_activate + t.tRAS);
      break;
    case CommandKind::Read:
    case CommandKind::Write: {
      if (lookup(b, loc) != LookupResult::Hit)
        throw DeviceError(std::string(to_string(kind)) +
                          " to a bank without the target segment open");
      need(b.last_activate + t.tRCD);
      if (kind == CommandKind::Read) {
        need(channel.last_read + t.tCCD);
        need(r.last_write + t.tCWL + t.tBURST + t.tWTR);
        need(channel.data_bus_free - t.tCL);
      } else {
        need(channel.last_write + t.tCCD);
        need(channel.data_bus_free - t.tCWL);
      }
      break;
    }
  }

  if (channel.last_command_cycle >= at) {
    // The NVM row/column address pair may share one command slot.
    const bool paired = protocol == ProtocolKind::NVM &&
                        kind == CommandKind::Activate &&
                        channel.last_command_kind == CommandKind::Precharge &&
                        channel.last_command_bank ==
                            channel.bank_index(loc.rank, loc.bank) &&
                        channel.last_command_cycle == at;
    if (!paired) at = channel.last_command_cycle + 1;
  }
  return at;
}

CommandOutcome apply_command(ChannelState& channel, const Command& cmd,
                             const DeviceContext& ctx) {
  const Geometry& g = ctx.geometry;
  const TimingSet& t = ctx.timing;
  const PhysicalLocation& loc = cmd.location;
  BankState& b = channel.bank(loc);
  RankState& r = channel.ranks[loc.rank];
  b.settle(cmd.cycle, t);

  const Cycle earliest =
      earliest_issue(channel, loc, cmd.kind, cmd.cycle, t, ctx.protocol);
  if (earliest > cmd.cycle)
    throw DeviceError(std::string(to_string(cmd.kind)) + " at cycle " +
                      std::to_string(cmd.cycle) + " violates timing (earliest " +
                      std::to_string(earliest) + ")");

  CommandOutcome out;
  auto emit = [&](EnergyKind kind, std::uint64_t bits) {
    out.energy.push_back({kind, bits, command_energy(ctx.energy, kind, bits)});
  };

  switch (cmd.kind) {
    case CommandKind::Activate:
      b.open_row = loc.row;
      b.open_segment = loc.segment;
      b.latched_row.reset();
      b.dirty_mask.assign(g.blocks_per_segment(), false);
      b.phase = BankPhase::Activating;
      b.last_activate = cmd.cycle;
      r.last_activate = cmd.cycle;
      r.activate_history.push_back(cmd.cycle);
      if (r.activate_history.size() > 4) r.activate_history.pop_front();
      emit(EnergyKind::Activate, g.buffer_bits());
      break;

    case CommandKind::Precharge:
      if (ctx.protocol == ProtocolKind::DRAM) {
        // Destructive read: the whole buffer is restored to the array.
        emit(EnergyKind::ArrayWrite, g.buffer_bits());
        b.phase = BankPhase::Precharging;
      } else {
        if (b.open_row) {
          for (bool dirty : b.dirty_mask) {
            if (!dirty) continue;
            emit(EnergyKind::ArrayWrite, g.block_bits());
            out.wear.push_back({loc.channel, loc.rank, loc.bank, *b.open_row,
                                g.cache_block_bytes});
          }
        }
        b.latched_row = loc.row;
        b.phase = BankPhase::RowLatched;
      }
      b.open_row.reset();
      b.open_segment.reset();
      b.dirty_mask.clear();
      b.last_precharge = cmd.cycle;
      break;

    case CommandKind::Read:
      b.last_read = cmd.cycle;
      channel.last_read = cmd.cycle;
      channel.data_bus_free = cmd.cycle + t.tCL + t.tBURST;
      emit(EnergyKind::Read, g.block_bits());
      break;

    case CommandKind::Write:
      b.dirty_mask[loc.block_column % g.blocks_per_segment()] = true;
      b.last_write = cmd.cycle;
      r.last_write = cmd.cycle;
      channel.last_write = cmd.cycle;
      channel.data_bus_free = cmd.cycle + t.tCWL + t.tBURST;
      emit(EnergyKind::Write, g.block_bits());
      break;
  }

  channel.last_command_cycle = cmd.cycle;
  channel.last_command_kind = cmd.kind;
  channel.last_command_bank = channel.bank_index(loc.rank, loc.bank);
  return out;
}

Cycle service_latency_closed_form(AccessScenario scenario, bool is_write,
                                  const TimingSet& t, ProtocolKind protocol,
                                  bool write_recovery_pending) {
  const Cycle column = (is_write ? t.tCWL : t.tCL) + t.tBURST;
  switch (scenario) {
    case AccessScenario::Hit:
      return column;
    case AccessScenario::ClosedMiss:
      return t.tRCD + column;
    case AccessScenario::Conflict: {
      const Cycle precharge = protocol == ProtocolKind::DRAM ? t.tRP : 0;
      return (write_recovery_pending ? t.tWR : 0) + precharge + t.tRCD + column;
    }
  }
  return 0;
}

void write_command_csv_header(std::ostream& os) {
  os << "cycle,channel,rank,bank,kind,row,column\n";
}

void write_command_csv_row(std::ostream& os, const Command& cmd) {
  const auto& l = cmd.location;
  os << cmd.cycle << ',' << l.channel << ',' << l.rank << ',' << l.bank << ','
     << to_string(cmd.kind) << ',' << l.row << ',' << l.block_column << '\n';
}

std::vector<Command> read_command_csv(std::istream& is, const Geometry& g) {
  std::vector<Command> cmds;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty() || line.rfind("cycle,", 0) == 0) continue;
    std::istringstream ls(line);
    std::string field[7];
    for (auto& f : field) std::getline(ls, f, ',');
    try {
      Command c;
      c.cycle = std::stoll(field[0]);
      c.location.channel = static_cast<std::uint32_t>(std::stoul(field[1]));
      c.location.rank = static_cast<std::uint32_t>(std::stoul(field[2]));
      c.location.bank = static_cast<std::uint32_t>(std::stoul(field[3]));
      c.kind = parse_command_kind(field[4]);
      c.location.row = std::stoull(field[5]);
      c.location.block_column = static_cast<std::uint32_t>(std::stoul(field[6]));
      c.location.segment = c.location.block_column / g.blocks_per_segment();
      cmds.push_back(c);
    } catch (const std::exception& e) {
      throw std::invalid_argument("command csv line " + std::to_string(line_no) +
                                  ": " + e.what());
    }
  }
  return cmds;
}

}  // namespace nvrowsim
