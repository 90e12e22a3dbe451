#pragma once

#include <cstdint>
#include <deque>
#include <iosfwd>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "nvrowsim/techmodel.h"

namespace nvrowsim {

// Timestamp for "never happened"; far enough from the int64 edge that adding
// any timing constraint stays well-defined.
inline constexpr Cycle kNever = std::numeric_limits<Cycle>::min() / 4;

class DeviceError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// A simulation-level invariant failed (starvation, queue overflow, ...).
class InvariantViolation : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Mapping { RowInterleaved, BlockInterleaved };

const char* to_string(Mapping m);
Mapping parse_mapping(const std::string& s);

struct Geometry {
  std::uint32_t channels = 2;
  std::uint32_t ranks_per_channel = 1;
  std::uint32_t banks_per_rank = 8;
  std::uint32_t chips_per_rank = 8;
  std::uint64_t row_bytes_per_chip = 1024;
  std::uint64_t buffer_bytes_per_chip = 1024;
  std::uint64_t rows_per_bank = 16384;
  std::uint64_t cache_block_bytes = 64;
  std::uint64_t prefetch_bytes_per_chip = 8;

  // Throws DeviceError naming the first broken invariant. Every count that
  // takes part in address decoding must be a power of two.
  void validate() const;

  std::uint64_t capacity_bytes() const {
    return std::uint64_t{channels} * ranks_per_channel * banks_per_rank *
           rows_per_bank * row_bytes_per_chip * chips_per_rank;
  }
  std::uint32_t blocks_per_row() const {
    return static_cast<std::uint32_t>(row_bytes_per_chip * chips_per_rank /
                                      cache_block_bytes);
  }
  std::uint32_t blocks_per_segment() const {
    return static_cast<std::uint32_t>(buffer_bytes_per_chip * chips_per_rank /
                                      cache_block_bytes);
  }
  std::uint32_t segments_per_row() const {
    return static_cast<std::uint32_t>(row_bytes_per_chip / buffer_bytes_per_chip);
  }
  std::uint32_t banks_per_channel() const {
    return ranks_per_channel * banks_per_rank;
  }
  std::uint64_t buffer_bits() const {
    return buffer_bytes_per_chip * 8 * chips_per_rank;
  }
  std::uint64_t block_bits() const { return cache_block_bytes * 8; }
};

struct PhysicalLocation {
  std::uint32_t channel = 0;
  std::uint32_t rank = 0;
  std::uint32_t bank = 0;
  std::uint64_t row = 0;
  std::uint32_t block_column = 0;
  std::uint32_t segment = 0;

  bool operator==(const PhysicalLocation&) const = default;
};

// Bit layout, MSB to LSB:
//   RowInterleaved:   row | rank | bank | channel | block_column | offset
//   BlockInterleaved: row | block_column | rank | bank | channel | offset
// Unaligned addresses are truncated to their cache block.
PhysicalLocation decode_address(std::uint64_t addr, const Geometry& g,
                                Mapping mapping);
std::uint64_t encode_address(const PhysicalLocation& loc, const Geometry& g,
                             Mapping mapping);

enum class BankPhase { Idle, RowLatched, Activating, Active, Precharging };
enum class CommandKind { Activate, Precharge, Read, Write };

const char* to_string(BankPhase p);
const char* to_string(CommandKind k);
CommandKind parse_command_kind(const std::string& s);

struct BankState {
  BankPhase phase = BankPhase::Idle;
  std::optional<std::uint64_t> open_row;
  std::optional<std::uint32_t> open_segment;
  // NVM only: row address delivered by PRECHARGE, consumed by ACTIVATE.
  std::optional<std::uint64_t> latched_row;
  std::vector<bool> dirty_mask;
  Cycle last_activate = kNever;
  Cycle last_precharge = kNever;
  Cycle last_read = kNever;
  Cycle last_write = kNever;

  // Advances the timed phases (Activating -> Active, Precharging -> Idle).
  void settle(Cycle now, const TimingSet& t);
  std::uint32_t dirty_count() const;
};

struct RankState {
  // Most recent ACTIVATE cycles, oldest first; at most four are kept.
  std::deque<Cycle> activate_history;
  Cycle last_activate = kNever;
  Cycle last_write = kNever;
};

// All timing state reachable from one channel's command bus.
struct ChannelState {
  std::vector<RankState> ranks;
  std::vector<BankState> banks;  // rank-major
  Cycle last_read = kNever;
  Cycle last_write = kNever;
  Cycle data_bus_free = kNever;
  Cycle last_command_cycle = kNever;
  CommandKind last_command_kind = CommandKind::Read;
  std::uint32_t last_command_bank = 0;

  explicit ChannelState(const Geometry& g);

  std::uint32_t bank_index(std::uint32_t rank, std::uint32_t bank) const {
    return rank * banks_per_rank + bank;
  }
  BankState& bank(const PhysicalLocation& loc) {
    return banks[bank_index(loc.rank, loc.bank)];
  }
  const BankState& bank(const PhysicalLocation& loc) const {
    return banks[bank_index(loc.rank, loc.bank)];
  }

  std::uint32_t banks_per_rank = 0;
};

struct Command {
  CommandKind kind = CommandKind::Read;
  PhysicalLocation location;
  Cycle cycle = 0;

  bool operator==(const Command&) const = default;
};

struct EnergyEvent {
  EnergyKind kind = EnergyKind::Read;
  std::uint64_t bits = 0;
  double picojoules = 0.0;
};

struct WearEvent {
  std::uint32_t channel = 0;
  std::uint32_t rank = 0;
  std::uint32_t bank = 0;
  std::uint64_t row = 0;
  std::uint64_t bytes_written_to_array = 0;
};

struct CommandOutcome {
  std::vector<EnergyEvent> energy;
  std::vector<WearEvent> wear;
};

enum class LookupResult { Hit, ClosedMiss, Conflict };

const char* to_string(LookupResult r);

// A segment counts as open from its ACTIVATE on; a request that arrives
// while the segment is still being sensed needs no further array access.
LookupResult lookup(const BankState& state, const PhysicalLocation& loc);

// Next command a request to `loc` needs from the bank in its current state.
CommandKind next_command(const BankState& state, const PhysicalLocation& loc,
                         bool is_write, ProtocolKind protocol);

// Earliest cycle >= now at which `kind` may issue to the bank at `loc`.
// Throws DeviceError when the command is illegal in the bank's phase.
Cycle earliest_issue(const ChannelState& channel, const PhysicalLocation& loc,
                     CommandKind kind, Cycle now, const TimingSet& t,
                     ProtocolKind protocol);

struct DeviceContext {
  Geometry geometry;
  TimingSet timing;
  EnergyTable energy;
  ProtocolKind protocol = ProtocolKind::DRAM;
};

// Applies a timing-legal command to the channel and reports the energy and
// array-wear it causes.
CommandOutcome apply_command(ChannelState& channel, const Command& cmd,
                             const DeviceContext& ctx);

enum class AccessScenario { Hit, ClosedMiss, Conflict };

// Analytic latency of one isolated request on idle buses, measured from the
// cycle its first command may issue to the end of its data burst.
Cycle service_latency_closed_form(AccessScenario scenario, bool is_write,
                                  const TimingSet& t, ProtocolKind protocol,
                                  bool write_recovery_pending = false);

// Debug CSV: cycle,channel,rank,bank,kind,row,column
void write_command_csv_header(std::ostream& os);
void write_command_csv_row(std::ostream& os, const Command& cmd);
std::vector<Command> read_command_csv(std::istream& is, const Geometry& g);

}  // namespace nvrowsim
