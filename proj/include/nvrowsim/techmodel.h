#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>

namespace nvrowsim {

using Cycle = std::int64_t;

enum class ProtocolKind { DRAM, NVM };

const char* to_string(ProtocolKind kind);

class TechError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Technology ratios are all relative to DRAM: alpha = read energy,
// beta = write energy, gamma = read latency, delta = write latency.
struct TechnologyProfile {
  std::string name = "dram";
  double alpha = 1.0;
  double beta = 1.0;
  double gamma = 1.0;
  double delta = 1.0;
  std::optional<double> endurance_writes;
  ProtocolKind protocol = ProtocolKind::DRAM;

  static TechnologyProfile dram();
  static TechnologyProfile pcm();
  static TechnologyProfile sttram();
  // Looks up "dram", "pcm" or "sttram". Throws TechError otherwise.
  static TechnologyProfile preset(const std::string& name);

  void validate() const;
};

// DDR3-1066 parameters that are shared by both protocols and not scaled by
// technology ratios. Overridable from the experiment config.
struct FixedTimings {
  int tCL = 8;
  int tCWL = 6;
  int tCCD = 4;
  int tBURST = 4;
  int tWTR = 4;
  int tRAS = 20;
};

struct TimingSet {
  int tRCD = 8;
  int tWR = 8;
  int tRRD = 4;
  int tFAW = 20;
  int tRP = 8;
  int tRTP = 4;
  int tCL = 8;
  int tCWL = 6;
  int tCCD = 4;
  int tBURST = 4;
  int tWTR = 4;
  int tRAS = 20;
  double clock_period_ns = 1.875;
  // tRAS only binds under the DRAM protocol.
  bool enforce_tras = true;

  bool operator==(const TimingSet&) const = default;
};

// Derives the integer-cycle timing set for a technology and a per-chip row
// buffer size. NVM values come from scaling the DRAM column by the technology
// ratios and by the buffer fraction m_dagger/m, rounded up; tRRD and tFAW are
// floored at one cycle.
TimingSet derive_timing(const TechnologyProfile& profile,
                        std::uint64_t buffer_bytes_per_chip,
                        std::uint64_t row_bytes_per_chip,
                        const FixedTimings& fixed = {});

// Ceiling that ignores representation noise below 1e-9, so that 20 * 0.7
// evaluates to 14 and not 15.
int ceil_cycles(double value);

enum class EnergyKind { Activate, Read, Write, ArrayWrite };

const char* to_string(EnergyKind kind);

struct EnergyTable {
  double activate_pj_per_bit = 0.3;
  double read_pj_per_bit = 19.0;
  double write_pj_per_bit = 24.2;
  double array_write_pj_per_bit = 0.3;
};

EnergyTable energy_table(const TechnologyProfile& profile);

double command_energy(const EnergyTable& table, EnergyKind kind,
                      std::uint64_t bits);

// Inputs to the analytic dynamic-power model. Units are SI.
struct ElectricalParams {
  double v_dd = 1.5;
  double v_ddq = 1.5;
  double f = 533.0e6;
  double i_cell = 0.0;
  double i_leak = 0.0;
  double i_dc = 0.0;
  double c_de = 0.0;
  double c_pt = 0.0;
  double n = 0.0;
  double m = 0.0;
  double m_dagger = 0.0;
  // When both are set, the DRAM cell current is C_BL * dV instead of i_cell.
  std::optional<double> c_bl;
  std::optional<double> delta_v_dd;

  void validate() const;
};

enum class PowerForm { DramFull, NvmFull, DramApprox, NvmApprox };

// The five additive terms of the full power expression; the approximate
// forms keep only `cell` and `periphery`.
struct PowerTerms {
  double cell = 0.0;
  double leakage = 0.0;
  double decoder = 0.0;
  double periphery = 0.0;
  double static_current = 0.0;

  double total() const {
    return cell + leakage + decoder + periphery + static_current;
  }
};

PowerTerms power_terms(const ElectricalParams& p, ProtocolKind kind);
double analytic_power(const ElectricalParams& p, PowerForm which);
// Dynamic energy of one access cycle, P / f.
double analytic_energy(double power_watts, double f_hz);

struct AreaEstimate {
  double ratio = 0.0;
  bool feasible = false;
};

// Row-buffer area of an NVM buffer built from 24-transistor cells relative to
// a DRAM row buffer of 14-transistor cells.
AreaEstimate area_feasibility(std::uint64_t buffer_bytes_per_chip,
                              std::uint64_t row_bytes_per_chip);

constexpr bool is_pow2(std::uint64_t v) { return v != 0 && (v & (v - 1)) == 0; }

}  // namespace nvrowsim
