#include "nvrowsim/techmodel.h"

#include <algorithm>
#include <cmath>

namespace nvrowsim {

const char* to_string(ProtocolKind kind) {
  return kind == ProtocolKind::DRAM ? "DRAM" : "NVM";
}

const char* to_string(EnergyKind kind) {
  switch (kind) {
    case EnergyKind::Activate: return "activate";
    case EnergyKind::Read: return "read";
    case EnergyKind::Write: return "write";
    case EnergyKind::ArrayWrite: return "array_write";
  }
  return "unknown";
}

TechnologyProfile TechnologyProfile::dram() { return {}; }

TechnologyProfile TechnologyProfile::pcm() {
  return {"pcm", 2.0, 100.0, 4.0, 8.0, 1.0e8, ProtocolKind::NVM};
}

TechnologyProfile TechnologyProfile::sttram() {
  return {"sttram", 1.0, 1.0, 1.0, 1.0, 1.0e15, ProtocolKind::NVM};
}

TechnologyProfile TechnologyProfile::preset(const std::string& name) {
  if (name == "dram") return dram();
  if (name == "pcm") return pcm();
  if (name == "sttram") return sttram();
  throw TechError("unknown technology profile '" + name + "'");
}

void TechnologyProfile::validate() const {
  if (!(alpha > 0 && beta > 0 && gamma > 0 && delta > 0))
    throw TechError("technology ratios must be positive (" + name + ")");
  if (protocol == ProtocolKind::DRAM) {
    if (alpha != 1.0 || beta != 1.0 || gamma != 1.0 || delta != 1.0)
      throw TechError("DRAM profile must have unit ratios");
  } else {
    if (!endurance_writes || *endurance_writes <= 0)
      throw TechError("NVM profile '" + name + "' needs a positive endurance");
  }
}

int ceil_cycles(double value) {
  return static_cast<int>(std::ceil(value - 1e-9));
}

TimingSet derive_timing(const TechnologyProfile& profile,
                        std::uint64_t buffer_bytes_per_chip,
                        std::uint64_t row_bytes_per_chip,
                        const FixedTimings& fixed) {
  profile.validate();
  if (!is_pow2(buffer_bytes_per_chip) || !is_pow2(row_bytes_per_chip))
    throw TechError("buffer and row sizes must be powers of two");
  if (buffer_bytes_per_chip > row_bytes_per_chip)
    throw TechError("row buffer cannot exceed the array row");

  TimingSet t;
  t.tCL = fixed.tCL;
  t.tCWL = fixed.tCWL;
  t.tCCD = fixed.tCCD;
  t.tBURST = fixed.tBURST;
  t.tWTR = fixed.tWTR;
  t.tRAS = fixed.tRAS;

  if (profile.protocol == ProtocolKind::DRAM) {
    t.tRCD = 8;
    t.tWR = 8;
    t.tRRD = 4;
    t.tFAW = 20;
    t.tRP = 8;
    t.tRTP = 4;
    t.enforce_tras = true;
    return t;
  }

  const double fraction = static_cast<double>(buffer_bytes_per_chip) /
                          static_cast<double>(row_bytes_per_chip);
  t.tRCD = ceil_cycles(8.0 * profile.gamma);
  t.tWR = ceil_cycles(8.0 * profile.delta);
  t.tRRD = std::max(1, ceil_cycles(4.0 * profile.alpha * fraction));
  t.tFAW = std::max(1, ceil_cycles(20.0 * profile.alpha * fraction));
  t.tRP = 0;
  t.tRTP = 0;
  t.enforce_tras = false;
  return t;
}

EnergyTable energy_table(const TechnologyProfile& profile) {
  EnergyTable e;
  if (profile.protocol == ProtocolKind::NVM) {
    e.activate_pj_per_bit = 0.3 * profile.alpha;
    e.array_write_pj_per_bit = 0.3 * profile.beta;
  }
  return e;
}

double command_energy(const EnergyTable& table, EnergyKind kind,
                      std::uint64_t bits) {
  if (bits == 0) throw std::invalid_argument("command_energy: zero bits");
  const double n = static_cast<double>(bits);
  switch (kind) {
    case EnergyKind::Activate: return table.activate_pj_per_bit * n;
    case EnergyKind::Read: return table.read_pj_per_bit * n;
    case EnergyKind::Write: return table.write_pj_per_bit * n;
    case EnergyKind::ArrayWrite: return table.array_write_pj_per_bit * n;
  }
  throw std::invalid_argument("command_energy: unknown command kind");
}

void ElectricalParams::validate() const {
  const double fields[] = {v_dd, v_ddq, f, i_cell, i_leak, i_dc,
                           c_de, c_pt, n, m, m_dagger};
  for (double v : fields)
    if (v < 0) throw std::invalid_argument("electrical parameters must be >= 0");
  if (m_dagger > m)
    throw std::invalid_argument("NVM buffer bits exceed DRAM row-buffer bits");
}

PowerTerms power_terms(const ElectricalParams& p, ProtocolKind kind) {
  p.validate();
  const bool dram = kind == ProtocolKind::DRAM;
  const double bits = dram ? p.m : p.m_dagger;
  double i_cell = p.i_cell;
  if (dram && p.c_bl && p.delta_v_dd) i_cell = *p.c_bl * *p.delta_v_dd;

  PowerTerms terms;
  terms.cell = bits * i_cell * p.v_dd;
  terms.leakage = (bits * p.n - bits) * p.i_leak * p.v_dd;
  terms.decoder = (p.n + bits) * p.c_de * p.v_dd * p.v_dd * p.f;
  terms.periphery = p.c_pt * p.v_ddq * p.v_ddq * p.f;
  terms.static_current = p.v_dd * p.i_dc;
  return terms;
}

double analytic_power(const ElectricalParams& p, PowerForm which) {
  switch (which) {
    case PowerForm::DramFull: return power_terms(p, ProtocolKind::DRAM).total();
    case PowerForm::NvmFull: return power_terms(p, ProtocolKind::NVM).total();
    case PowerForm::DramApprox: {
      const auto t = power_terms(p, ProtocolKind::DRAM);
      return t.cell + t.periphery;
    }
    case PowerForm::NvmApprox: {
      const auto t = power_terms(p, ProtocolKind::NVM);
      return t.cell + t.periphery;
    }
  }
  throw std::invalid_argument("analytic_power: unknown form");
}

double analytic_energy(double power_watts, double f_hz) {
  if (f_hz <= 0) throw std::invalid_argument("analytic_energy: f must be > 0");
  return power_watts / f_hz;
}

AreaEstimate area_feasibility(std::uint64_t buffer_bytes_per_chip,
                              std::uint64_t row_bytes_per_chip) {
  if (buffer_bytes_per_chip == 0 || row_bytes_per_chip == 0)
    throw std::invalid_argument("area_feasibility: sizes must be positive");
  AreaEstimate a;
  a.ratio = (24.0 * static_cast<double>(buffer_bytes_per_chip)) /
            (14.0 * static_cast<double>(row_bytes_per_chip));
  a.feasible = a.ratio < 1.0;
  return a;
}

}  // namespace nvrowsim
