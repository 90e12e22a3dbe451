#include <string>

#include "doctest.h"
#include "nvrowsim/validator.h"

using namespace nvrowsim;

namespace {

using K = CommandKind;

Command cmd(K k, Cycle c, std::uint32_t bank, std::uint64_t row, std::uint32_t col = 0,
            std::uint32_t channel = 0) {
  Command out;
  out.kind = k;
  out.cycle = c;
  out.location.channel = channel;
  out.location.bank = bank;
  out.location.row = row;
  out.location.block_column = col;
  out.location.segment = 0;
  return out;
}

bool has_rule(const std::vector<Violation>& v, const std::string& prefix) {
  for (const auto& x : v)
    if (x.rule.rfind(prefix, 0) == 0) return true;
  return false;
}

const Geometry g;
const TimingSet dram = derive_timing(TechnologyProfile::dram(), 1024, 1024);
const TimingSet stt = derive_timing(TechnologyProfile::sttram(), 1024, 1024);

}  // namespace

TEST_CASE("legal DRAM stream passes") {
  const std::vector<Command> s = {
      cmd(K::Activate, 0, 0, 1),  cmd(K::Activate, 4, 1, 2),   cmd(K::Read, 8, 0, 1, 0),
      cmd(K::Read, 12, 1, 2, 0),  cmd(K::Write, 20, 0, 1, 3),  cmd(K::Precharge, 38, 0, 1),
      cmd(K::Activate, 46, 0, 9), cmd(K::Precharge, 47, 1, 2),
  };
  CHECK(validate_commands(s, g, dram, ProtocolKind::DRAM).empty());
}

TEST_CASE("each DRAM constraint is detected") {
  auto check = [](std::vector<Command> s, const std::string& rule) {
    const auto v = validate_commands(s, g, dram, ProtocolKind::DRAM);
    CHECK_MESSAGE(has_rule(v, rule), rule);
  };
  check({cmd(K::Activate, 0, 0, 1), cmd(K::Read, 7, 0, 1)}, "tRCD A->R");
  check({cmd(K::Activate, 0, 0, 1), cmd(K::Write, 7, 0, 1)}, "tRCD A->W");
  check({cmd(K::Activate, 0, 0, 1), cmd(K::Write, 8, 0, 1), cmd(K::Precharge, 25, 0, 1)},
        "tWR W->P");
  check({cmd(K::Activate, 0, 0, 1), cmd(K::Activate, 3, 1, 1)}, "tRRD A->A");
  check({cmd(K::Activate, 0, 0, 1), cmd(K::Precharge, 20, 0, 1), cmd(K::Activate, 27, 0, 2)},
        "tRP P->A");
  check({cmd(K::Activate, 0, 0, 1), cmd(K::Read, 18, 0, 1), cmd(K::Precharge, 21, 0, 1)},
        "tRTP R->P");
  check({cmd(K::Activate, 0, 0, 1), cmd(K::Precharge, 19, 0, 1)}, "tRAS A->P");
  check({cmd(K::Activate, 0, 0, 1), cmd(K::Activate, 4, 1, 1), cmd(K::Read, 8, 0, 1),
         cmd(K::Read, 11, 1, 1)},
        "tCCD R->R");
  check({cmd(K::Activate, 0, 0, 1), cmd(K::Activate, 4, 1, 1), cmd(K::Write, 8, 0, 1),
         cmd(K::Write, 11, 1, 1)},
        "tCCD W->W");
  check({cmd(K::Activate, 0, 0, 1), cmd(K::Activate, 4, 1, 1), cmd(K::Write, 8, 0, 1),
         cmd(K::Read, 21, 1, 1)},
        "tWTR W->R");
  check({cmd(K::Activate, 0, 0, 1), cmd(K::Activate, 4, 1, 1), cmd(K::Activate, 8, 2, 1),
         cmd(K::Activate, 12, 3, 1), cmd(K::Activate, 16, 4, 1)},
        "tFAW");
  check({cmd(K::Activate, 0, 0, 1), cmd(K::Activate, 0, 1, 1)}, "command bus");
  check({cmd(K::Activate, 0, 0, 1), cmd(K::Activate, 30, 0, 2)}, "ACT to open bank");
  check({cmd(K::Precharge, 0, 0, 1)}, "PRE to closed bank");
  check({cmd(K::Read, 0, 0, 1)}, "column command");
  check({cmd(K::Activate, 5, 0, 1), cmd(K::Activate, 4, 1, 1, 0, 0)}, "commands out of cycle order");
}

TEST_CASE("overlapping bursts across channels are independent") {
  const std::vector<Command> s = {cmd(K::Activate, 0, 0, 1, 0, 0), cmd(K::Activate, 0, 0, 1, 0, 1),
                                  cmd(K::Read, 8, 0, 1, 0, 0), cmd(K::Read, 8, 0, 1, 0, 1)};
  CHECK(validate_commands(s, g, dram, ProtocolKind::DRAM).empty());
}

TEST_CASE("read burst colliding with a write burst") {
  // Different ranks avoid tWTR; the bursts still share the data bus.
  Geometry two = g;
  two.ranks_per_channel = 2;
  Command w = cmd(K::Write, 8, 0, 1);
  Command a2 = cmd(K::Activate, 1, 0, 1);
  a2.location.rank = 1;
  Command r = cmd(K::Read, 9, 0, 1);
  r.location.rank = 1;
  const std::vector<Command> s = {cmd(K::Activate, 0, 0, 1), a2, w, r};
  const auto v = validate_commands(s, two, dram, ProtocolKind::DRAM);
  CHECK(has_rule(v, "data bus"));
}

TEST_CASE("NVM protocol rules") {
  const std::vector<Command> ok = {cmd(K::Precharge, 0, 0, 1), cmd(K::Activate, 0, 0, 1),
                                   cmd(K::Read, 8, 0, 1), cmd(K::Precharge, 9, 0, 5),
                                   cmd(K::Activate, 9, 0, 5)};
  CHECK(validate_commands(ok, g, stt, ProtocolKind::NVM).empty());

  const std::vector<Command> other_bank = {cmd(K::Precharge, 0, 0, 1), cmd(K::Activate, 0, 1, 1)};
  const auto v = validate_commands(other_bank, g, stt, ProtocolKind::NVM);
  CHECK(has_rule(v, "command bus"));
  CHECK(has_rule(v, "NVM ACT without matching latched row"));

  const std::vector<Command> early_pre = {cmd(K::Precharge, 0, 0, 1), cmd(K::Activate, 0, 0, 1),
                                          cmd(K::Write, 8, 0, 1), cmd(K::Precharge, 25, 0, 2)};
  CHECK(has_rule(validate_commands(early_pre, g, stt, ProtocolKind::NVM), "tWR W->P"));
  // The pair exception does not extend to DRAM.
  const std::vector<Command> dram_pair = {cmd(K::Activate, 0, 0, 1), cmd(K::Precharge, 20, 0, 1),
                                          cmd(K::Activate, 20, 0, 1)};
  CHECK(has_rule(validate_commands(dram_pair, g, dram, ProtocolKind::DRAM), "command bus"));
}
