#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "nvrowsim/device.h"

namespace nvrowsim {

struct Violation {
  std::size_t index = 0;  // position in the command stream
  Cycle cycle = 0;
  std::string rule;
};

// Post-hoc legality check of an emitted command stream. Replays the stream
// against its own bank model and the X->Y constraint table; it shares no
// code with earliest_issue.
std::vector<Violation> validate_commands(const std::vector<Command>& commands,
                                         const Geometry& g, const TimingSet& t,
                                         ProtocolKind protocol);

}  // namespace nvrowsim
