#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace nvrowsim {

// Exit codes of the command-line front end.
enum ExitCode : int {
  kExitOk = 0,
  kExitIo = 1,
  kExitConfig = 2,
  kExitTrace = 3,
  kExitInvariant = 4,
};

// Entry point of the `nvrowsim` tool; `args` excludes the program name.
int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace nvrowsim
