#include <iostream>
#include <string>
#include <vector>

#include "nvrowsim/cli.h"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return nvrowsim::cli_main(args, std::cout, std::cerr);
}
