#include <iostream>
#include <string>
#include <vector>

#include "chkpt/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return chkpt::run_cli(args, std::cout, std::cerr);
}
