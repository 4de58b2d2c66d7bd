#include <iostream>
#include <string>
#include <vector>

#include "holoflow/verify.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return holoflow::cli_run(args, std::cout, std::cerr);
}
