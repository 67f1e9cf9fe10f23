#include <iostream>
#include <string>
#include <vector>

#include "residual_forge/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return residual_forge::cli::run(args, std::cout, std::cerr);
}
