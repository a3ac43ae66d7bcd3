#include "pded/cli.hpp"

#include <iostream>

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return pded::cli::main(args, std::cout, std::cerr);
}
