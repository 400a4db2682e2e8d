#include <iostream>

#include "spcnn_cli/commands.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return spcnn::cli::run(args, std::cout, std::cerr);
}
