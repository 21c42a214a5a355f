#include <iostream>

#include "activefv/cli.hpp"

int main(int argc, char** argv) {
  return activefv::run_cli(argc, argv, std::cout, std::cerr);
}
