#include <iostream>
#include <string>
#include <vector>

#include "ampi_tools/commands.hpp"

int main(int argc, char** argv) {
  ampi::tools::tune_allocator();
  return ampi::tools::run_cli(std::vector<std::string>(argv, argv + argc), std::cout, std::cerr);
}
