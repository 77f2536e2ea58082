#include <iostream>

#include "tpmtl/core/error.hpp"
#include "tpmtl/core/runtime.hpp"
#include "tpmtl/evalcli/cli.hpp"

int main(int argc, char** argv) {
  try {
    tpmtl::init_runtime();
  } catch (const tpmtl::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return tpmtl::kExitUsage;
  }
  return tpmtl::run_cli({argv + 1, argv + argc}, std::cout, std::cerr);
}
