#include <cstdlib>
#include <cstring>
#include <iostream>

#include "cylqg/acceptance.hpp"

int main(int argc, char** argv) {
  cylqg::AcceptanceOptions opt;
  for (int i = 1; i < argc; ++i) {
    if (std::strcmp(argv[i], "--verbose") == 0) opt.verbose = true;
    if (std::strcmp(argv[i], "--threads") == 0 && i + 1 < argc)
      opt.threads = std::atoi(argv[++i]);
  }
  return cylqg::run_acceptance(std::cout, opt);
}
