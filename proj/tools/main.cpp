#include <string>
#include <vector>

#include "rmtlab/harness.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return rmtlab::harness::cli_main(args);
}
