#include <string>
#include <vector>

#include "lqmarket/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return lqmarket::run_command(args);
}
