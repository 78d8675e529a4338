#include <iostream>
#include <string>
#include <vector>

#include "tacteit/cli.hpp"

int main(int argc, char** argv) {
  return tacteit::cli::run(std::vector<std::string>(argv, argv + argc), std::cout, std::cerr);
}
