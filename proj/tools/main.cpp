#include <iostream>

#include "rumourkit/cli.hpp"

int main(int argc, char** argv) {
  return rumourkit::cli::run({argv + 1, argv + argc}, std::cout, std::cerr);
}
