#include "sensespace/cli.hpp"

#include <iostream>

int main(int argc, char** argv) {
  return sensespace::cli::run(argc, argv, std::cout, std::cerr);
}
