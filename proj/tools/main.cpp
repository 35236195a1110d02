#include "nonreg/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return nonreg::run_cli(argc, argv, std::cout, std::cerr); }
