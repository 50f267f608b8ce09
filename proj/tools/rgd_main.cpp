#include <iostream>

#include "rgd/cli.hpp"

int main(int argc, char** argv) { return rgd::run_cli(argc, argv, std::cout, std::cerr); }
