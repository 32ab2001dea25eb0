#include <iostream>

#include "dmimo/cli.hpp"

int main(int argc, char** argv) { return dmimo::run_cli(argc, argv, std::cout, std::cerr); }
