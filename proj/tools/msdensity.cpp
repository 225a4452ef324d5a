#include <iostream>

#include "msdensity/cli.hpp"

int main(int argc, char** argv) { return msd::run_cli(argc, argv, std::cout, std::cerr); }
