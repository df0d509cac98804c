#include <iostream>

#include "aimassist/cli.hpp"

int main(int argc, char** argv) { return aimassist::run_cli(argc, argv, std::cout, std::cerr); }
