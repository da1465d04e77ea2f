#include <iostream>

#include "ran/cli/commands.hpp"

int main(int argc, char** argv) { return ran::run_cli(argc, argv, std::cout, std::cerr); }
