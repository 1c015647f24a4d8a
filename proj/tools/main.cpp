#include <iostream>

#include "recomb/cli/commands.hpp"

int main(int argc, char** argv) { return recomb::cli::run_cli(argc, argv, std::cout, std::cerr); }
