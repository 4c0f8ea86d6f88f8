#include <iostream>

#include "cathseg/cli/commands.hpp"

int main(int argc, char** argv) { return cathseg::cli::run(argc, argv, std::cout, std::cerr); }
