#include <iostream>

#include "ptk_cli/cli.hpp"

int main(int argc, char** argv) { return ptk::cli::run(argc, argv, std::cout, std::cerr); }
