#include <iostream>

#include "slimbench/cli.hpp"

int main(int argc, char** argv) { return slimbench::cli::run(argc, argv, std::cout, std::cerr); }
