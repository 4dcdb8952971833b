#include <iostream>

#include "cli.hpp"

int main(int argc, char** argv) { return v2gsim::cli::main(argc, argv, std::cout, std::cerr); }
