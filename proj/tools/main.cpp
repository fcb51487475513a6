#include "dyad/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return dyad::cli::run(argc, argv, std::cout, std::cerr); }
