#include <iostream>

#include "cli.hpp"

int main(int argc, char** argv) { return m3hl::cli::run(argc, argv, std::cout, std::cerr); }
