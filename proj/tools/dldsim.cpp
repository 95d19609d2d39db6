#include <iostream>

#include "dld/cli.hpp"

int main(int argc, char** argv) { return dld::run_cli(argc, argv, std::cout, std::cerr); }
