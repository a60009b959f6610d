#include "abfield/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return abfield::run_cli(argc, argv, std::cout, std::cerr); }
