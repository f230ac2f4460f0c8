#include <iostream>

#include "mapek/cli.hpp"

int main(int argc, char** argv) { return mapek::run_cli(argc, argv, std::cout, std::cerr); }
