#include <iostream>

#include "crowdspan/cli.hpp"

int main(int argc, char** argv) { return crowdspan::run_cli(argc, argv, std::cout, std::cerr); }
