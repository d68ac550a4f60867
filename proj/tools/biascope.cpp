#include <iostream>

#include "biascope/cli.hpp"

int main(int argc, char** argv) { return biascope::cli::run(argc, argv, std::cout, std::cerr); }
