#include <iostream>

#include "adamil/cli.hpp"

int main(int argc, char** argv) { return adamil::cli::run(argc, argv, std::cout, std::cerr); }
