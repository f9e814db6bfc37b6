#include <iostream>

#include "kgr/cli.hpp"

int main(int argc, char** argv) { return kgr::cli::run(argc, argv, std::cout, std::cerr); }
