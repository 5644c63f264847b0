#include <iostream>

#include "ehcoop/cli.hpp"

int main(int argc, char** argv) { return ehcoop::cli::run(argc, argv, std::cout, std::cerr); }
