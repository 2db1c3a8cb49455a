#include <iostream>

#include "ctxmatch/cli.hpp"

int main(int argc, char** argv) { return ctxmatch::cli_main(argc, argv, std::cin, std::cout, std::cerr); }
