#include <iostream>

#include "changediag_cli/commands.hpp"

int main(int argc, char** argv) {
    std::ios::sync_with_stdio(false);
    return cdiag::cli::run({argv + 1, argv + argc}, std::cin, std::cout, std::cerr);
}
