#include <iostream>

#include "lobexec_cli/commands.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return lobexec::cli::run(args, std::cout, std::cerr);
}
