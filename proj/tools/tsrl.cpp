#include <iostream>
#include <string>
#include <vector>

#include "tsrl/cli/app.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return tsrl::cli::run(args, {std::cin, std::cout, std::cerr});
}
