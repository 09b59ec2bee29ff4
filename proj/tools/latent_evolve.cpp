#include "lve/cli.hpp"

#include <iostream>

int main(int argc, char** argv) {
    return lve::cli::run_main(std::vector<std::string>(argv, argv + argc), std::cout, std::cerr);
}
