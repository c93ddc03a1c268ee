#include <iostream>

#include "crisisspot/cli.hpp"

int main(int argc, char** argv) {
    return crisisspot::run_cli(std::vector<std::string>(argv + 1, argv + argc), std::cout, std::cerr);
}
