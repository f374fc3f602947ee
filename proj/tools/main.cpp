#include <iostream>

#include "hetrax/cli.hpp"

int main(int argc, char** argv) {
    return hetrax::run_cli(argc, argv, std::cout, std::cerr);
}
