// SPDX-License-Identifier: Apache-2.0
#include <iostream>

#include "alignrank/app/commands.hpp"

int main(int argc, char** argv) {
    return alignrank::app::run_cli(argc, argv, std::cout, std::cerr);
}
