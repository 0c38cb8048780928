// SPDX-License-Identifier: Apache-2.0
#include <iostream>

#include "rdsw/cli.hpp"

int main(int argc, char** argv) { return rdsw::cli::main(argc, argv, std::cout, std::cerr); }
