// SPDX-License-Identifier: Apache-2.0

#include <iostream>

#include "prbench/cli.hpp"

int main(int argc, char** argv) { return prbench::run_cli(argc, argv, std::cout, std::cerr); }
