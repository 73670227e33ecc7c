// Copyright 2026 The cpfl Authors
// SPDX-License-Identifier: Apache-2.0

#include <iostream>
#include <string>
#include <vector>

#include "cpfl/cli/commands.hpp"

int main(int argc, char** argv) {
    const std::vector<std::string> args(argv + 1, argv + argc);
    return cpfl::cli::run_command(args, std::cout, std::cerr);
}
