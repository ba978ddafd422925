// Copyright 2026 The GSWA Authors
// SPDX-License-Identifier: Apache-2.0

#include <iostream>

#include "gswa/cli.hpp"

int main(int argc, char** argv) { return gswa::cli::run_cli(argc, argv, std::cout, std::cerr); }
