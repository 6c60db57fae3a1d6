// Copyright (c) 2026, The fsloc Authors
// SPDX-License-Identifier: Apache-2.0

#include <iostream>

#include "fsloc/cli/cli.hpp"

int main(int argc, char** argv) { return fsloc::cli::dispatch(argc, argv, std::cout, std::cerr); }
