// Copyright 2026 The adact Authors
// SPDX-License-Identifier: Apache-2.0

#include <iostream>

#include "adact/cli.hpp"

int main(int argc, char** argv) { return adact::cli::run(argc, argv, std::cout, std::cerr); }
