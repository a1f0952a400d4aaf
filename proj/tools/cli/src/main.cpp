// Copyright 2026 The LDB Authors
// SPDX-License-Identifier: Apache-2.0

#include <iostream>

#include "ldb/cli/app.hpp"

int main(int argc, char** argv) { return ldb::cli::run_cli(argc, argv, std::cout, std::cerr); }
