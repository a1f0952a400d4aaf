// Copyright 2026 The LDB Authors
// SPDX-License-Identifier: Apache-2.0

// The packaged benchmark_main archive is built with a different LTO version
// than some toolchains accept, so the entry point lives here.

#include <benchmark/benchmark.h>

BENCHMARK_MAIN();
