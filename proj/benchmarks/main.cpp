#include <benchmark/benchmark.h>

// The distribution's benchmark_main archive is LTO bytecode from another
// compiler release, so the entry point is built here.
BENCHMARK_MAIN();
