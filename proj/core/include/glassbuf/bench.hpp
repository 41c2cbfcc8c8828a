#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "glassbuf/raster.hpp"

namespace glassbuf {

struct MemoryRow {
  int t = 0;
  std::size_t per_buffer_bytes   = 0;  // 17 * w * h * 4
  std::size_t raw_stack_bytes    = 0;  // 17 * (t + 1) * w * h * 4
  std::size_t streaming_peak     = 0;  // transparency stage, one buffer at a time
  std::size_t resident_peak      = 0;  // transparency stage, all buffers materialized
  std::size_t resident_buffers   = 0;  // raw transparency buffers held by the resident stage
};

struct MemoryReport {
  int resolution = 0;
  std::vector<MemoryRow> rows;
  std::string csv() const;
  std::string json() const;
};

// Stack of random buffers with t transparency buffers; deterministic in seed.
BufferStack synthetic_stack(int t, int width, int height, std::uint64_t seed);

// Runs one forward pass per t and mode on synthetic buffers and reads the
// engine's allocation counters around the transparency stage.
MemoryReport bench_memory(const std::vector<int>& t_values, int resolution, std::uint64_t seed = 7);

}  // namespace glassbuf
