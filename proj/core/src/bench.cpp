#include <sstream>

#include <json.hpp>

#include "glassbuf/bench.hpp"
#include "glassbuf/errors.hpp"
#include "glassbuf/glassnet.hpp"
#include "glassbuf/rng.hpp"

namespace glassbuf {

namespace {

void fill(FeatureBuffer& b, Pcg32& rng, bool transparent) {
  for (auto& v : b.data) v = rng.next_float();
  if (!transparent) return;
  for (int y = 0; y < b.height; y++)
    for (int x = 0; x < b.width; x++) b.at(tch::coverage, x, y) = b.at(tch::coverage, x, y) < 0.5f ? 0.0f : 1.0f;
}

}  // namespace

BufferStack synthetic_stack(int t, int width, int height, std::uint64_t seed) {
  BufferStack s;
  Pcg32 rng(hash_values(seed, t, width, height));
  s.gbuffer = GBuffer(width, height);
  fill(s.gbuffer, rng, false);
  for (int i = 0; i < t; i++) {
    TransparencyBuffer b(width, height);
    fill(b, rng, true);
    s.tbuffers.push_back(std::move(b));
    s.tbuffer_objects.push_back("synthetic" + std::to_string(i));
  }
  return s;
}

MemoryReport bench_memory(const std::vector<int>& t_values, int resolution, std::uint64_t seed) {
  if (t_values.empty()) throw ValidationError("bench-memory needs at least one t");
  if (resolution < 4 || resolution % 4) throw ValidationError("resolution must be a positive multiple of 4");
  for (int t : t_values)
    if (t < 1) throw ValidationError("t must be >= 1");
  GlassNetConfig config;
  config.seed = seed;
  GlassNet net(config);
  MemoryReport report;
  report.resolution = resolution;
  for (int t : t_values) {
    auto stack = synthetic_stack(t, resolution, resolution, seed);
    MemoryRow row;
    row.t                = t;
    row.per_buffer_bytes = stack.gbuffer.bytes();
    row.raw_stack_bytes  = stack.bytes();
    ForwardStats streaming, resident;
    net.forward(stack, {false}, &streaming);
    net.forward(stack, {true}, &resident);
    row.streaming_peak   = streaming.transparency_peak_bytes;
    row.resident_peak    = resident.transparency_peak_bytes;
    row.resident_buffers = resident.resident_buffer_bytes;
    report.rows.push_back(row);
  }
  return report;
}

std::string MemoryReport::csv() const {
  std::ostringstream out;
  out << "t,resolution,per_buffer_bytes,raw_stack_bytes,streaming_peak_bytes,resident_peak_bytes,resident_buffer_bytes\n";
  for (auto& r : rows)
    out << r.t << "," << resolution << "," << r.per_buffer_bytes << "," << r.raw_stack_bytes << "," << r.streaming_peak
        << "," << r.resident_peak << "," << r.resident_buffers << "\n";
  return out.str();
}

std::string MemoryReport::json() const {
  nlohmann::json series = nlohmann::json::array();
  for (auto& r : rows)
    series.push_back({{"t", r.t}, {"per_buffer_bytes", r.per_buffer_bytes}, {"raw_stack_bytes", r.raw_stack_bytes},
        {"streaming_peak_bytes", r.streaming_peak}, {"resident_peak_bytes", r.resident_peak},
        {"resident_buffer_bytes", r.resident_buffers}, {"resident_buffer_mb", r.resident_buffers / 1e6},
        {"per_buffer_mb", r.per_buffer_bytes / 1e6}});
  return nlohmann::json{{"resolution", resolution}, {"channels", buffer_channels}, {"series", series}}.dump(2);
}

}  // namespace glassbuf
