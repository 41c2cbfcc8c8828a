#include <benchmark/benchmark.h>

#include "glassbuf/oit.hpp"
#include "glassbuf/pathtrace.hpp"
#include "glassbuf/raster.hpp"
#include "glassbuf/scene.hpp"

using namespace glassbuf;

namespace {

const World& desk_world() {
  static World world = build_world(
      sample_instance(std::make_shared<const Scene>(load_scene(std::string(GLASSBUF_SCENES_DIR) + "/desk.json")), 0));
  return world;
}

void BM_Rasterize(benchmark::State& state) {
  int n = int(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(rasterize(desk_world(), n, n).bytes());
  state.SetItemsProcessed(state.iterations() * n * n);
}
BENCHMARK(BM_Rasterize)->Arg(64)->Arg(256)->Unit(benchmark::kMillisecond);

void BM_Trace(benchmark::State& state) {
  int spp = int(state.range(0));
  auto inst = sample_instance(std::make_shared<const Scene>(load_scene(std::string(GLASSBUF_SCENES_DIR) + "/desk.json")), 0);
  for (auto _ : state) benchmark::DoNotOptimize(trace_image(inst, 32, 32, spp, 1).pixels.data());
  state.SetItemsProcessed(state.iterations() * 32 * 32 * spp);
}
BENCHMARK(BM_Trace)->Arg(16)->Unit(benchmark::kMillisecond);

void BM_DepthPeel(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(depth_peel(desk_world(), 128, 128, 8).layers.data());
}
BENCHMARK(BM_DepthPeel)->Unit(benchmark::kMillisecond);

}  // namespace
