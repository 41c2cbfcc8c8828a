#include <benchmark/benchmark.h>

#include "glassbuf/bench.hpp"
#include "glassbuf/glassnet.hpp"
#include "glassbuf/ops.hpp"
#include "glassbuf/rng.hpp"

using namespace glassbuf;

namespace {

Tensor random_tensor(Shape shape, std::uint64_t seed) {
  Tensor t(std::move(shape));
  Pcg32 rng(seed);
  for (auto& v : t.values()) v = rng.uniform(-1, 1);
  return t;
}

void BM_Conv3x3(benchmark::State& state) {
  int c = int(state.range(0)), n = int(state.range(1));
  auto x = random_tensor({c, n, n}, 1), w = random_tensor({c, c, 3, 3}, 2), b = random_tensor({c}, 3);
  for (auto _ : state) benchmark::DoNotOptimize(ops::conv2d(x, w, b).data());
  state.SetItemsProcessed(state.iterations() * std::int64_t(c) * c * 9 * n * n);
}
BENCHMARK(BM_Conv3x3)->Args({16, 64})->Args({32, 64})->Args({64, 16});

void BM_Conv3x3Backward(benchmark::State& state) {
  int c = int(state.range(0)), n = int(state.range(1));
  auto x = random_tensor({c, n, n}, 1), w = random_tensor({c, c, 3, 3}, 2), b = random_tensor({c}, 3);
  w.set_requires_grad(true);
  for (auto _ : state) {
    Tape tape;
    TapeScope scope(tape);
    tape.backward(ops::mean_reduce(ops::conv2d(x, w, b)));
    benchmark::DoNotOptimize(tape.find_grad(w));
  }
}
BENCHMARK(BM_Conv3x3Backward)->Args({32, 64});

// Inference time of the full model as the transparent object count grows.
void BM_ForwardVsT(benchmark::State& state) {
  int t      = int(state.range(0));
  auto stack = synthetic_stack(t, 64, 64, 5);
  GlassNet net(GlassNetConfig{});
  for (auto _ : state) benchmark::DoNotOptimize(net.forward(stack).data());
  state.counters["t"] = t;
}
BENCHMARK(BM_ForwardVsT)->Arg(0)->Arg(1)->Arg(2)->Arg(4)->Arg(8)->Unit(benchmark::kMillisecond);

void BM_TrainStep(benchmark::State& state) {
  auto stack = synthetic_stack(2, 64, 64, 6);
  GlassNet net(GlassNetConfig{});
  auto target = random_tensor({3, 64, 64}, 7);
  for (auto _ : state) {
    Tape tape;
    TapeScope scope(tape);
    auto out = net.forward(stack);
    tape.backward(ops::mean_reduce(ops::sub(out, target)));
  }
}
BENCHMARK(BM_TrainStep)->Unit(benchmark::kMillisecond);

}  // namespace
