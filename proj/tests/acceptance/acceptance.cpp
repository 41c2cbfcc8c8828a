// Acceptance checks, one per criterion. Run with --criterion N for a single
// one; without arguments all of them run in order. Every criterion prints
// exactly one PASS/FAIL line.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>

#include "glassbuf/bench.hpp"
#include "glassbuf/dataset.hpp"
#include "glassbuf/glassnet.hpp"
#include "glassbuf/loss.hpp"
#include "glassbuf/metrics.hpp"
#include "glassbuf/oit.hpp"
#include "glassbuf/pathtrace.hpp"
#include "glassbuf/raster.hpp"
#include "glassbuf/train.hpp"
#include "oracles.hpp"
#include "reference_net.hpp"

namespace fs = std::filesystem;
using namespace glassbuf;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* format, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, format, args...);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

float max_abs_diff(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) return std::numeric_limits<float>::infinity();
  float m = 0;
  for (std::size_t i = 0; i < a.numel(); i++) m = std::max(m, std::abs(a.data()[i] - b.data()[i]));
  return m;
}

std::map<std::string, std::string> snapshot(const fs::path& root) {
  std::map<std::string, std::string> out;
  for (auto& e : fs::recursive_directory_iterator(root))
    if (e.is_regular_file()) {
      std::ifstream in(e.path(), std::ios::binary);
      std::stringstream s;
      s << in.rdbuf();
      out[fs::relative(e.path(), root).string()] = s.str();
    }
  return out;
}

std::shared_ptr<const Scene> desk() {
  static auto scene = std::make_shared<const Scene>(load_scene(oracle::scenes_dir() / "desk.json"));
  return scene;
}

// ---- 1: permutation invariance ----

Outcome permutation_invariance() {
  auto start = std::chrono::steady_clock::now();
  Pcg32 rng(1);
  float worst = 0;
  int configs = 0;
  for (int k = 0; k < 20; k++) {
    int t = std::array{2, 4, 8}[k % 3];
    GlassNetConfig cfg;
    cfg.seed = 100 + k;
    GlassNet net(cfg);
    auto stack = rasterize(sample_instance(oracle::random_quad_scene(t, 200 + k), k), 32, 32);
    if (stack.t() != t) return {false, "scene generator produced the wrong object count"};
    auto base     = net.forward(stack);
    auto permuted = stack;
    for (int i = t - 1; i > 0; i--) {
      int j = int(rng.next_below(i + 1));
      std::swap(permuted.tbuffers[i], permuted.tbuffers[j]);
      std::swap(permuted.tbuffer_objects[i], permuted.tbuffer_objects[j]);
    }
    worst = std::max(worst, max_abs_diff(base, net.forward(permuted)));
    configs++;
  }
  double secs = seconds_since(start);
  return {worst <= 1e-5f && secs < 120,
      fmt("%d configurations, max |diff| = %.3g (<= 1e-5), %.1f s (< 120 s)", configs, worst, secs)};
}

// ---- 2: memory constancy ----

Outcome memory_constancy() {
  auto report = bench_memory({1, 2, 4, 8}, 256);
  bool same   = true;
  for (auto& r : report.rows) same &= r.streaming_peak == report.rows[0].streaming_peak;
  bool per_buffer = report.rows[0].per_buffer_bytes == 4456448;
  const double expected_mb[] = {8.912, 17.824, 35.648};
  double worst = 0;
  for (int i = 0; i < 3; i++) {
    double mb = report.rows[i + 1].resident_buffers / 1e6;
    worst     = std::max(worst, std::abs(mb - expected_mb[i]) / expected_mb[i]);
  }
  return {same && per_buffer && worst <= 0.01,
      fmt("streaming peak %zu bytes for t=1,2,4,8 (%s); per-buffer %zu bytes; resident %.3f/%.3f/%.3f MB, "
          "worst rel. error %.4f%%",
          report.rows[0].streaming_peak, same ? "identical" : "NOT identical", report.rows[0].per_buffer_bytes,
          report.rows[1].resident_buffers / 1e6, report.rows[2].resident_buffers / 1e6,
          report.rows[3].resident_buffers / 1e6, 100 * worst)};
}

// ---- 3: OIT oracle equivalence ----

Outcome oit_equivalence() {
  double worst = 0;
  int max_layers = 0;
  for (std::uint64_t k = 0; k < 50; k++) {
    int t      = 1 + int(k % 8);
    auto world = build_world(sample_instance(oracle::random_quad_scene(t, 900 + k), k));
    auto peeled = depth_peel(world, 32, 32, 8);
    auto all    = oracle::gather_fragments(world, 32, 32);
    auto a      = composite_sorted(peeled);
    for (std::size_t p = 0; p < a.pixels.size(); p++) {
      if (peeled.layers[p].size() != all.layers[p].size()) return {false, fmt("stack %d: fragment count differs", int(k))};
      max_layers = std::max(max_layers, int(all.layers[p].size()));
      auto ref   = oracle::composite_reference(all.layers[p], all.background[p]);
      for (int c = 0; c < 3; c++) worst = std::max(worst, double(std::abs(a.pixels[p][c] - ref[c])));
    }
  }
  LayerStack adversarial(1, 1, 2, {0, 0, 0});
  adversarial.at(0, 0) = {{{1, 0, 0}, 0.9f, 1, 0}, {{0, 0, 1}, 0.9f, 2, 1}};
  double gap = oracle::mae(composite_sorted(adversarial),
      composite_unsorted(adversarial, draw_order(adversarial), BlendOrder::back_to_front));
  return {worst <= 1e-6 && max_layers <= 8 && gap >= 0.1,
      fmt("50 stacks (up to %d layers), max |peeled - gathered| = %.3g (<= 1e-6); adversarial unsorted MAE %.3f (>= 0.1)",
          max_layers, worst, gap)};
}

// ---- 4: furnace ----

Outcome furnace() {
  auto start = std::chrono::steady_clock::now();
  auto scene = std::make_shared<const Scene>(load_scene(oracle::scenes_dir() / "furnace.json"));
  TraceStats stats;
  auto img = trace_image(sample_instance(scene, 0), 64, 64, 1024, 1, {}, &stats);
  double worst = 0;
  for (auto& p : img.pixels)
    for (int c = 0; c < 3; c++) worst = std::max(worst, std::abs(double(p[c]) - 1.0));
  double secs = seconds_since(start);
  return {worst <= 0.01 && secs < 300, fmt("64x64 at 1024 spp: max |L - 1| = %.4f (<= 0.01), %.1f s (< 300 s)", worst, secs)};
}

// ---- 5: autodiff ----

Outcome autodiff() {
  using oracle::gradient_error;
  using oracle::Projection;
  using oracle::random_tensor;
  std::vector<std::pair<std::string, double>> errors;
  auto check = [&](std::string name, double e) { errors.push_back({std::move(name), e}); };

  {
    auto x = random_tensor({3, 6, 6}, 1), w = random_tensor({4, 3, 3, 3}, 2), b = random_tensor({4}, 3);
    Projection p(4 * 36, 4);
    auto f = [&] { return p(ops::conv2d(x, w, b)); };
    check("conv3x3.x", gradient_error(f, x));
    check("conv3x3.w", gradient_error(f, w));
    check("conv3x3.b", gradient_error(f, b));
    auto w1 = random_tensor({4, 3, 1, 1}, 5);
    auto g  = [&] { return p(ops::conv2d(x, w1, b)); };
    check("conv1x1.x", gradient_error(g, x));
    check("conv1x1.w", gradient_error(g, w1));
  }
  {
    auto x = random_tensor({10}, 6), w = random_tensor({5, 10}, 7), b = random_tensor({5}, 8);
    Projection p(5, 9);
    auto f = [&] { return p(ops::dense(x, w, b)); };
    check("dense.x", gradient_error(f, x));
    check("dense.w", gradient_error(f, w));
  }
  {
    auto x = random_tensor({30}, 10);
    for (auto& v : x.values()) v += v < 0 ? -0.01f : 0.01f;  // clear of the kink
    Projection p(30, 11);
    check("leaky_relu", gradient_error([&] { return p(ops::leaky_relu(x, 0.2f)); }, x));
    check("softplus", gradient_error([&] { return p(ops::softplus(x)); }, x));
  }
  {
    Tensor x({2, 4, 4});
    x.set_requires_grad(true);
    for (std::size_t i = 0; i < x.numel(); i++) x.data()[i] = float((i * 7) % 32) * 0.05f;  // distinct in every window
    Projection p(8, 12);
    check("max_pool2", gradient_error([&] { return p(ops::max_pool2(x)); }, x));
    Projection q(2 * 64, 13);
    check("upsample2", gradient_error([&] { return q(ops::upsample2(x)); }, x));
  }
  {
    auto a = random_tensor({1, 3, 3}, 14), b = random_tensor({2, 3, 3}, 15);
    Projection p(27, 16);
    check("concat", gradient_error([&] { return p(ops::concat({a, b})); }, a));
    auto c = random_tensor({1, 3, 3}, 17);
    Projection q(9, 18);
    check("add/sub/scale", gradient_error([&] {
      return q(ops::add_scalar(ops::scalar_mul(ops::sub(ops::add(a, c), ops::scalar_mul(c, 0.5f)), 1.3f), 0.2f));
    }, c));
    check("mean", gradient_error([&] { return ops::mean_reduce(a); }, a));
  }
  {
    auto x = random_tensor({2, 3, 3}, 19, 0, 1);
    Projection p(2 * 13 * 9, 20);
    check("positional_encode", gradient_error([&] { return p(ops::positional_encode(x, 6)); }, x, {}, 1e-4f));
  }
  {
    auto t = random_tensor({3, 12, 12}, 21, 0.2f, 0.8f);
    auto y = random_tensor({3, 12, 12}, 22, 0.05f, 0.15f);
    for (std::size_t i = 0; i < y.numel(); i++) y.data()[i] = t.data()[i] + (i % 2 ? y.data()[i] : -y.data()[i]);
    check("l1", gradient_error([&] { return l1_loss(y, t); }, y, {}, 2e-2f));
    check("dssim", gradient_error([&] { return dssim(y, t); }, y, {}, 1e-2f));  // smooth; a wider step beats float rounding
    check("l1+dssim", gradient_error([&] { return combined_loss(y, t, 0.5f, true); }, y, {}, 1e-2f));
  }
  double worst_op = 0;
  std::string worst_name;
  for (auto& [name, e] : errors)
    if (!(e <= worst_op)) worst_op = e, worst_name = name;

  // end to end: default model at 16x16 with two transparent objects, 32
  // sampled parameters. The differences run through the double-precision
  // reference network; float32 forward passes are too noisy for a 1e-2 check
  // on a network this deep.
  GlassNetConfig cfg;
  cfg.seed = 5;
  GlassNet net(cfg);
  auto stack = rasterize(sample_instance(oracle::random_quad_scene(2, 31), 0), 16, 16);
  double forward_gap = 0;
  double e2e = oracle::end_to_end_gradient_error(net, stack, 32, 33, &forward_gap);
  return {worst_op < 1e-3 && e2e < 1e-2,
      fmt("%zu per-op checks, worst %.3g (%s, < 1e-3); end-to-end 16x16 on 32 parameters %.3g (< 1e-2), "
          "reference forward within %.2g",
          errors.size(), worst_op, worst_name.c_str(), e2e, forward_gap)};
}

// ---- 6: full model vs the naive baseline ----

TrainConfig desk_config(bool transparency_buffers) {
  TrainConfig c;
  c.scene       = oracle::scenes_dir() / "desk.json";
  c.resolution  = 64;
  c.counts      = {300, 32, 32};
  c.spp         = 128;
  c.max_steps   = 2000;
  c.batch_size  = 4;
  c.lr          = 5e-4f;
  c.seed        = 1;
  c.toggles.transparency_buffers = transparency_buffers;
  c.validate();
  return c;
}

Outcome naive_gap() {
  auto start = std::chrono::steady_clock::now();
  auto dir   = oracle::scratch_dir("criterion6");
  auto full = desk_config(true), naive = desk_config(false);
  auto scene = load_scene(full.scene);
  int transparent = 0;
  for (auto& o : scene.objects) transparent += o.transparent;

  gen_dataset(full, dir / "data");
  double gen_secs = seconds_since(start);
  train(full, dir / "data", dir / "full.ckpt");
  train(naive, dir / "data", dir / "naive.ckpt");
  auto a = evaluate(dir / "full.ckpt", dir / "data", Split::test);
  auto b = evaluate(dir / "naive.ckpt", dir / "data", Split::test);
  std::ofstream(dir / "full_report.json") << a.to_json();
  std::ofstream(dir / "naive_report.json") << b.to_json();
  double secs = seconds_since(start);
  double reduction = 1 - a.aggregate.t_mae / b.aggregate.t_mae;
  bool pass = transparent >= 2 && reduction >= 0.30 && a.aggregate.mae < b.aggregate.mae && secs <= 3600;
  return {pass, fmt("desk 64x64, %d transparent objects: T.MAE full %.4f vs naive %.4f (%.1f%% lower, >= 30%%), "
                    "MAE %.4f vs %.4f; %.0f s total (%.0f s dataset, <= 3600 s)",
                    transparent, a.aggregate.t_mae, b.aggregate.t_mae, 100 * reduction, a.aggregate.mae,
                    b.aggregate.mae, secs, gen_secs)};
}

// ---- 7: metrics ----

Outcome metrics() {
  Pcg32 rng(7);
  double worst_mae = 0, worst_psnr = 0, worst_dssim = 0, worst_tmae = 0, worst_tpsnr = 0;
  auto rel = [](double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-12); };
  for (int k = 0; k < 100; k++) {
    int w = 16 + int(rng.next_below(17)), h = 16 + int(rng.next_below(17));
    auto a = oracle::random_image(w, h, rng, -0.1f, 1.1f), b = oracle::random_image(w, h, rng, -0.1f, 1.1f);
    CoverageMask m(w, h);
    for (auto& v : m.mask) v = rng.next_float() < 0.3f;
    m.mask[0] = 1;
    auto r = compute_metrics(a, b, m);
    worst_mae   = std::max(worst_mae, std::abs(r.mae - oracle::mae(a, b)));
    worst_psnr  = std::max(worst_psnr, rel(r.psnr, oracle::psnr(a, b)));
    worst_dssim = std::max(worst_dssim, std::abs(r.dssim - oracle::dssim(a, b)));
    worst_tmae  = std::max(worst_tmae, std::abs(r.t_mae - oracle::mae(a, b, &m)));
    worst_tpsnr = std::max(worst_tpsnr, rel(r.t_psnr, oracle::psnr(a, b, &m)));
  }
  RadianceImage x(32, 32), y(32, 32);
  for (auto& p : x.pixels) p = {0.4f, 0.4f, 0.4f};
  for (auto& p : y.pixels) p = {0.5f, 0.5f, 0.5f};
  double p20 = psnr(x, y);
  bool pass = worst_mae <= 1e-6 && worst_psnr <= 1e-6 && worst_dssim <= 1e-4 && worst_tmae <= 1e-6 &&
              worst_tpsnr <= 1e-6 && std::abs(p20 - 20.0) <= 1e-4;
  return {pass, fmt("100 pairs: |dMAE| %.2g, rel dPSNR %.2g, |dDSSIM| %.2g, |dT.MAE| %.2g, rel dT.PSNR %.2g; "
                    "constant 0.1 offset PSNR = %.6f dB",
                    worst_mae, worst_psnr, worst_dssim, worst_tmae, worst_tpsnr, p20)};
}

// ---- 8: buffer layout ----

Outcome layout() {
  for (int t = 0; t <= 8; t++) {
    auto stack = rasterize(sample_instance(oracle::random_quad_scene(t, 40 + t), 0), 8, 8);
    std::size_t channels = 0;
    channels += stack.gbuffer.data.size() / stack.gbuffer.plane();
    for (auto& b : stack.tbuffers) channels += b.data.size() / b.plane();
    if (stack.t() != t || int(channels) != 17 * (t + 1) || stack.total_channels() != 17 * (t + 1))
      return {false, fmt("t = %d: %zu channels", t, channels)};
  }
  return {true, "17 (t + 1) channels for t = 0..8, counted from the allocated planes"};
}

// ---- 9: determinism ----

Outcome determinism() {
  auto dir = oracle::scratch_dir("criterion9");
  TrainConfig c  = desk_config(true);
  c.resolution   = 16;
  c.counts       = {3, 1, 1};
  c.spp          = 8;
  gen_dataset(c, dir / "a");
  gen_dataset(c, dir / "b");
  bool dataset_same = snapshot(dir / "a") == snapshot(dir / "b");

  auto inst = sample_instance(desk(), 17);
  auto r1 = rasterize(inst, 32, 32), r2 = rasterize(inst, 32, 32);
  bool raster_same = r1.gbuffer == r2.gbuffer && r1.t() == r2.t();
  for (int i = 0; raster_same && i < r1.t(); i++) raster_same = r1.tbuffers[i] == r2.tbuffers[i];

  bool trace_same = trace_image(inst, 24, 24, 8, 3) == trace_image(inst, 24, 24, 8, 3);

  GlassNetConfig cfg;
  cfg.seed = 2;
  auto f1 = GlassNet(cfg).forward(r1), f2 = GlassNet(cfg).forward(r1);
  bool forward_same = f1.shape() == f2.shape() && std::equal(f1.data(), f1.data() + f1.numel(), f2.data());

  auto yes = [](bool b) { return b ? "identical" : "DIFFERENT"; };
  return {dataset_same && raster_same && trace_same && forward_same,
      fmt("gen-dataset %s, rasterize %s, trace_image %s, forward %s", yes(dataset_same), yes(raster_same),
          yes(trace_same), yes(forward_same))};
}

}  // namespace

int main(int argc, char** argv) {
  const std::map<int, std::function<Outcome()>> criteria = {{1, permutation_invariance}, {2, memory_constancy},
      {3, oit_equivalence}, {4, furnace}, {5, autodiff}, {6, naive_gap}, {7, metrics}, {8, layout}, {9, determinism}};
  std::vector<int> selected;
  for (int i = 1; i < argc; i++) {
    if (std::strcmp(argv[i], "--criterion") == 0 && i + 1 < argc) {
      selected.push_back(std::atoi(argv[++i]));
    } else {
      std::fprintf(stderr, "usage: %s [--criterion N]...\n", argv[0]);
      return 2;
    }
  }
  if (selected.empty())
    for (auto& [n, f] : criteria) selected.push_back(n);

  int failures = 0;
  for (int n : selected) {
    auto it = criteria.find(n);
    if (it == criteria.end()) {
      std::printf("FAIL criterion %d: no such criterion\n", n);
      failures++;
      continue;
    }
    Outcome o;
    try {
      o = it->second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    std::printf("%s criterion %d: %s\n", o.pass ? "PASS" : "FAIL", n, o.detail.c_str());
    std::fflush(stdout);
    failures += !o.pass;
  }
  return failures ? 1 : 0;
}
