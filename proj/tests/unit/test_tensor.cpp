#include <doctest.h>

#include <cmath>

#include "glassbuf/adam.hpp"
#include "glassbuf/checkpoint.hpp"
#include "glassbuf/errors.hpp"
#include "glassbuf/loss.hpp"
#include "glassbuf/ops.hpp"
#include "oracles.hpp"

using namespace glassbuf;
using oracle::gradient_error;
using oracle::Projection;
using oracle::random_tensor;

namespace {

constexpr double per_op_tolerance = 1e-3;

// Keeps values at least `gap` away from zero so kinks stay outside the
// finite-difference stencil.
Tensor away_from_zero(Tensor t, float gap) {
  for (auto& v : t.values())
    if (std::abs(v) < gap) v = v < 0 ? -gap - std::abs(v) : gap + v;
  return t;
}

}  // namespace

TEST_CASE("conv2d matches a direct convolution") {
  for (int k : {1, 3}) {
    auto x = random_tensor({2, 5, 4}, 1), w = random_tensor({3, 2, k, k}, 2), b = random_tensor({3}, 3);
    auto y = ops::conv2d(x, w, b);
    REQUIRE(y.shape() == Shape{3, 5, 4});
    int r = k / 2;
    for (int o = 0; o < 3; o++)
      for (int i = 0; i < 5; i++)
        for (int j = 0; j < 4; j++) {
          double acc = b.data()[o];
          for (int c = 0; c < 2; c++)
            for (int di = 0; di < k; di++)
              for (int dj = 0; dj < k; dj++) {
                int yi = i + di - r, xj = j + dj - r;
                if (yi < 0 || yi >= 5 || xj < 0 || xj >= 4) continue;
                acc += double(w.data()[((o * 2 + c) * k + di) * k + dj]) * x.data()[(c * 5 + yi) * 4 + xj];
              }
          CHECK(y.data()[(o * 5 + i) * 4 + j] == doctest::Approx(acc).epsilon(1e-5));
        }
  }
}

TEST_CASE("finite-difference checks for every op") {
  SUBCASE("conv2d 3x3") {
    auto x = random_tensor({3, 6, 5}, 10), w = random_tensor({4, 3, 3, 3}, 11), b = random_tensor({4}, 12);
    Projection proj(4 * 6 * 5, 13);
    auto f = [&] { return proj(ops::conv2d(x, w, b)); };
    CHECK(gradient_error(f, x) < per_op_tolerance);
    CHECK(gradient_error(f, w) < per_op_tolerance);
    CHECK(gradient_error(f, b) < per_op_tolerance);
  }
  SUBCASE("conv2d 1x1") {
    auto x = random_tensor({5, 4, 4}, 20), w = random_tensor({3, 5, 1, 1}, 21), b = random_tensor({3}, 22);
    Projection proj(3 * 16, 23);
    auto f = [&] { return proj(ops::conv2d(x, w, b)); };
    CHECK(gradient_error(f, x) < per_op_tolerance);
    CHECK(gradient_error(f, w) < per_op_tolerance);
    CHECK(gradient_error(f, b) < per_op_tolerance);
  }
  SUBCASE("dense") {
    auto x = random_tensor({12}, 30), w = random_tensor({7, 12}, 31), b = random_tensor({7}, 32);
    Projection proj(7, 33);
    auto f = [&] { return proj(ops::dense(x, w, b)); };
    CHECK(gradient_error(f, x) < per_op_tolerance);
    CHECK(gradient_error(f, w) < per_op_tolerance);
    CHECK(gradient_error(f, b) < per_op_tolerance);
  }
  SUBCASE("leaky relu") {
    auto x = away_from_zero(random_tensor({40}, 40), 0.01f);
    Projection proj(40, 41);
    CHECK(gradient_error([&] { return proj(ops::leaky_relu(x, 0.2f)); }, x) < per_op_tolerance);
  }
  SUBCASE("softplus") {
    auto x = random_tensor({40}, 50, -4, 4);
    Projection proj(40, 51);
    CHECK(gradient_error([&] { return proj(ops::softplus(x)); }, x) < per_op_tolerance);
  }
  SUBCASE("max pool") {
    // distinct values on a coarse grid so no window has a near tie
    auto x = Tensor({2, 4, 6}).set_requires_grad(true);
    Pcg32 rng(60);
    for (std::size_t i = 0; i < x.numel(); i++) x.data()[i] = float(i) * 0.05f;
    for (int i = int(x.numel()) - 1; i > 0; i--) std::swap(x.data()[i], x.data()[rng.next_below(i + 1)]);
    Projection proj(2 * 2 * 3, 61);
    CHECK(gradient_error([&] { return proj(ops::max_pool2(x)); }, x) < per_op_tolerance);
  }
  SUBCASE("upsample") {
    auto x = random_tensor({2, 3, 2}, 70);
    Projection proj(2 * 6 * 4, 71);
    CHECK(gradient_error([&] { return proj(ops::upsample2(x)); }, x) < per_op_tolerance);
  }
  SUBCASE("concat") {
    auto a = random_tensor({2, 3, 3}, 80), b = random_tensor({1, 3, 3}, 81);
    Projection proj(27, 82);
    auto f = [&] { return proj(ops::concat({a, b})); };
    CHECK(gradient_error(f, a) < per_op_tolerance);
    CHECK(gradient_error(f, b) < per_op_tolerance);
  }
  SUBCASE("add, sub and scalar ops") {
    auto a = random_tensor({20}, 90), b = random_tensor({20}, 91);
    Projection proj(20, 92);
    auto f = [&] { return proj(ops::add_scalar(ops::scalar_mul(ops::sub(ops::add(a, b), b), 1.7f), 0.3f)); };
    CHECK(gradient_error(f, a) < per_op_tolerance);
    CHECK(gradient_error([&] { return proj(ops::sub(a, b)); }, b) < per_op_tolerance);
  }
  SUBCASE("reductions") {
    auto a = random_tensor({3, 4}, 100);
    CHECK(gradient_error([&] { return ops::sum_reduce(a); }, a) < per_op_tolerance);
    CHECK(gradient_error([&] { return ops::mean_reduce(a); }, a) < per_op_tolerance);
  }
  SUBCASE("positional encoding") {
    auto x = random_tensor({2, 3, 3}, 110, 0, 1);
    Projection proj(2 * 9 * 9, 111);
    CHECK(gradient_error([&] { return proj(ops::positional_encode(x, 4)); }, x, {}, 1e-4f) < per_op_tolerance);
  }
  SUBCASE("l1 loss") {
    // the loss is a float mean over many pixels, so the step must be large
    // enough to rise above rounding; offsets keep every residual past the kink
    auto t = random_tensor({3, 12, 12}, 121);
    auto p = away_from_zero(random_tensor({3, 12, 12}, 120), 0.05f);
    for (std::size_t i = 0; i < p.numel(); i++) p.data()[i] += t.data()[i];
    CHECK(gradient_error([&] { return l1_loss(p, t); }, p, {}, 2e-2f) < per_op_tolerance);
  }
  SUBCASE("ssim and dssim") {
    auto p = random_tensor({3, 13, 14}, 130, 0, 1), t = random_tensor({3, 13, 14}, 131, 0, 1);
    CHECK(gradient_error([&] { return ssim(p, t); }, p) < per_op_tolerance);
    CHECK(gradient_error([&] { return dssim(p, t); }, p) < per_op_tolerance);
    // residuals kept clear of the L1 kink
    auto q = away_from_zero(random_tensor({3, 13, 14}, 132, -0.1f, 0.1f), 0.05f);
    for (std::size_t i = 0; i < q.numel(); i++) q.data()[i] += t.data()[i];
    CHECK(gradient_error([&] { return combined_loss(q, t, 0.5f, true); }, q, {}, 1e-2f) < per_op_tolerance);
  }
}

TEST_CASE("positional encoding layout") {
  auto x = Tensor::from({1, 1, 1}, std::vector<float>{0.25f});
  auto y = ops::positional_encode(x, 2);
  REQUIRE(y.shape() == Shape{5, 1, 1});
  CHECK(y.data()[0] == 0.25f);
  CHECK(y.data()[1] == doctest::Approx(std::sin(pi * 0.25)));
  CHECK(y.data()[2] == doctest::Approx(std::cos(pi * 0.25)));
  CHECK(y.data()[3] == doctest::Approx(std::sin(2 * pi * 0.25)));
  CHECK(std::abs(y.data()[4]) < 1e-6f);
  CHECK(ops::positional_encode(Tensor({17, 4, 4}), 6).dim(0) == 221);
}

TEST_CASE("losses against direct formulas") {
  auto p = random_tensor({3, 16, 16}, 1, 0, 1), t = random_tensor({3, 16, 16}, 2, 0, 1);
  double l1 = 0;
  for (std::size_t i = 0; i < p.numel(); i++) l1 += std::abs(double(p.data()[i]) - t.data()[i]);
  CHECK(l1_loss(p, t).item() == doctest::Approx(l1 / p.numel()).epsilon(1e-6));

  RadianceImage a(16, 16), b(16, 16);
  for (int y = 0; y < 16; y++)
    for (int x = 0; x < 16; x++)
      for (int c = 0; c < 3; c++) {
        a.at(x, y)[c] = p.data()[(c * 16 + y) * 16 + x];
        b.at(x, y)[c] = t.data()[(c * 16 + y) * 16 + x];
      }
  CHECK(ssim(p, t).item() == doctest::Approx(oracle::ssim(a, b)).epsilon(1e-5));
  CHECK(ssim(p, p).item() == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(combined_loss(p, t, 1.0f, false).item() == l1_loss(p, t).item());
  CHECK(combined_loss(p, t, 0.5f, true).item() ==
        doctest::Approx(0.5 * l1_loss(p, t).item() + 0.5 * dssim(p, t).item()).epsilon(1e-6));
}

TEST_CASE("l1-only loss records no ssim node") {
  auto p = random_tensor({3, 12, 12}, 5), t = random_tensor({3, 12, 12}, 6);
  Tape a, b;
  {
    TapeScope s(a);
    combined_loss(p, t, 0.5f, false);
  }
  {
    TapeScope s(b);
    l1_loss(p, t);
  }
  CHECK(a.size() <= b.size() + 1);
}

TEST_CASE("shape errors name both shapes") {
  auto a = Tensor({2, 3}), b = Tensor({3, 2});
  CHECK_THROWS_AS(ops::add(a, b), ShapeError);
  try {
    ops::add(a, b);
  } catch (const ShapeError& e) {
    std::string msg = e.what();
    CHECK(msg.find("2") != std::string::npos);
    CHECK(msg.find("3") != std::string::npos);
  }
  CHECK_THROWS_AS(ops::conv2d(Tensor({2, 4, 4}), Tensor({3, 3, 3, 3}), Tensor({3})), ShapeError);
  CHECK_THROWS_AS(ops::max_pool2(Tensor({1, 3, 4})), ShapeError);
  CHECK_THROWS_AS(ops::concat({Tensor({1, 2, 2}), Tensor({1, 3, 2})}), ShapeError);
  CHECK_THROWS_AS(l1_loss(Tensor({3, 4, 4}), Tensor({3, 4, 5})), ShapeError);
}

TEST_CASE("inference records nothing and frees intermediates") {
  auto x = random_tensor({4, 8, 8}, 1), w = random_tensor({4, 4, 3, 3}, 2), b = random_tensor({4}, 3);
  CHECK(active_tape() == nullptr);
  std::size_t before = memory::live_bytes();
  {
    auto y = ops::leaky_relu(ops::conv2d(ops::conv2d(x, w, b), w, b));
    CHECK(memory::live_bytes() >= before + y.numel() * sizeof(float));
  }
  CHECK(memory::live_bytes() == before);
}

TEST_CASE("gradients accumulate over repeated use") {
  auto x = random_tensor({5}, 9);
  Tape tape;
  {
    TapeScope s(tape);
    auto y = ops::sum_reduce(ops::add(x, x));
    tape.backward(y);
  }
  auto* g = tape.find_grad(x);
  REQUIRE(g);
  for (int i = 0; i < 5; i++) CHECK(g[i] == 2.0f);
}

TEST_CASE("debug checks flag non-finite values") {
  set_debug_checks(true);
  auto x = Tensor::from({2}, std::vector<float>{1.0f, std::numeric_limits<float>::infinity()});
  CHECK_THROWS_AS(ops::scalar_mul(x, 2.0f), NumericError);
  set_debug_checks(false);
  CHECK_NOTHROW(ops::scalar_mul(x, 2.0f));
}

TEST_CASE("adam matches a hand-computed update") {
  ParamSet params;
  Tensor w = params.add("w", {2});
  w.data()[0] = 1.0f;
  w.data()[1] = -2.0f;
  AdamConfig cfg;
  cfg.lr           = 0.1f;
  cfg.weight_decay = 0.01f;
  auto state = make_adam(params, cfg);
  Gradients g = {{0.5f, -1.0f}};
  adam_step(params, g, state);
  // step 1: m_hat = g, v_hat = g^2, update = lr * g / (|g| + eps); decay first
  double w0 = 1.0 * (1 - 0.1 * 0.01) - 0.1 * 0.5 / (0.5 + 1e-8);
  double w1 = -2.0 * (1 - 0.1 * 0.01) - 0.1 * -1.0 / (1.0 + 1e-8);
  CHECK(params.at("w").data()[0] == doctest::Approx(w0).epsilon(1e-6));
  CHECK(params.at("w").data()[1] == doctest::Approx(w1).epsilon(1e-6));

  Gradients bad = {{std::nanf(""), 0.0f}};
  float saved   = params.at("w").data()[0];
  CHECK_THROWS_AS(adam_step(params, bad, state), NumericError);
  CHECK(params.at("w").data()[0] == saved);
}

TEST_CASE("gradient shards sum in order") {
  std::vector<Gradients> shards = {{{1.0f, 2.0f}}, {{3.0f, 4.0f}}, {{0.5f, 0.25f}}};
  auto s = sum_gradients(shards);
  CHECK(s[0][0] == 4.5f);
  CHECK(s[0][1] == 6.25f);
}

TEST_CASE("checkpoint round trip") {
  ParamSet params;
  Tensor a = params.add("layer.w", {2, 3});
  Tensor b = params.add("layer.b", {2});
  Pcg32 rng(1);
  for (auto& v : a.values()) v = rng.next_float();
  for (auto& v : b.values()) v = rng.next_float();
  auto dir = oracle::scratch_dir("ckpt");
  save_checkpoint(dir / "m.ckpt", R"({"hello": 1})", params);
  auto c = load_checkpoint(dir / "m.ckpt");
  CHECK(c.meta_json.find("hello") != std::string::npos);

  ParamSet other;
  other.add("layer.w", {2, 3});
  other.add("layer.b", {2});
  assign_parameters(other, c);
  for (std::size_t i = 0; i < 6; i++) CHECK(other.at("layer.w").data()[i] == params.at("layer.w").data()[i]);
  for (std::size_t i = 0; i < 2; i++) CHECK(other.at("layer.b").data()[i] == params.at("layer.b").data()[i]);

  ParamSet wrong;
  wrong.add("layer.w", {3, 2});
  wrong.add("layer.b", {2});
  CHECK_THROWS_AS(assign_parameters(wrong, c), ShapeError);
}
