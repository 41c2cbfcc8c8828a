#include <cmath>
#include <numbers>

#include <Eigen/Core>

#include "glassbuf/errors.hpp"
#include "glassbuf/ops.hpp"

namespace glassbuf::ops {

namespace {

using MatR  = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapR  = Eigen::Map<MatR>;
using CMapR = Eigen::Map<const MatR>;
using VecF  = Eigen::Map<const Eigen::VectorXf>;

bool wants_grad(std::initializer_list<const Tensor*> inputs) {
  if (!active_tape()) return false;
  for (auto* t : inputs)
    if (t->requires_grad()) return true;
  return false;
}

Tensor output(Shape shape, bool grad) {
  Tensor t(std::move(shape));
  t.set_requires_grad(grad);
  return t;
}

void check_finite(const char* op, const Tensor& t) {
  if (!debug_checks()) return;
  for (float v : t.values())
    if (!std::isfinite(v)) throw NumericError(std::string("non-finite output from ") + op);
}

void require_rank(const char* op, const Tensor& t, int rank) {
  if (t.rank() != rank)
    throw ShapeError(std::string(op) + ": expected rank " + std::to_string(rank) + ", got " + shape_string(t.shape()));
}

void require_same(const char* op, const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape())
    throw ShapeError(std::string(op) + ": shape mismatch " + shape_string(a.shape()) + " vs " + shape_string(b.shape()));
}

// 3x3, pad 1: cols[(c*9 + ky*3 + kx), y*W + x] = x[c, y+ky-1, x+kx-1]
void im2col3(const float* x, int C, int H, int W, float* cols) {
  std::size_t hw = std::size_t(H) * W;
  for (int c = 0; c < C; c++) {
    const float* plane = x + c * hw;
    for (int ky = 0; ky < 3; ky++) {
      for (int kx = 0; kx < 3; kx++) {
        float* row = cols + (std::size_t(c) * 9 + ky * 3 + kx) * hw;
        for (int y = 0; y < H; y++) {
          int sy   = y + ky - 1;
          float* o = row + std::size_t(y) * W;
          if (sy < 0 || sy >= H) {
            std::fill(o, o + W, 0.0f);
            continue;
          }
          const float* s = plane + std::size_t(sy) * W;
          int dx         = kx - 1;
          for (int xx = 0; xx < W; xx++) {
            int sx = xx + dx;
            o[xx]  = (sx >= 0 && sx < W) ? s[sx] : 0.0f;
          }
        }
      }
    }
  }
}

void col2im3(const float* cols, int C, int H, int W, float* dx) {
  std::size_t hw = std::size_t(H) * W;
  for (int c = 0; c < C; c++) {
    float* plane = dx + c * hw;
    for (int ky = 0; ky < 3; ky++) {
      for (int kx = 0; kx < 3; kx++) {
        const float* row = cols + (std::size_t(c) * 9 + ky * 3 + kx) * hw;
        for (int y = 0; y < H; y++) {
          int sy = y + ky - 1;
          if (sy < 0 || sy >= H) continue;
          const float* g = row + std::size_t(y) * W;
          float* d       = plane + std::size_t(sy) * W;
          int off        = kx - 1;
          for (int xx = 0; xx < W; xx++) {
            int sx = xx + off;
            if (sx >= 0 && sx < W) d[sx] += g[xx];
          }
        }
      }
    }
  }
}

}  // namespace

Tensor conv2d(const Tensor& x, const Tensor& weight, const Tensor& bias) {
  require_rank("conv2d", x, 3);
  require_rank("conv2d weight", weight, 4);
  int C = x.dim(0), H = x.dim(1), W = x.dim(2);
  int Cout = weight.dim(0), k = weight.dim(2);
  if (weight.dim(1) != C || weight.dim(3) != k || (k != 1 && k != 3))
    throw ShapeError("conv2d: input " + shape_string(x.shape()) + " incompatible with weight " +
                     shape_string(weight.shape()));
  if (bias.shape() != Shape{Cout})
    throw ShapeError("conv2d: bias " + shape_string(bias.shape()) + " for weight " + shape_string(weight.shape()));
  int K       = C * k * k;
  Eigen::Index hw = Eigen::Index(H) * W;
  bool grad   = wants_grad({&x, &weight, &bias});
  auto y      = output({Cout, H, W}, grad);
  CMapR Wm(weight.data(), Cout, K);
  MapR Y(y.data(), Cout, hw);
  if (k == 1) {
    Y.noalias() = Wm * CMapR(x.data(), C, hw);
  } else {
    FloatVec cols(std::size_t(K) * hw);
    im2col3(x.data(), C, H, W, cols.data());
    Y.noalias() = Wm * CMapR(cols.data(), K, hw);
  }
  Y.colwise() += VecF(bias.data(), Cout);
  check_finite("conv2d", y);
  if (grad) {
    active_tape()->record([=](Tape& tape) {
      const float* g = tape.find_grad(y);
      if (!g) return;
      CMapR G(g, Cout, hw);
      CMapR Wt(weight.data(), Cout, K);
      FloatVec cols;
      const float* colp = x.data();
      if (k == 3 && (weight.requires_grad() || x.requires_grad())) {
        cols.resize(std::size_t(K) * hw);
        if (weight.requires_grad()) im2col3(x.data(), C, H, W, cols.data());
        colp = cols.data();
      }
      if (weight.requires_grad()) MapR(tape.grad(weight).data(), Cout, K).noalias() += G * CMapR(colp, K, hw).transpose();
      if (bias.requires_grad()) Eigen::Map<Eigen::VectorXf>(tape.grad(bias).data(), Cout) += G.rowwise().sum();
      if (x.requires_grad()) {
        if (k == 1) {
          MapR(tape.grad(x).data(), C, hw).noalias() += Wt.transpose() * G;
        } else {
          MapR(cols.data(), K, hw).noalias() = Wt.transpose() * G;
          col2im3(cols.data(), C, H, W, tape.grad(x).data());
        }
      }
    });
  }
  return y;
}

Tensor dense(const Tensor& x, const Tensor& weight, const Tensor& bias) {
  require_rank("dense weight", weight, 2);
  int M = weight.dim(0), N = weight.dim(1);
  if (int(x.numel()) != N || bias.shape() != Shape{M})
    throw ShapeError("dense: input " + shape_string(x.shape()) + ", weight " + shape_string(weight.shape()) +
                     ", bias " + shape_string(bias.shape()));
  bool grad = wants_grad({&x, &weight, &bias});
  auto y    = output({M}, grad);
  Eigen::Map<Eigen::VectorXf>(y.data(), M).noalias() = CMapR(weight.data(), M, N) * VecF(x.data(), N) + VecF(bias.data(), M);
  check_finite("dense", y);
  if (grad) {
    active_tape()->record([=](Tape& tape) {
      const float* g = tape.find_grad(y);
      if (!g) return;
      VecF G(g, M);
      if (weight.requires_grad()) MapR(tape.grad(weight).data(), M, N).noalias() += G * VecF(x.data(), N).transpose();
      if (bias.requires_grad()) Eigen::Map<Eigen::VectorXf>(tape.grad(bias).data(), M) += G;
      if (x.requires_grad())
        Eigen::Map<Eigen::VectorXf>(tape.grad(x).data(), N).noalias() += CMapR(weight.data(), M, N).transpose() * G;
    });
  }
  return y;
}

Tensor leaky_relu(const Tensor& x, float slope) {
  bool grad = wants_grad({&x});
  auto y    = output(x.shape(), grad);
  auto in   = x.values();
  auto out  = y.values();
  for (std::size_t i = 0; i < in.size(); i++) out[i] = in[i] > 0 ? in[i] : slope * in[i];
  check_finite("leaky_relu", y);
  if (grad) {
    active_tape()->record([=](Tape& tape) {
      const float* g = tape.find_grad(y);
      if (!g) return;
      auto dx = tape.grad(x);
      auto v  = x.values();
      for (std::size_t i = 0; i < v.size(); i++) dx[i] += v[i] > 0 ? g[i] : slope * g[i];
    });
  }
  return y;
}

Tensor softplus(const Tensor& x) {
  bool grad = wants_grad({&x});
  auto y    = output(x.shape(), grad);
  auto in   = x.values();
  auto out  = y.values();
  for (std::size_t i = 0; i < in.size(); i++) out[i] = std::max(in[i], 0.0f) + std::log1p(std::exp(-std::abs(in[i])));
  check_finite("softplus", y);
  if (grad) {
    active_tape()->record([=](Tape& tape) {
      const float* g = tape.find_grad(y);
      if (!g) return;
      auto dx = tape.grad(x);
      auto v  = x.values();
      for (std::size_t i = 0; i < v.size(); i++) {
        float s = v[i] >= 0 ? 1 / (1 + std::exp(-v[i])) : std::exp(v[i]) / (1 + std::exp(v[i]));
        dx[i] += g[i] * s;
      }
    });
  }
  return y;
}

Tensor max_pool2(const Tensor& x) {
  require_rank("max_pool2", x, 3);
  int C = x.dim(0), H = x.dim(1), W = x.dim(2);
  if (H % 2 || W % 2) throw ShapeError("max_pool2: odd spatial size " + shape_string(x.shape()));
  int h = H / 2, w = W / 2;
  bool grad = wants_grad({&x});
  auto y    = output({C, h, w}, grad);
  std::vector<std::uint32_t> arg(grad ? y.numel() : 0);
  const float* in = x.data();
  float* out      = y.data();
  for (int c = 0; c < C; c++) {
    for (int yy = 0; yy < h; yy++) {
      for (int xx = 0; xx < w; xx++) {
        std::size_t base = (std::size_t(c) * H + 2 * yy) * W + 2 * xx;
        std::size_t idx[4] = {base, base + 1, base + W, base + W + 1};
        std::size_t best   = idx[0];
        for (int k = 1; k < 4; k++)
          if (in[idx[k]] > in[best]) best = idx[k];
        std::size_t o = (std::size_t(c) * h + yy) * w + xx;
        out[o]        = in[best];
        if (grad) arg[o] = static_cast<std::uint32_t>(best);
      }
    }
  }
  check_finite("max_pool2", y);
  if (grad) {
    active_tape()->record([=, arg = std::move(arg)](Tape& tape) {
      const float* g = tape.find_grad(y);
      if (!g) return;
      auto dx = tape.grad(x);
      for (std::size_t o = 0; o < arg.size(); o++) dx[arg[o]] += g[o];
    });
  }
  return y;
}

Tensor upsample2(const Tensor& x) {
  require_rank("upsample2", x, 3);
  int C = x.dim(0), H = x.dim(1), W = x.dim(2);
  bool grad = wants_grad({&x});
  auto y    = output({C, 2 * H, 2 * W}, grad);
  const float* in = x.data();
  float* out      = y.data();
  for (int c = 0; c < C; c++)
    for (int yy = 0; yy < 2 * H; yy++) {
      const float* src = in + (std::size_t(c) * H + yy / 2) * W;
      float* dst       = out + (std::size_t(c) * 2 * H + yy) * 2 * W;
      for (int xx = 0; xx < 2 * W; xx++) dst[xx] = src[xx / 2];
    }
  if (grad) {
    active_tape()->record([=](Tape& tape) {
      const float* g = tape.find_grad(y);
      if (!g) return;
      auto dx = tape.grad(x);
      for (int c = 0; c < C; c++)
        for (int yy = 0; yy < 2 * H; yy++) {
          const float* src = g + (std::size_t(c) * 2 * H + yy) * 2 * W;
          float* dst       = dx.data() + (std::size_t(c) * H + yy / 2) * W;
          for (int xx = 0; xx < 2 * W; xx++) dst[xx / 2] += src[xx];
        }
    });
  }
  return y;
}

Tensor concat(const std::vector<Tensor>& parts) {
  if (parts.empty()) throw ShapeError("concat: no inputs");
  Shape rest(parts[0].shape().begin() + 1, parts[0].shape().end());
  int channels = 0;
  bool grad    = false;
  for (auto& p : parts) {
    Shape r(p.shape().begin() + 1, p.shape().end());
    if (p.rank() < 1 || r != rest)
      throw ShapeError("concat: " + shape_string(parts[0].shape()) + " vs " + shape_string(p.shape()));
    channels += p.dim(0);
    grad = grad || wants_grad({&p});
  }
  Shape shape = rest;
  shape.insert(shape.begin(), channels);
  auto y = output(shape, grad);
  std::size_t offset = 0;
  for (auto& p : parts) {
    std::copy(p.data(), p.data() + p.numel(), y.data() + offset);
    offset += p.numel();
  }
  if (grad) {
    active_tape()->record([=](Tape& tape) {
      const float* g = tape.find_grad(y);
      if (!g) return;
      std::size_t off = 0;
      for (auto& p : parts) {
        if (p.requires_grad()) {
          auto dx = tape.grad(p);
          for (std::size_t i = 0; i < p.numel(); i++) dx[i] += g[off + i];
        }
        off += p.numel();
      }
    });
  }
  return y;
}

namespace {

Tensor add_scaled(const char* op, const Tensor& a, const Tensor& b, float sb) {
  require_same(op, a, b);
  bool grad = wants_grad({&a, &b});
  auto y    = output(a.shape(), grad);
  for (std::size_t i = 0; i < a.numel(); i++) y.data()[i] = a.data()[i] + sb * b.data()[i];
  check_finite(op, y);
  if (grad) {
    active_tape()->record([=](Tape& tape) {
      const float* g = tape.find_grad(y);
      if (!g) return;
      if (a.requires_grad()) {
        auto da = tape.grad(a);
        for (std::size_t i = 0; i < da.size(); i++) da[i] += g[i];
      }
      if (b.requires_grad()) {
        auto db = tape.grad(b);
        for (std::size_t i = 0; i < db.size(); i++) db[i] += sb * g[i];
      }
    });
  }
  return y;
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) { return add_scaled("add", a, b, 1.0f); }
Tensor sub(const Tensor& a, const Tensor& b) { return add_scaled("sub", a, b, -1.0f); }

Tensor scalar_mul(const Tensor& a, float s) {
  bool grad = wants_grad({&a});
  auto y    = output(a.shape(), grad);
  for (std::size_t i = 0; i < a.numel(); i++) y.data()[i] = s * a.data()[i];
  check_finite("scalar_mul", y);
  if (grad) {
    active_tape()->record([=](Tape& tape) {
      const float* g = tape.find_grad(y);
      if (!g) return;
      auto da = tape.grad(a);
      for (std::size_t i = 0; i < da.size(); i++) da[i] += s * g[i];
    });
  }
  return y;
}

Tensor add_scalar(const Tensor& a, float s) {
  bool grad = wants_grad({&a});
  auto y    = output(a.shape(), grad);
  for (std::size_t i = 0; i < a.numel(); i++) y.data()[i] = a.data()[i] + s;
  check_finite("add_scalar", y);
  if (grad) {
    active_tape()->record([=](Tape& tape) {
      const float* g = tape.find_grad(y);
      if (!g) return;
      auto da = tape.grad(a);
      for (std::size_t i = 0; i < da.size(); i++) da[i] += g[i];
    });
  }
  return y;
}

Tensor sum_reduce(const Tensor& a) {
  bool grad  = wants_grad({&a});
  auto y     = output({1}, grad);
  double sum = 0;
  for (float v : a.values()) sum += v;
  y.data()[0] = static_cast<float>(sum);
  check_finite("sum_reduce", y);
  if (grad) {
    active_tape()->record([=](Tape& tape) {
      const float* g = tape.find_grad(y);
      if (!g) return;
      auto da = tape.grad(a);
      for (auto& d : da) d += g[0];
    });
  }
  return y;
}

Tensor mean_reduce(const Tensor& a) {
  bool grad  = wants_grad({&a});
  auto y     = output({1}, grad);
  double sum = 0;
  for (float v : a.values()) sum += v;
  float n     = static_cast<float>(a.numel());
  y.data()[0] = static_cast<float>(sum / a.numel());
  check_finite("mean_reduce", y);
  if (grad) {
    active_tape()->record([=](Tape& tape) {
      const float* g = tape.find_grad(y);
      if (!g) return;
      auto da = tape.grad(a);
      for (auto& d : da) d += g[0] / n;
    });
  }
  return y;
}

Tensor positional_encode(const Tensor& x, int frequencies) {
  if (frequencies < 1) throw ShapeError("positional_encode: frequency count must be >= 1");
  if (x.rank() < 1) throw ShapeError("positional_encode: scalar input");
  int C        = x.dim(0);
  int per      = 2 * frequencies + 1;
  std::size_t plane = x.numel() / std::max(C, 1);
  Shape shape  = x.shape();
  shape[0]     = C * per;
  bool grad    = wants_grad({&x});
  auto y       = output(shape, grad);
  constexpr double pi = std::numbers::pi;
  for (int c = 0; c < C; c++) {
    const float* v = x.data() + c * plane;
    float* base    = y.data() + std::size_t(c) * per * plane;
    std::copy(v, v + plane, base);
    for (int k = 0; k < frequencies; k++) {
      double f = std::ldexp(pi, k);
      float* s = base + (1 + 2 * k) * plane;
      float* o = base + (2 + 2 * k) * plane;
      for (std::size_t i = 0; i < plane; i++) {
        double a = f * v[i];
        s[i]     = static_cast<float>(std::sin(a));
        o[i]     = static_cast<float>(std::cos(a));
      }
    }
  }
  check_finite("positional_encode", y);
  if (grad) {
    active_tape()->record([=](Tape& tape) {
      const float* g = tape.find_grad(y);
      if (!g) return;
      auto dx = tape.grad(x);
      for (int c = 0; c < C; c++) {
        const float* v  = x.data() + c * plane;
        const float* gb = g + std::size_t(c) * per * plane;
        float* d        = dx.data() + c * plane;
        for (std::size_t i = 0; i < plane; i++) {
          double acc = gb[i];
          for (int k = 0; k < frequencies; k++) {
            double f = std::ldexp(pi, k);
            double a = f * v[i];
            acc += f * (std::cos(a) * gb[(1 + 2 * k) * plane + i] - std::sin(a) * gb[(2 + 2 * k) * plane + i]);
          }
          d[i] += static_cast<float>(acc);
        }
      }
    });
  }
  return y;
}

}  // namespace glassbuf::ops
