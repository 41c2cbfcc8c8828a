#include <array>
#include <cmath>

#include "glassbuf/errors.hpp"
#include "glassbuf/loss.hpp"
#include "glassbuf/ops.hpp"

namespace glassbuf {

namespace {

constexpr int window   = 11;
constexpr double c1    = 0.01 * 0.01;
constexpr double c2    = 0.03 * 0.03;

const std::array<double, window>& gaussian() {
  static const auto w = [] {
    std::array<double, window> w{};
    double sum = 0;
    for (int i = 0; i < window; i++) {
      double d = i - window / 2;
      w[i]     = std::exp(-d * d / (2 * 1.5 * 1.5));
      sum += w[i];
    }
    for (auto& v : w) v /= sum;
    return w;
  }();
  return w;
}

// Valid-window Gaussian filter of an H x W plane -> (H-10) x (W-10).
void filter(const double* in, int H, int W, double* out, std::vector<double>& tmp) {
  auto& w = gaussian();
  int hv = H - window + 1, wv = W - window + 1;
  tmp.assign(std::size_t(H) * wv, 0.0);
  for (int r = 0; r < H; r++)
    for (int c = 0; c < wv; c++) {
      double s = 0;
      for (int j = 0; j < window; j++) s += w[j] * in[std::size_t(r) * W + c + j];
      tmp[std::size_t(r) * wv + c] = s;
    }
  for (int r = 0; r < hv; r++)
    for (int c = 0; c < wv; c++) {
      double s = 0;
      for (int i = 0; i < window; i++) s += w[i] * tmp[std::size_t(r + i) * wv + c];
      out[std::size_t(r) * wv + c] = s;
    }
}

// Adjoint of filter(): scatters a (H-10) x (W-10) map back onto H x W.
void filter_adjoint(const double* in, int H, int W, double* out, std::vector<double>& tmp) {
  auto& w = gaussian();
  int hv = H - window + 1, wv = W - window + 1;
  tmp.assign(std::size_t(H) * wv, 0.0);
  for (int r = 0; r < hv; r++)
    for (int c = 0; c < wv; c++) {
      double v = in[std::size_t(r) * wv + c];
      for (int i = 0; i < window; i++) tmp[std::size_t(r + i) * wv + c] += w[i] * v;
    }
  std::fill(out, out + std::size_t(H) * W, 0.0);
  for (int r = 0; r < H; r++)
    for (int c = 0; c < wv; c++) {
      double v = tmp[std::size_t(r) * wv + c];
      for (int j = 0; j < window; j++) out[std::size_t(r) * W + c + j] += w[j] * v;
    }
}

struct SsimMaps {
  std::vector<double> mx, my, sxx, syy, sxy;  // filtered moments (variances, covariance)
};

SsimMaps moments(const float* a, const float* b, int H, int W) {
  std::size_t n = std::size_t(H) * W;
  int hv = H - window + 1, wv = W - window + 1;
  std::size_t m = std::size_t(hv) * wv;
  std::vector<double> x(n), y(n), xx(n), yy(n), xy(n), tmp;
  for (std::size_t i = 0; i < n; i++) {
    x[i]  = a[i];
    y[i]  = b[i];
    xx[i] = x[i] * x[i];
    yy[i] = y[i] * y[i];
    xy[i] = x[i] * y[i];
  }
  SsimMaps s;
  s.mx.resize(m);
  s.my.resize(m);
  s.sxx.resize(m);
  s.syy.resize(m);
  s.sxy.resize(m);
  filter(x.data(), H, W, s.mx.data(), tmp);
  filter(y.data(), H, W, s.my.data(), tmp);
  filter(xx.data(), H, W, s.sxx.data(), tmp);
  filter(yy.data(), H, W, s.syy.data(), tmp);
  filter(xy.data(), H, W, s.sxy.data(), tmp);
  for (std::size_t i = 0; i < m; i++) {
    s.sxx[i] -= s.mx[i] * s.mx[i];
    s.syy[i] -= s.my[i] * s.my[i];
    s.sxy[i] -= s.mx[i] * s.my[i];
  }
  return s;
}

double ssim_at(const SsimMaps& s, std::size_t i) {
  double n1 = 2 * s.mx[i] * s.my[i] + c1, n2 = 2 * s.sxy[i] + c2;
  double d1 = s.mx[i] * s.mx[i] + s.my[i] * s.my[i] + c1, d2 = s.sxx[i] + s.syy[i] + c2;
  return n1 * n2 / (d1 * d2);
}

void check_image_pair(const char* op, const Tensor& pred, const Tensor& target) {
  if (pred.shape() != target.shape())
    throw ShapeError(std::string(op) + ": shape mismatch " + shape_string(pred.shape()) + " vs " +
                     shape_string(target.shape()));
}

}  // namespace

double ssim_value(const float* a, const float* b, int channels, int height, int width) {
  if (height < window || width < window)
    throw ShapeError("ssim: spatial extent " + std::to_string(height) + "x" + std::to_string(width) +
                     " is smaller than the 11x11 window");
  std::size_t plane = std::size_t(height) * width;
  double total = 0;
  std::size_t count = 0;
  for (int c = 0; c < channels; c++) {
    auto s = moments(a + c * plane, b + c * plane, height, width);
    for (std::size_t i = 0; i < s.mx.size(); i++) total += ssim_at(s, i);
    count += s.mx.size();
  }
  return total / count;
}

Tensor l1_loss(const Tensor& pred, const Tensor& target) {
  check_image_pair("l1_loss", pred, target);
  bool grad = active_tape() && pred.requires_grad();
  Tensor y({1});
  y.set_requires_grad(grad);
  double sum = 0;
  for (std::size_t i = 0; i < pred.numel(); i++) sum += std::abs(double(pred.data()[i]) - target.data()[i]);
  y.data()[0] = static_cast<float>(sum / pred.numel());
  if (grad) {
    active_tape()->record([=](Tape& tape) {
      const float* g = tape.find_grad(y);
      if (!g) return;
      auto d  = tape.grad(pred);
      float s = g[0] / static_cast<float>(pred.numel());
      for (std::size_t i = 0; i < d.size(); i++) {
        float diff = pred.data()[i] - target.data()[i];
        d[i] += diff > 0 ? s : (diff < 0 ? -s : 0.0f);
      }
    });
  }
  return y;
}

Tensor ssim(const Tensor& pred, const Tensor& target) {
  check_image_pair("ssim", pred, target);
  if (pred.rank() != 3) throw ShapeError("ssim: expected [C,H,W], got " + shape_string(pred.shape()));
  int C = pred.dim(0), H = pred.dim(1), W = pred.dim(2);
  bool grad = active_tape() && pred.requires_grad();
  Tensor y({1});
  y.set_requires_grad(grad);
  y.data()[0] = static_cast<float>(ssim_value(pred.data(), target.data(), C, H, W));
  if (grad) {
    active_tape()->record([=](Tape& tape) {
      const float* g = tape.find_grad(y);
      if (!g) return;
      auto d            = tape.grad(pred);
      std::size_t plane = std::size_t(H) * W;
      std::size_t m     = std::size_t(H - window + 1) * (W - window + 1);
      double scale      = g[0] / double(m * C);
      std::vector<double> ma(m), mb(m), mc(m), ta(plane), tb(plane), tc(plane), tmp;
      for (int c = 0; c < C; c++) {
        const float* a = pred.data() + c * plane;
        const float* b = target.data() + c * plane;
        auto s         = moments(a, b, H, W);
        for (std::size_t i = 0; i < m; i++) {
          double n1 = 2 * s.mx[i] * s.my[i] + c1, n2 = 2 * s.sxy[i] + c2;
          double d1 = s.mx[i] * s.mx[i] + s.my[i] * s.my[i] + c1, d2 = s.sxx[i] + s.syy[i] + c2;
          double v  = n1 * n2 / (d1 * d2);
          double dm = 2 * s.my[i] * n2 / (d1 * d2) - v * 2 * s.mx[i] / d1;  // d/d mu_x
          double dv = -v / d2;                                              // d/d sigma_x^2
          double dc = 2 * n1 / (d1 * d2);                                   // d/d sigma_xy
          ma[i] = dm - 2 * dv * s.mx[i] - dc * s.my[i];
          mb[i] = dv;
          mc[i] = dc;
        }
        filter_adjoint(ma.data(), H, W, ta.data(), tmp);
        filter_adjoint(mb.data(), H, W, tb.data(), tmp);
        filter_adjoint(mc.data(), H, W, tc.data(), tmp);
        float* dp = d.data() + c * plane;
        for (std::size_t q = 0; q < plane; q++)
          dp[q] += static_cast<float>(scale * (ta[q] + 2 * double(a[q]) * tb[q] + double(b[q]) * tc[q]));
      }
    });
  }
  return y;
}

Tensor dssim(const Tensor& pred, const Tensor& target) {
  return ops::scalar_mul(ops::add_scalar(ssim(pred, target), -1.0f), -0.5f);
}

Tensor combined_loss(const Tensor& pred, const Tensor& target, float lambda, bool use_dssim) {
  auto l1 = l1_loss(pred, target);
  if (!use_dssim) return l1;
  return ops::add(ops::scalar_mul(l1, lambda), ops::scalar_mul(dssim(pred, target), 1 - lambda));
}

}  // namespace glassbuf
