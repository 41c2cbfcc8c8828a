#include <cmath>

#include <json.hpp>

#include "glassbuf/errors.hpp"
#include "glassbuf/loss.hpp"
#include "glassbuf/metrics.hpp"

namespace glassbuf {

namespace {

void check_dims(const RadianceImage& a, const RadianceImage& b) {
  if (a.width != b.width || a.height != b.height)
    throw ShapeError("image size mismatch: " + std::to_string(a.width) + "x" + std::to_string(a.height) + " vs " +
                     std::to_string(b.width) + "x" + std::to_string(b.height));
}

double clamp01(float v) { return std::clamp(double(v), 0.0, 1.0); }

double psnr_from_mse(double m) { return m > 0 ? 10 * std::log10(1 / m) : std::numeric_limits<double>::infinity(); }

// Sums of |d| and d^2 over selected pixels (all when mask is null).
struct Sums {
  double abs = 0, sq = 0;
  std::size_t pixels = 0;
};

Sums sums(const RadianceImage& a, const RadianceImage& b, const CoverageMask* mask) {
  check_dims(a, b);
  if (mask && (mask->width != a.width || mask->height != a.height)) throw ShapeError("coverage mask size mismatch");
  Sums s;
  for (std::size_t i = 0; i < a.pixels.size(); i++) {
    if (mask && !mask->mask[i]) continue;
    for (int c = 0; c < 3; c++) {
      double d = clamp01(a.pixels[i][c]) - clamp01(b.pixels[i][c]);
      s.abs += std::abs(d);
      s.sq += d * d;
    }
    s.pixels++;
  }
  return s;
}

}  // namespace

double mae(const RadianceImage& pred, const RadianceImage& truth) {
  auto s = sums(pred, truth, nullptr);
  return s.abs / (3.0 * s.pixels);
}

double mse(const RadianceImage& pred, const RadianceImage& truth) {
  auto s = sums(pred, truth, nullptr);
  return s.sq / (3.0 * s.pixels);
}

double psnr(const RadianceImage& pred, const RadianceImage& truth) { return psnr_from_mse(mse(pred, truth)); }

double dssim_metric(const RadianceImage& pred, const RadianceImage& truth) {
  check_dims(pred, truth);
  std::size_t plane = pred.pixels.size();
  std::vector<float> a(3 * plane), b(3 * plane);
  for (std::size_t i = 0; i < plane; i++)
    for (int c = 0; c < 3; c++) {
      a[c * plane + i] = static_cast<float>(clamp01(pred.pixels[i][c]));
      b[c * plane + i] = static_cast<float>(clamp01(truth.pixels[i][c]));
    }
  return (1 - ssim_value(a.data(), b.data(), 3, pred.height, pred.width)) / 2;
}

double masked_mae(const RadianceImage& pred, const RadianceImage& truth, const CoverageMask& mask) {
  auto s = sums(pred, truth, &mask);
  return s.pixels ? s.abs / (3.0 * s.pixels) : std::numeric_limits<double>::quiet_NaN();
}

double masked_psnr(const RadianceImage& pred, const RadianceImage& truth, const CoverageMask& mask) {
  auto s = sums(pred, truth, &mask);
  return s.pixels ? psnr_from_mse(s.sq / (3.0 * s.pixels)) : std::numeric_limits<double>::quiet_NaN();
}

ImageMetrics compute_metrics(const RadianceImage& pred, const RadianceImage& truth, const CoverageMask& mask) {
  ImageMetrics m;
  m.mae            = mae(pred, truth);
  m.psnr           = psnr(pred, truth);
  m.dssim          = dssim_metric(pred, truth);
  m.covered_pixels = mask.count();
  if (m.covered_pixels) {
    m.t_mae  = masked_mae(pred, truth, mask);
    m.t_psnr = masked_psnr(pred, truth, mask);
  }
  return m;
}

void MetricsReport::finalize() {
  ImageMetrics agg;
  agg.id = "mean";
  agg.t_mae = agg.t_psnr = 0;
  std::size_t covered    = 0;
  for (auto& m : images) {
    agg.mae += m.mae;
    agg.psnr += m.psnr;
    agg.dssim += m.dssim;
    agg.covered_pixels += m.covered_pixels;
    if (m.covered_pixels) {
      agg.t_mae += m.t_mae;
      agg.t_psnr += m.t_psnr;
      covered++;
    }
  }
  double n = std::max<std::size_t>(images.size(), 1);
  agg.mae /= n;
  agg.psnr /= n;
  agg.dssim /= n;
  if (covered) {
    agg.t_mae /= covered;
    agg.t_psnr /= covered;
  } else {
    agg.t_mae = agg.t_psnr = std::numeric_limits<double>::quiet_NaN();
  }
  aggregate = agg;
}

namespace {

nlohmann::json number(double v) {
  if (std::isnan(v)) return nullptr;
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

nlohmann::json to_json(const ImageMetrics& m) {
  return {{"id", m.id}, {"mae", number(m.mae)}, {"psnr", number(m.psnr)}, {"dssim", number(m.dssim)},
      {"t_mae", number(m.t_mae)}, {"t_psnr", number(m.t_psnr)}, {"covered_pixels", m.covered_pixels},
      {"lpips", nullptr}};
}

}  // namespace

std::string MetricsReport::to_json() const {
  nlohmann::json j;
  j["split"]       = split;
  j["image_count"] = images.size();
  j["config_hash"] = config_hash;
  j["aggregate"]   = glassbuf::to_json(aggregate);
  j["images"]      = nlohmann::json::array();
  for (auto& m : images) j["images"].push_back(glassbuf::to_json(m));
  j["lpips_note"] = "LPIPS needs a pretrained perceptual network and is not computed";
  return j.dump(2);
}

}  // namespace glassbuf
