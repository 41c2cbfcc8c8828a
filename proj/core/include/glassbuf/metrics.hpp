#pragma once

#include <limits>
#include <string>
#include <vector>

#include "glassbuf/image.hpp"

namespace glassbuf {

// All metrics compare images clamped to [0, 1] with peak 1. PSNR of identical
// images is +infinity; masked metrics over an empty mask are NaN.
double mae(const RadianceImage& pred, const RadianceImage& truth);
double mse(const RadianceImage& pred, const RadianceImage& truth);
double psnr(const RadianceImage& pred, const RadianceImage& truth);
double dssim_metric(const RadianceImage& pred, const RadianceImage& truth);
double masked_mae(const RadianceImage& pred, const RadianceImage& truth, const CoverageMask& mask);
double masked_psnr(const RadianceImage& pred, const RadianceImage& truth, const CoverageMask& mask);

struct ImageMetrics {
  std::string id;
  double mae   = 0;
  double psnr  = 0;
  double dssim = 0;
  double t_mae  = std::numeric_limits<double>::quiet_NaN();
  double t_psnr = std::numeric_limits<double>::quiet_NaN();
  std::size_t covered_pixels = 0;
};

ImageMetrics compute_metrics(const RadianceImage& pred, const RadianceImage& truth, const CoverageMask& mask);

// Aggregates are means over images; T.* means run over images with at least
// one covered pixel. An infinite per-image PSNR makes the mean infinite.
struct MetricsReport {
  std::vector<ImageMetrics> images;
  ImageMetrics aggregate;
  std::string split;
  std::string config_hash;

  void finalize();
  // PSNR infinities are written as the string "inf", NaN as null; LPIPS is
  // reported as null with a note.
  std::string to_json() const;
};

}  // namespace glassbuf
