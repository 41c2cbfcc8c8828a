#pragma once

#include "glassbuf/tensor.hpp"

namespace glassbuf {

// Mean absolute difference; the subgradient at exact ties is 0. Only pred
// receives gradients.
Tensor l1_loss(const Tensor& pred, const Tensor& target);

// Mean SSIM over all channels and valid 11x11 windows (Gaussian, sigma 1.5),
// C1 = 0.01^2, C2 = 0.03^2 for a dynamic range of 1. Inputs are [C, H, W] with
// H, W >= 11 and are used as given (no clamping). Only pred receives gradients.
Tensor ssim(const Tensor& pred, const Tensor& target);
// (1 - ssim) / 2
Tensor dssim(const Tensor& pred, const Tensor& target);

// lambda * L1 + (1 - lambda) * DSSIM; with use_dssim false the result is the
// plain L1 loss and no SSIM node is recorded.
Tensor combined_loss(const Tensor& pred, const Tensor& target, float lambda, bool use_dssim);

// SSIM of two images in double precision, shared by the loss and the metrics.
double ssim_value(const float* a, const float* b, int channels, int height, int width);

}  // namespace glassbuf
