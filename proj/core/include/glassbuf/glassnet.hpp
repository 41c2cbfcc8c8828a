#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "glassbuf/adam.hpp"
#include "glassbuf/raster.hpp"
#include "glassbuf/tensor.hpp"

namespace glassbuf {

struct GlassNetConfig {
  bool positional_encoding  = true;
  int pe_frequencies        = 6;
  bool transparency_buffers = true;  // false: naive single G-buffer input, tau = 0
  std::array<int, 3> unet_widths = {16, 32, 64};
  int sigma_channels = 32;
  int tau_channels   = 32;
  int phi_channels   = 32;
  int h_width        = 32;
  int r_width        = 32;
  int s_width        = 16;
  std::uint64_t seed = 0;

  // Channels of one encoded 17-channel buffer.
  int encoded_channels() const { return positional_encoding ? buffer_channels * (2 * pe_frequencies + 1) : buffer_channels; }
  std::string to_json() const;
  static GlassNetConfig from_json(const std::string& text);
};

// Sum of per-buffer contributions kept in double precision, so the result is
// independent of the order in which buffers arrive. Backward hands the
// incoming gradient to every contribution unchanged.
class TauAccumulator {
 public:
  TauAccumulator(int channels, int height, int width);
  void add(const Tensor& contribution);
  // tau rounded to float; differentiable w.r.t. every added contribution.
  Tensor value() const;
  int count() const { return count_; }

 private:
  Shape shape_;
  DoubleVec sum_;
  std::vector<Tensor> parts_;  // kept only while a tape records
  int count_ = 0;
};

struct ForwardOptions {
  // Materialize every transparency buffer as an engine tensor before the
  // transparency stage (the all-resident layout) instead of one at a time.
  bool resident = false;
};

struct ForwardStats {
  std::size_t transparency_peak_bytes = 0;   // peak live engine bytes during the stage, above its start
  std::size_t resident_buffer_bytes   = 0;   // raw buffers held at once by the stage
  int buffers_seen = 0;
};

// Planar [17, H, W] copy of a buffer.
Tensor buffer_tensor(const FeatureBuffer& buffer);

class GlassNet {
 public:
  explicit GlassNet(const GlassNetConfig& config);

  const GlassNetConfig& config() const { return config_; }
  ParamSet& params() { return params_; }
  const ParamSet& params() const { return params_; }

  Tensor encode(const Tensor& buffer) const;  // positional encoding when enabled
  Tensor scene_encoder(const Tensor& encoded_gbuffer) const;                       // F -> sigma
  Tensor transparency_term(const Tensor& encoded_tbuffer, const Tensor& sigma) const;  // h(b_i, sigma)
  Tensor blend(const Tensor& sigma, const Tensor& tau) const;                     // B -> phi
  Tensor render(const Tensor& phi, const Tensor& direct) const;                   // R -> radiance
  Tensor supersample(const Tensor& image, const Tensor& hires_gbuffer) const;     // S -> 2x radiance

  // F -> streaming T -> B -> R; [3, H, W].
  Tensor forward(const BufferStack& stack, const ForwardOptions& options = {}, ForwardStats* stats = nullptr) const;

  // {"layers": [{"name", "shape", "params"}...], "parameter_count"}
  std::string layer_table_json() const;

 private:
  void add_conv(const std::string& name, int in, int out, int k);
  Tensor conv(const std::string& name, const Tensor& x, bool activation) const;
  void add_unet(const std::string& name, int in, int out);
  Tensor unet(const std::string& name, const Tensor& x) const;

  GlassNetConfig config_;
  ParamSet params_;
  int layer_index_ = 0;
};

RadianceImage tensor_to_image(const Tensor& t);
Tensor image_to_tensor(const RadianceImage& image);

}  // namespace glassbuf
