#include <cmath>

#include <json.hpp>

#include "glassbuf/errors.hpp"
#include "glassbuf/glassnet.hpp"
#include "glassbuf/ops.hpp"
#include "glassbuf/rng.hpp"

namespace glassbuf {

using nlohmann::json;

std::string GlassNetConfig::to_json() const {
  json j = {{"positional_encoding", positional_encoding}, {"pe_frequencies", pe_frequencies},
      {"transparency_buffers", transparency_buffers}, {"unet_widths", unet_widths}, {"sigma_channels", sigma_channels},
      {"tau_channels", tau_channels}, {"phi_channels", phi_channels}, {"h_width", h_width}, {"r_width", r_width},
      {"s_width", s_width}, {"seed", seed}};
  return j.dump();
}

GlassNetConfig GlassNetConfig::from_json(const std::string& text) {
  auto j = json::parse(text);
  GlassNetConfig c;
  c.positional_encoding  = j.value("positional_encoding", c.positional_encoding);
  c.pe_frequencies       = j.value("pe_frequencies", c.pe_frequencies);
  c.transparency_buffers = j.value("transparency_buffers", c.transparency_buffers);
  c.unet_widths          = j.value("unet_widths", c.unet_widths);
  c.sigma_channels       = j.value("sigma_channels", c.sigma_channels);
  c.tau_channels         = j.value("tau_channels", c.tau_channels);
  c.phi_channels         = j.value("phi_channels", c.phi_channels);
  c.h_width              = j.value("h_width", c.h_width);
  c.r_width              = j.value("r_width", c.r_width);
  c.s_width              = j.value("s_width", c.s_width);
  c.seed                 = j.value("seed", c.seed);
  return c;
}

// -----------------------------------------------------------------------------
// TAU
// -----------------------------------------------------------------------------

TauAccumulator::TauAccumulator(int channels, int height, int width)
    : shape_{channels, height, width}, sum_(shape_numel(shape_), 0.0) {}

void TauAccumulator::add(const Tensor& contribution) {
  if (contribution.shape() != shape_)
    throw ShapeError("tau accumulate: contribution " + shape_string(contribution.shape()) + " vs tau " +
                     shape_string(shape_));
  const float* c = contribution.data();
  for (std::size_t i = 0; i < sum_.size(); i++) sum_[i] += c[i];
  if (active_tape() && contribution.requires_grad()) parts_.push_back(contribution);
  count_++;
}

Tensor TauAccumulator::value() const {
  Tensor tau(shape_);
  for (std::size_t i = 0; i < sum_.size(); i++) tau.data()[i] = static_cast<float>(sum_[i]);
  if (active_tape() && !parts_.empty()) {
    tau.set_requires_grad(true);
    active_tape()->record([tau, parts = parts_](Tape& tape) {
      const float* g = tape.find_grad(tau);
      if (!g) return;
      for (auto& p : parts) {
        auto d = tape.grad(p);
        for (std::size_t i = 0; i < d.size(); i++) d[i] += g[i];
      }
    });
  }
  return tau;
}

// -----------------------------------------------------------------------------
// MODEL
// -----------------------------------------------------------------------------

Tensor buffer_tensor(const FeatureBuffer& buffer) {
  return Tensor::from({buffer_channels, buffer.height, buffer.width}, buffer.data);
}

RadianceImage tensor_to_image(const Tensor& t) {
  if (t.rank() != 3 || t.dim(0) != 3) throw ShapeError("expected [3,H,W] image tensor, got " + shape_string(t.shape()));
  int H = t.dim(1), W = t.dim(2);
  RadianceImage img(W, H);
  std::size_t plane = std::size_t(H) * W;
  for (std::size_t i = 0; i < plane; i++) img.pixels[i] = {t.data()[i], t.data()[plane + i], t.data()[2 * plane + i]};
  return img;
}

Tensor image_to_tensor(const RadianceImage& image) {
  Tensor t({3, image.height, image.width});
  std::size_t plane = image.pixels.size();
  for (std::size_t i = 0; i < plane; i++)
    for (int c = 0; c < 3; c++) t.data()[c * plane + i] = image.pixels[i][c];
  return t;
}

void GlassNet::add_conv(const std::string& name, int in, int out, int k) {
  Tensor w = params_.add(name + ".w", {out, in, k, k});  // handle; add() may reallocate
  params_.add(name + ".b", {out});
  // He-uniform with a stream fixed by the layer index
  Pcg32 rng(hash_values(config_.seed, layer_index_++));
  float bound = std::sqrt(6.0f / float(in * k * k));
  for (auto& v : w.values()) v = rng.uniform(-bound, bound);
}

Tensor GlassNet::conv(const std::string& name, const Tensor& x, bool activation) const {
  auto y = ops::conv2d(x, params_.at(name + ".w"), params_.at(name + ".b"));
  return activation ? ops::leaky_relu(y, 0.2f) : y;
}

// Three-level U-Net: a 1x1 stem to the first width, 3x3 stages at full, half
// and quarter resolution, nearest upsampling with skip concatenation, and a
// linear 1x1 head.
void GlassNet::add_unet(const std::string& name, int in, int out) {
  auto [w0, w1, w2] = config_.unet_widths;
  add_conv(name + ".stem", in, w0, 1);
  add_conv(name + ".enc0", w0, w0, 3);
  add_conv(name + ".enc1", w0, w1, 3);
  add_conv(name + ".mid", w1, w2, 3);
  add_conv(name + ".dec1", w2 + w1, w1, 3);
  add_conv(name + ".dec0", w1 + w0, w0, 3);
  add_conv(name + ".head", w0, out, 1);
}

Tensor GlassNet::unet(const std::string& name, const Tensor& x) const {
  if (x.dim(1) % 4 || x.dim(2) % 4)
    throw ShapeError(name + ": spatial size must be a multiple of 4, got " + shape_string(x.shape()));
  auto s  = conv(name + ".stem", x, true);
  auto e0 = conv(name + ".enc0", s, true);
  auto e1 = conv(name + ".enc1", ops::max_pool2(e0), true);
  auto m  = conv(name + ".mid", ops::max_pool2(e1), true);
  auto d1 = conv(name + ".dec1", ops::concat({ops::upsample2(m), e1}), true);
  auto d0 = conv(name + ".dec0", ops::concat({ops::upsample2(d1), e0}), true);
  return conv(name + ".head", d0, false);
}

GlassNet::GlassNet(const GlassNetConfig& config) : config_(config) {
  if (config.positional_encoding && config.pe_frequencies < 1) throw ValidationError("pe_frequencies must be >= 1");
  int enc = config.encoded_channels();
  add_unet("F", enc, config.sigma_channels);
  if (config.transparency_buffers) {
    add_conv("h.0", enc + config.sigma_channels, config.h_width, 1);
    add_conv("h.1", config.h_width, config.h_width, 3);
    add_conv("h.2", config.h_width, config.tau_channels, 3);
  }
  add_unet("B", config.sigma_channels + config.tau_channels, config.phi_channels);
  add_conv("R.0", config.phi_channels + 3, config.r_width, 3);
  add_conv("R.1", config.r_width, config.r_width, 1);
  add_conv("R.2", config.r_width, config.r_width, 1);
  add_conv("R.3", config.r_width, 3, 1);
  add_conv("S.0", 3 + buffer_channels, config.s_width, 3);
  add_conv("S.1", config.s_width, config.s_width, 3);
  add_conv("S.2", config.s_width, 3, 1);
  // the residual starts at zero, so an untrained S is nearest upsampling
  for (auto name : {"S.2.w", "S.2.b"}) {
    auto t = params_.at(name);
    std::fill(t.data(), t.data() + t.numel(), 0.0f);
  }
}

Tensor GlassNet::encode(const Tensor& buffer) const {
  if (buffer.rank() != 3 || buffer.dim(0) != buffer_channels)
    throw ShapeError("expected a [17,H,W] buffer, got " + shape_string(buffer.shape()));
  return config_.positional_encoding ? ops::positional_encode(buffer, config_.pe_frequencies) : buffer;
}

Tensor GlassNet::scene_encoder(const Tensor& encoded_gbuffer) const { return unet("F", encoded_gbuffer); }

Tensor GlassNet::transparency_term(const Tensor& encoded_tbuffer, const Tensor& sigma) const {
  if (!config_.transparency_buffers) throw ValidationError("model was built without transparency buffers");
  auto x = conv("h.0", ops::concat({encoded_tbuffer, sigma}), true);
  x      = conv("h.1", x, true);
  return conv("h.2", x, false);
}

Tensor GlassNet::blend(const Tensor& sigma, const Tensor& tau) const { return unet("B", ops::concat({sigma, tau})); }

Tensor GlassNet::render(const Tensor& phi, const Tensor& direct) const {
  auto x = conv("R.0", ops::concat({phi, direct}), true);
  x      = conv("R.1", x, true);
  x      = conv("R.2", x, true);
  return ops::softplus(conv("R.3", x, false));
}

Tensor GlassNet::supersample(const Tensor& image, const Tensor& hires_gbuffer) const {
  if (image.rank() != 3 || image.dim(0) != 3 || hires_gbuffer.rank() != 3 || hires_gbuffer.dim(0) != buffer_channels ||
      hires_gbuffer.dim(1) != 2 * image.dim(1) || hires_gbuffer.dim(2) != 2 * image.dim(2))
    throw ShapeError("supersample: image " + shape_string(image.shape()) + " needs a G-buffer of twice its size, got " +
                     shape_string(hires_gbuffer.shape()));
  auto up = ops::upsample2(image);
  auto x  = conv("S.0", ops::concat({up, hires_gbuffer}), true);
  x       = conv("S.1", x, true);
  return ops::add(up, conv("S.2", x, false));
}

namespace {

Tensor direct_channels(const GBuffer& g) {
  Tensor t({3, g.height, g.width});
  std::copy(g.channel(gch::ld), g.channel(gch::ld) + 3 * g.plane(), t.data());
  return t;
}

}  // namespace

Tensor GlassNet::forward(const BufferStack& stack, const ForwardOptions& options, ForwardStats* stats) const {
  int H = stack.gbuffer.height, W = stack.gbuffer.width;
  for (auto& b : stack.tbuffers)
    if (b.width != W || b.height != H) throw ShapeError("transparency buffer size differs from the G-buffer");

  Tensor sigma = scene_encoder(encode(buffer_tensor(stack.gbuffer)));

  Tensor tau;
  if (!config_.transparency_buffers) {
    tau = Tensor({config_.tau_channels, H, W});
  } else {
    // Only the accumulator, the current buffer and its contribution are alive
    // at any time unless the resident layout was requested.
    std::size_t base = memory::live_bytes();
    memory::reset_peak();
    std::vector<Tensor> resident;
    if (options.resident)
      for (auto& b : stack.tbuffers) resident.push_back(buffer_tensor(b));
    std::size_t resident_bytes = memory::live_bytes() - base;
    TauAccumulator acc(config_.tau_channels, H, W);
    for (int i = 0; i < stack.t(); i++) {
      Tensor raw = options.resident ? resident[i] : buffer_tensor(stack.tbuffers[i]);
      acc.add(transparency_term(encode(raw), sigma));
    }
    tau = acc.value();
    resident.clear();
    if (stats) {
      stats->transparency_peak_bytes = memory::peak_bytes() - base;
      stats->resident_buffer_bytes   = options.resident ? resident_bytes : (stack.t() ? stack.tbuffers[0].bytes() : 0);
      stats->buffers_seen            = acc.count();
    }
  }

  auto phi = blend(sigma, tau);
  return render(phi, direct_channels(stack.gbuffer));
}

std::string GlassNet::layer_table_json() const {
  json layers = json::array();
  for (auto& p : params_.items()) layers.push_back({{"name", p.name}, {"shape", p.value.shape()}, {"params", p.value.numel()}});
  json out = {{"config", json::parse(config_.to_json())}, {"layers", layers}, {"parameter_count", params_.count()}};
  return out.dump(2);
}

}  // namespace glassbuf
