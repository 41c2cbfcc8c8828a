#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "glassbuf/image.hpp"

namespace glassbuf {

std::size_t CoverageMask::count() const {
  return static_cast<std::size_t>(std::count_if(mask.begin(), mask.end(), [](auto m) { return m != 0; }));
}

rgb Texture::lookup(vec2f uv) const {
  if (texels.empty()) return {1, 1, 1};
  float fx = std::clamp(uv.x, 0.0f, 1.0f) * width - 0.5f;
  float fy = (1 - std::clamp(uv.y, 0.0f, 1.0f)) * height - 0.5f;
  int x0 = static_cast<int>(std::floor(fx));
  int y0 = static_cast<int>(std::floor(fy));
  float tx = fx - x0, ty = fy - y0;
  auto texel = [&](int x, int y) {
    x = std::clamp(x, 0, width - 1);
    y = std::clamp(y, 0, height - 1);
    return texels[std::size_t(y) * width + x];
  };
  return texel(x0, y0) * ((1 - tx) * (1 - ty)) + texel(x0 + 1, y0) * (tx * (1 - ty)) +
         texel(x0, y0 + 1) * ((1 - tx) * ty) + texel(x0 + 1, y0 + 1) * (tx * ty);
}

std::vector<float> flatten(const RadianceImage& image) {
  std::vector<float> data;
  data.reserve(image.pixels.size() * 3);
  for (auto& p : image.pixels) {
    data.push_back(p.x);
    data.push_back(p.y);
    data.push_back(p.z);
  }
  return data;
}

RadianceImage to_radiance(const FloatImage& image) {
  if (image.channels != 3) throw std::runtime_error("expected a 3-channel image");
  RadianceImage out(image.width, image.height);
  for (std::size_t i = 0; i < out.pixels.size(); i++)
    out.pixels[i] = {image.data[3 * i], image.data[3 * i + 1], image.data[3 * i + 2]};
  return out;
}

float srgb_to_linear(float v) {
  return v <= 0.04045f ? v / 12.92f : std::pow((v + 0.055f) / 1.055f, 2.4f);
}

float linear_to_srgb(float v) {
  return v <= 0.0031308f ? 12.92f * v : 1.055f * std::pow(v, 1 / 2.4f) - 0.055f;
}

RadianceImage abs_difference(const RadianceImage& a, const RadianceImage& b) {
  if (a.width != b.width || a.height != b.height)
    throw std::runtime_error("abs_difference: image dimensions differ");
  RadianceImage out(a.width, a.height);
  for (std::size_t i = 0; i < a.pixels.size(); i++) {
    auto d = a.pixels[i] - b.pixels[i];
    out.pixels[i] = {std::abs(d.x), std::abs(d.y), std::abs(d.z)};
  }
  return out;
}

}  // namespace glassbuf
