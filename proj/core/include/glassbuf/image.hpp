#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "glassbuf/math.hpp"

namespace glassbuf {

// Linear RGB radiance, row-major, row 0 at the top.
struct RadianceImage {
  int width  = 0;
  int height = 0;
  std::vector<rgb> pixels;

  RadianceImage() = default;
  RadianceImage(int w, int h, rgb fill = {}) : width(w), height(h), pixels(std::size_t(w) * h, fill) {}

  rgb& at(int x, int y) { return pixels[std::size_t(y) * width + x]; }
  const rgb& at(int x, int y) const { return pixels[std::size_t(y) * width + x]; }
  bool operator==(const RadianceImage&) const = default;
};

// Per-pixel flag: the primary ray crosses a transparent surface before any opaque one.
struct CoverageMask {
  int width  = 0;
  int height = 0;
  std::vector<std::uint8_t> mask;

  CoverageMask() = default;
  CoverageMask(int w, int h) : width(w), height(h), mask(std::size_t(w) * h, 0) {}

  bool at(int x, int y) const { return mask[std::size_t(y) * width + x] != 0; }
  std::size_t count() const;
  bool operator==(const CoverageMask&) const = default;
};

// Linear RGB texture with bilinear lookup and clamp-to-edge addressing.
struct Texture {
  int width  = 0;
  int height = 0;
  std::vector<rgb> texels;

  rgb lookup(vec2f uv) const;
};

// Images as raw float planes; used by the buffer dump and PFM I/O.
struct FloatImage {
  int width    = 0;
  int height   = 0;
  int channels = 0;
  std::vector<float> data;  // interleaved, row 0 at the top
};

std::vector<float> flatten(const RadianceImage& image);
RadianceImage to_radiance(const FloatImage& image);

// PFM: "PF" (RGB) or "Pf" (gray), little-endian float32 (scale -1), rows stored
// bottom-to-top as the format prescribes.
void write_pfm(const std::filesystem::path& path, const FloatImage& image);
FloatImage read_pfm(const std::filesystem::path& path);

// 8-bit PNG with 1 (gray) or 3 (RGB) channels.
struct Png8 {
  int width    = 0;
  int height   = 0;
  int channels = 0;
  std::vector<std::uint8_t> data;
};
void write_png(const std::filesystem::path& path, const Png8& image);
Png8 read_png(const std::filesystem::path& path);

float srgb_to_linear(float v);
float linear_to_srgb(float v);

// Texture from PNG (sRGB decoded to linear) or PFM (already linear).
Texture load_texture(const std::filesystem::path& path);

void save_radiance_pfm(const std::filesystem::path& path, const RadianceImage& image);
RadianceImage load_radiance_pfm(const std::filesystem::path& path);
// Tone-mapped preview: clamp to [0,1], gamma 1/2.2, 8 bits.
void save_preview_png(const std::filesystem::path& path, const RadianceImage& image);
// 0/255 single-channel mask.
void save_mask_png(const std::filesystem::path& path, const CoverageMask& mask);
CoverageMask load_mask_png(const std::filesystem::path& path);

RadianceImage abs_difference(const RadianceImage& a, const RadianceImage& b);

}  // namespace glassbuf
