#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "glassbuf/world.hpp"

namespace glassbuf {

inline constexpr int buffer_channels = 17;

// Channel layout of the opaque G-buffer.
namespace gch {
inline constexpr int normal = 0, position = 3, albedo = 6, roughness = 9, wo = 10, depth = 13, ld = 14;
}
// Channel layout of a transparency buffer; the first 14 channels match the G-buffer.
namespace tch {
inline constexpr int normal = 0, position = 3, albedo = 6, roughness = 9, wo = 10, depth = 13,
                     relative_depth = 14, alpha = 15, coverage = 16;
}

// 17 planar float channels (channel-major, then rows, then columns).
struct FeatureBuffer {
  int width  = 0;
  int height = 0;
  std::vector<float> data;

  FeatureBuffer() = default;
  FeatureBuffer(int w, int h) : width(w), height(h), data(std::size_t(buffer_channels) * w * h, 0.0f) {}

  std::size_t plane() const { return std::size_t(width) * height; }
  float* channel(int c) { return data.data() + c * plane(); }
  const float* channel(int c) const { return data.data() + c * plane(); }
  float& at(int c, int x, int y) { return data[c * plane() + std::size_t(y) * width + x]; }
  float at(int c, int x, int y) const { return data[c * plane() + std::size_t(y) * width + x]; }
  vec3f vec(int c, int x, int y) const { return {at(c, x, y), at(c + 1, x, y), at(c + 2, x, y)}; }
  void set(int c, int x, int y, vec3f v) {
    at(c, x, y)     = v.x;
    at(c + 1, x, y) = v.y;
    at(c + 2, x, y) = v.z;
  }
  std::size_t bytes() const { return data.size() * sizeof(float); }
  bool operator==(const FeatureBuffer&) const = default;
};

struct GBuffer : FeatureBuffer {
  using FeatureBuffer::FeatureBuffer;
};

struct TransparencyBuffer : FeatureBuffer {
  using FeatureBuffer::FeatureBuffer;
};

struct BufferStack {
  GBuffer gbuffer;
  std::vector<TransparencyBuffer> tbuffers;  // one per transparent object, scene order
  std::vector<std::string> tbuffer_objects;  // owning object names
  float depth_scale = 1;
  bbox3f bounds;

  int t() const { return static_cast<int>(tbuffers.size()); }
  int total_channels() const { return buffer_channels * (t() + 1); }
  std::size_t bytes() const;
};

struct ChannelGroup {
  std::string_view name;
  int first;
  int count;
};
const std::vector<ChannelGroup>& gbuffer_groups();
const std::vector<ChannelGroup>& tbuffer_groups();
// Per-channel names, e.g. "normal.x", "relative_depth".
std::vector<std::string> channel_names(bool transparency);

// One rasterized sample of a triangle at a pixel center.
struct Fragment {
  int x = 0, y = 0;
  float z = 0;  // camera-space depth
  int triangle = -1;
  float b1 = 0, b2 = 0;  // perspective-correct barycentrics of the world triangle
};

// Calls fn for every fragment of every triangle owned by an object accepted by
// the filter, with no depth test. Triangles are visited in world order and
// pixels in scanline order within each triangle.
void for_each_fragment(const World& world, const Camera& camera, const std::function<bool(int object)>& filter,
    const std::function<void(const Fragment&)>& fn);

struct RasterOptions {
  bool direct_lighting = true;  // fill the L_d channels
};

// Opaque G-buffer over opaque objects plus one transparency buffer per
// transparent object, each pass keeping the nearest fragment (strict-less).
BufferStack rasterize(const World& world, int width, int height, const RasterOptions& options = {});
BufferStack rasterize(const SceneInstance& instance, int width, int height, const RasterOptions& options = {});

// Single G-buffer in which transparent surfaces take part in the depth test
// like opaque ones. Input of the naive baseline.
GBuffer rasterize_combined(const World& world, int width, int height, const RasterOptions& options = {});

// Writes the L_d channels of every covered pixel: point lights are evaluated
// with the full reflection model and a shadow ray; area quads use the
// unshadowed polygon irradiance for the diffuse part, a centroid evaluation
// for the glossy part, and one shadow ray to the centroid.
void compute_direct_lighting(GBuffer& gbuffer, const World& world);

// Buffer dump: one PFM per channel group and buffers.json describing the
// layout, depth normalization and bounds. Round trip is bit-exact.
void save_buffers(const std::filesystem::path& dir, const BufferStack& stack);
BufferStack load_buffers(const std::filesystem::path& dir);

}  // namespace glassbuf
