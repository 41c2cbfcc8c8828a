#pragma once

#include <span>
#include <vector>

#include "glassbuf/image.hpp"
#include "glassbuf/world.hpp"

namespace glassbuf {

struct FragmentLayer {
  rgb color;
  float alpha = 1;  // in (0, 1]
  float depth = 0;  // camera-space
  int object  = 0;  // depth ties resolve by ascending object id
};

// Per-pixel fragment lists (an A-buffer) over a per-pixel background.
struct LayerStack {
  int width  = 0;
  int height = 0;
  int max_layers = 0;
  std::vector<std::vector<FragmentLayer>> layers;
  std::vector<rgb> background;

  LayerStack() = default;
  LayerStack(int w, int h, int max_layers_, rgb bg = {})
      : width(w), height(h), max_layers(max_layers_), layers(std::size_t(w) * h), background(std::size_t(w) * h, bg) {}

  std::vector<FragmentLayer>& at(int x, int y) { return layers[std::size_t(y) * width + x]; }
  const std::vector<FragmentLayer>& at(int x, int y) const { return layers[std::size_t(y) * width + x]; }
};

enum class BlendOrder {
  front_to_back,  // first layer is nearest; transmittance accumulates forward
  back_to_front,  // first layer is farthest; each layer goes over the running result
};

// Applies the over operator to layers exactly in the given sequence.
rgb composite_pixel(std::span<const FragmentLayer> layers, rgb background, BlendOrder order);

// Sorts by (depth, object, color, alpha) and composites front to back:
//   out = sum_i alpha_i C_i z_i + background prod_j (1 - alpha_j),  z_i = prod_{j<i} (1 - alpha_j)
rgb composite_pixel_sorted(std::span<const FragmentLayer> layers, rgb background);
RadianceImage composite_sorted(const LayerStack& stack);

// order[p] is a permutation of pixel p's layer indices. Throws ShapeError on an
// invalid permutation.
RadianceImage composite_unsorted(const LayerStack& stack, const std::vector<std::vector<int>>& order, BlendOrder blend);
// Composites each pixel's layers in their stored order.
RadianceImage composite_in_list_order(const LayerStack& stack, BlendOrder blend);

// Multi-pass peeling of transparent fragments in front of the opaque surface.
// Pass k keeps, per pixel, the nearest fragment strictly behind the one taken
// in pass k-1 (keyed by depth, object, triangle). Layer colors are surface
// albedos; the background is the opaque albedo or the scene background.
LayerStack depth_peel(const World& world, int width, int height, int max_peels, int* passes = nullptr);
LayerStack depth_peel(const SceneInstance& instance, int width, int height, int max_peels, int* passes = nullptr);

// Per-pixel layers reordered by owning object id, i.e. the order in which an
// unsorted renderer would draw them.
std::vector<std::vector<int>> draw_order(const LayerStack& stack);

}  // namespace glassbuf
