#include <algorithm>
#include <limits>
#include <numeric>
#include <tuple>

#include "glassbuf/errors.hpp"
#include "glassbuf/oit.hpp"
#include "glassbuf/raster.hpp"

namespace glassbuf {

rgb composite_pixel(std::span<const FragmentLayer> layers, rgb background, BlendOrder order) {
  if (order == BlendOrder::back_to_front) {
    rgb out = background;
    for (auto& l : layers) out = l.color * l.alpha + out * (1 - l.alpha);
    return out;
  }
  rgb out = {0, 0, 0};
  float transmittance = 1;
  for (auto& l : layers) {
    out += l.color * (l.alpha * transmittance);
    transmittance *= 1 - l.alpha;
  }
  return out + background * transmittance;
}

namespace {

bool layer_less(const FragmentLayer& a, const FragmentLayer& b) {
  return std::tie(a.depth, a.object, a.color.x, a.color.y, a.color.z, a.alpha) <
         std::tie(b.depth, b.object, b.color.x, b.color.y, b.color.z, b.alpha);
}

}  // namespace

rgb composite_pixel_sorted(std::span<const FragmentLayer> layers, rgb background) {
  std::vector<FragmentLayer> sorted(layers.begin(), layers.end());
  std::sort(sorted.begin(), sorted.end(), layer_less);
  return composite_pixel(sorted, background, BlendOrder::front_to_back);
}

RadianceImage composite_sorted(const LayerStack& stack) {
  RadianceImage out(stack.width, stack.height);
  for (std::size_t p = 0; p < stack.layers.size(); p++)
    out.pixels[p] = composite_pixel_sorted(stack.layers[p], stack.background[p]);
  return out;
}

RadianceImage composite_unsorted(const LayerStack& stack, const std::vector<std::vector<int>>& order, BlendOrder blend) {
  if (order.size() != stack.layers.size())
    throw ShapeError("permutation count " + std::to_string(order.size()) + " != pixel count " +
                     std::to_string(stack.layers.size()));
  RadianceImage out(stack.width, stack.height);
  std::vector<FragmentLayer> seq;
  for (std::size_t p = 0; p < stack.layers.size(); p++) {
    auto& layers = stack.layers[p];
    auto& perm   = order[p];
    if (perm.size() != layers.size())
      throw ShapeError("pixel " + std::to_string(p) + ": permutation of length " + std::to_string(perm.size()) +
                       " for " + std::to_string(layers.size()) + " layers");
    std::vector<char> seen(layers.size(), 0);
    seq.clear();
    for (int i : perm) {
      if (i < 0 || i >= int(layers.size()) || seen[i])
        throw ShapeError("pixel " + std::to_string(p) + ": not a permutation");
      seen[i] = 1;
      seq.push_back(layers[i]);
    }
    out.pixels[p] = composite_pixel(seq, stack.background[p], blend);
  }
  return out;
}

RadianceImage composite_in_list_order(const LayerStack& stack, BlendOrder blend) {
  RadianceImage out(stack.width, stack.height);
  for (std::size_t p = 0; p < stack.layers.size(); p++)
    out.pixels[p] = composite_pixel(stack.layers[p], stack.background[p], blend);
  return out;
}

std::vector<std::vector<int>> draw_order(const LayerStack& stack) {
  std::vector<std::vector<int>> order(stack.layers.size());
  for (std::size_t p = 0; p < stack.layers.size(); p++) {
    auto& layers = stack.layers[p];
    order[p].resize(layers.size());
    std::iota(order[p].begin(), order[p].end(), 0);
    std::stable_sort(order[p].begin(), order[p].end(), [&](int a, int b) { return layers[a].object < layers[b].object; });
  }
  return order;
}

LayerStack depth_peel(const World& world, int width, int height, int max_peels, int* passes) {
  if (max_peels < 1) throw ValidationError("max_peels must be >= 1");
  auto camera = make_camera(world.camera, width, height);
  constexpr float inf = std::numeric_limits<float>::infinity();
  std::size_t n = std::size_t(width) * height;

  // opaque z-buffer and the surface behind the transparent layers
  std::vector<Fragment> opaque(n);
  for (auto& f : opaque) f.z = inf;
  for_each_fragment(world, camera, [&](int o) { return !world.objects[o].transparent; }, [&](const Fragment& f) {
    auto& cur = opaque[std::size_t(f.y) * width + f.x];
    if (f.z < cur.z) cur = f;
  });
  LayerStack stack(width, height, max_peels, world.background);
  for (std::size_t p = 0; p < n; p++) {
    auto& f = opaque[p];
    if (f.triangle < 0) continue;
    int x = int(p % width), y = int(p / width);
    stack.background[p] = world.surface(f.triangle, f.b1, f.b2, -camera.ray(x + 0.5f, y + 0.5f).d).albedo;
  }

  using Key = std::tuple<float, int, int>;
  std::vector<Key> last(n, Key{-inf, -1, -1});
  std::vector<Fragment> best(n);
  int pass = 0;
  for (; pass < max_peels; pass++) {
    for (auto& f : best) f = Fragment{0, 0, inf, -1, 0, 0};
    for_each_fragment(world, camera, [&](int o) { return world.objects[o].transparent; }, [&](const Fragment& f) {
      std::size_t p = std::size_t(f.y) * width + f.x;
      if (!(f.z < opaque[p].z)) return;
      int object = world.triangles[f.triangle].object;
      Key key{f.z, object, f.triangle};
      if (!(last[p] < key)) return;
      auto& cur = best[p];
      if (cur.triangle < 0 || key < Key{cur.z, world.triangles[cur.triangle].object, cur.triangle}) cur = f;
    });
    bool any = false;
    for (std::size_t p = 0; p < n; p++) {
      auto& f = best[p];
      if (f.triangle < 0) continue;
      any = true;
      int object = world.triangles[f.triangle].object;
      auto sp    = world.surface(f.triangle, f.b1, f.b2, -camera.ray(f.x + 0.5f, f.y + 0.5f).d);
      stack.layers[p].push_back({sp.albedo, world.objects[object].material.alpha, f.z, object});
      last[p] = Key{f.z, object, f.triangle};
    }
    if (!any) {
      pass++;
      break;
    }
  }
  if (passes) *passes = pass;
  return stack;
}

LayerStack depth_peel(const SceneInstance& instance, int width, int height, int max_peels, int* passes) {
  return depth_peel(build_world(instance), width, height, max_peels, passes);
}

}  // namespace glassbuf
