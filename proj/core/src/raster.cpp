#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>

#include "glassbuf/parallel.hpp"
#include "glassbuf/raster.hpp"

namespace glassbuf {

std::size_t BufferStack::bytes() const {
  std::size_t total = gbuffer.bytes();
  for (auto& b : tbuffers) total += b.bytes();
  return total;
}

const std::vector<ChannelGroup>& gbuffer_groups() {
  static const std::vector<ChannelGroup> groups = {{"normal", gch::normal, 3}, {"position", gch::position, 3},
      {"albedo", gch::albedo, 3}, {"roughness", gch::roughness, 1}, {"wo", gch::wo, 3}, {"depth", gch::depth, 1},
      {"ld", gch::ld, 3}};
  return groups;
}

const std::vector<ChannelGroup>& tbuffer_groups() {
  static const std::vector<ChannelGroup> groups = {{"normal", tch::normal, 3}, {"position", tch::position, 3},
      {"albedo", tch::albedo, 3}, {"roughness", tch::roughness, 1}, {"wo", tch::wo, 3}, {"depth", tch::depth, 1},
      {"relative_depth", tch::relative_depth, 1}, {"alpha", tch::alpha, 1}, {"coverage", tch::coverage, 1}};
  return groups;
}

std::vector<std::string> channel_names(bool transparency) {
  static const char* axes[] = {".x", ".y", ".z"};
  static const char* colors[] = {".r", ".g", ".b"};
  std::vector<std::string> names;
  for (auto& g : transparency ? tbuffer_groups() : gbuffer_groups()) {
    bool color = g.name == "albedo" || g.name == "ld";
    if (g.count == 1) {
      names.emplace_back(g.name);
      continue;
    }
    for (int k = 0; k < g.count; k++) names.push_back(std::string(g.name) + (color ? colors[k] : axes[k]));
  }
  return names;
}

namespace {

// Vertex positions snap to a 1/65536 pixel grid and edge functions are evaluated
// exactly in integers, so pixel centers on a shared edge or vertex are decided
// consistently by the fill rule.
constexpr int subpixel_bits = 16;
constexpr double subpixel    = 1 << subpixel_bits;
using Wide = __int128;

struct Fixed {
  std::int64_t x, y;
};

Fixed snap(vec2f v) {
  constexpr double limit = double(std::int64_t(1) << 40);
  auto q = [&](float c) { return std::int64_t(std::llround(std::clamp(double(c) * subpixel, -limit, limit))); };
  return {q(v.x), q(v.y)};
}

Wide edge(Fixed a, Fixed b, Fixed p) { return Wide(b.x - a.x) * (p.y - a.y) - Wide(b.y - a.y) * (p.x - a.x); }

// Half-open fill rule: a pixel center exactly on an edge belongs to one of the
// two triangles sharing it, decided by the edge direction.
bool owns_edge(Fixed a, Fixed b) {
  auto dx = b.x - a.x, dy = b.y - a.y;
  return dy > 0 || (dy == 0 && dx < 0);
}

// Triangle after near-plane clipping, in snapped pixel coordinates.
struct ScreenTri {
  Fixed v[3];
  float inv_z[3];
  vec3f bary[3];  // barycentrics of the source world triangle at each vertex
  int triangle;
};

void setup_triangle(const World& world, const Camera& camera, int index, float near, std::vector<ScreenTri>& out) {
  struct ClipVert {
    vec3f pc;
    vec3f bary;
  };
  auto& tri = world.triangles[index];
  ClipVert in[3] = {{camera.to_camera(tri.p[0]), {1, 0, 0}}, {camera.to_camera(tri.p[1]), {0, 1, 0}},
      {camera.to_camera(tri.p[2]), {0, 0, 1}}};
  ClipVert poly[4];
  int n = 0;
  for (int i = 0; i < 3; i++) {
    auto& a = in[i];
    auto& b = in[(i + 1) % 3];
    bool a_in = a.pc.z >= near, b_in = b.pc.z >= near;
    if (a_in) poly[n++] = a;
    if (a_in != b_in) {
      float s = (near - a.pc.z) / (b.pc.z - a.pc.z);
      ClipVert c{a.pc + (b.pc - a.pc) * s, a.bary + (b.bary - a.bary) * s};
      c.pc.z = near;
      poly[n++] = c;
    }
  }
  for (int k = 1; k + 1 < n; k++) {
    ScreenTri st;
    st.triangle = index;
    const ClipVert* verts[3] = {&poly[0], &poly[k], &poly[k + 1]};
    bool finite = true;
    for (int j = 0; j < 3; j++) {
      auto v      = camera.project(verts[j]->pc);
      finite      = finite && std::isfinite(v.x) && std::isfinite(v.y);
      st.v[j]     = snap(v);
      st.inv_z[j] = 1 / verts[j]->pc.z;
      st.bary[j]  = verts[j]->bary;
    }
    Wide area = edge(st.v[0], st.v[1], st.v[2]);
    if (area == 0 || !finite) continue;
    if (area < 0) {
      std::swap(st.v[1], st.v[2]);
      std::swap(st.inv_z[1], st.inv_z[2]);
      std::swap(st.bary[1], st.bary[2]);
    }
    out.push_back(st);
  }
}

std::vector<ScreenTri> setup(const World& world, const Camera& camera, const std::function<bool(int)>& filter) {
  float near = 1e-4f * world.depth_scale;
  std::vector<ScreenTri> out;
  for (auto& object : world.objects) {
    int o = static_cast<int>(&object - world.objects.data());
    if (!filter(o)) continue;
    for (int i = 0; i < object.triangle_count; i++) setup_triangle(world, camera, object.first_triangle + i, near, out);
  }
  return out;
}

// Rasterizes rows [y0, y1) of one screen triangle.
template <typename Fn>
void raster_rows(const ScreenTri& st, int width, int y0, int y1, Fn&& fn) {
  auto xmin = std::min({st.v[0].x, st.v[1].x, st.v[2].x}), xmax = std::max({st.v[0].x, st.v[1].x, st.v[2].x});
  auto ymin = std::min({st.v[0].y, st.v[1].y, st.v[2].y}), ymax = std::max({st.v[0].y, st.v[1].y, st.v[2].y});
  // pixel x has its center at (x + 1/2) * subpixel
  auto first = [](std::int64_t lo) { return std::int64_t(std::ceil((lo - subpixel / 2) / subpixel)); };
  auto last  = [](std::int64_t hi) { return std::int64_t(std::floor((hi - subpixel / 2) / subpixel)); };
  int px0 = int(std::max<std::int64_t>(0, first(xmin)));
  int px1 = int(std::min<std::int64_t>(width - 1, last(xmax)));
  int py0 = int(std::max<std::int64_t>(y0, first(ymin)));
  int py1 = int(std::min<std::int64_t>(y1 - 1, last(ymax)));
  if (px0 > px1 || py0 > py1) return;
  double area = double(edge(st.v[0], st.v[1], st.v[2]));
  bool own0 = owns_edge(st.v[1], st.v[2]), own1 = owns_edge(st.v[2], st.v[0]), own2 = owns_edge(st.v[0], st.v[1]);
  constexpr std::int64_t half = 1 << (subpixel_bits - 1);
  for (int y = py0; y <= py1; y++) {
    for (int x = px0; x <= px1; x++) {
      Fixed p = {(std::int64_t(x) << subpixel_bits) + half, (std::int64_t(y) << subpixel_bits) + half};
      Wide w0 = edge(st.v[1], st.v[2], p), w1 = edge(st.v[2], st.v[0], p), w2 = edge(st.v[0], st.v[1], p);
      if (w0 < 0 || w1 < 0 || w2 < 0) continue;
      if ((w0 == 0 && !own0) || (w1 == 0 && !own1) || (w2 == 0 && !own2)) continue;
      float q0 = float(double(w0) / area) * st.inv_z[0], q1 = float(double(w1) / area) * st.inv_z[1],
            q2 = float(double(w2) / area) * st.inv_z[2];
      float q = q0 + q1 + q2;
      if (!(q > 0)) continue;
      auto b = (st.bary[0] * q0 + st.bary[1] * q1 + st.bary[2] * q2) / q;
      fn(Fragment{x, y, 1 / q, st.triangle, b.y, b.z});
    }
  }
}

// Visibility buffer: nearest fragment per pixel.
struct Visibility {
  int width = 0, height = 0;
  std::vector<Fragment> frags;

  Visibility(int w, int h) : width(w), height(h), frags(std::size_t(w) * h) {
    for (auto& f : frags) f.z = std::numeric_limits<float>::infinity();
  }
  void test(const Fragment& f) {
    auto& cur = frags[std::size_t(f.y) * width + f.x];
    if (f.z < cur.z) cur = f;
  }
  const Fragment& at(int x, int y) const { return frags[std::size_t(y) * width + x]; }
};

// Scanline bands rasterize independently into disjoint rows.
Visibility visibility(const World& world, const Camera& camera, const std::function<bool(int)>& filter) {
  auto tris = setup(world, camera, filter);
  Visibility vis(camera.width, camera.height);
  constexpr int band = 16;
  std::size_t bands = (camera.height + band - 1) / band;
  parallel_for(bands, [&](std::size_t b) {
    int y0 = static_cast<int>(b) * band, y1 = std::min(camera.height, y0 + band);
    for (auto& st : tris) raster_rows(st, camera.width, y0, y1, [&](const Fragment& f) { vis.test(f); });
  });
  return vis;
}

// Fills the 14 channels shared by both buffer kinds; returns the normalized depth.
float resolve(FeatureBuffer& buf, const World& world, const Camera& camera, const Fragment& f) {
  auto ray = camera.ray(f.x + 0.5f, f.y + 0.5f);
  auto wo  = -ray.d;
  auto sp  = world.surface(f.triangle, f.b1, f.b2, wo);
  float depth = camera.to_camera(sp.position).z / world.depth_scale;
  buf.set(gch::normal, f.x, f.y, sp.normal);
  buf.set(gch::position, f.x, f.y, sp.position);
  buf.set(gch::albedo, f.x, f.y, sp.albedo);
  buf.at(gch::roughness, f.x, f.y) = sp.roughness;
  buf.set(gch::wo, f.x, f.y, wo);
  buf.at(gch::depth, f.x, f.y) = depth;
  return depth;
}

GBuffer resolve_gbuffer(const Visibility& vis, const World& world, const Camera& camera) {
  GBuffer g(camera.width, camera.height);
  for (int y = 0; y < camera.height; y++) {
    for (int x = 0; x < camera.width; x++) {
      auto& f = vis.at(x, y);
      if (f.triangle < 0)
        g.at(gch::depth, x, y) = 1;
      else
        resolve(g, world, camera, f);
    }
  }
  return g;
}

}  // namespace

void for_each_fragment(const World& world, const Camera& camera, const std::function<bool(int)>& filter,
    const std::function<void(const Fragment&)>& fn) {
  for (auto& st : setup(world, camera, filter)) raster_rows(st, camera.width, 0, camera.height, fn);
}

BufferStack rasterize(const World& world, int width, int height, const RasterOptions& options) {
  auto camera = make_camera(world.camera, width, height);
  BufferStack stack;
  stack.depth_scale = world.depth_scale;
  stack.bounds      = world.bounds;

  auto opaque   = visibility(world, camera, [&](int o) { return !world.objects[o].transparent; });
  stack.gbuffer = resolve_gbuffer(opaque, world, camera);
  if (options.direct_lighting) compute_direct_lighting(stack.gbuffer, world);

  std::vector<int> transparent;
  for (std::size_t o = 0; o < world.objects.size(); o++)
    if (world.objects[o].transparent) transparent.push_back(static_cast<int>(o));
  stack.tbuffers.resize(transparent.size());
  for (int o : transparent) stack.tbuffer_objects.push_back(world.objects[o].name);

  // one independent pass per object; opaque surfaces never occlude here
  parallel_for(transparent.size(), [&](std::size_t i) {
    int object = transparent[i];
    auto tris  = setup(world, camera, [&](int o) { return o == object; });
    Visibility vis(width, height);
    for (auto& st : tris) raster_rows(st, width, 0, height, [&](const Fragment& f) { vis.test(f); });
    TransparencyBuffer buf(width, height);
    for (int y = 0; y < height; y++) {
      for (int x = 0; x < width; x++) {
        auto& f = vis.at(x, y);
        if (f.triangle < 0) continue;
        float depth = resolve(buf, world, camera, f);
        buf.at(tch::relative_depth, x, y) = stack.gbuffer.at(gch::depth, x, y) - depth;
        buf.at(tch::alpha, x, y)          = world.objects[object].material.alpha;
        buf.at(tch::coverage, x, y)       = 1;
      }
    }
    stack.tbuffers[i] = std::move(buf);
  });
  return stack;
}

BufferStack rasterize(const SceneInstance& instance, int width, int height, const RasterOptions& options) {
  return rasterize(build_world(instance), width, height, options);
}

GBuffer rasterize_combined(const World& world, int width, int height, const RasterOptions& options) {
  auto camera = make_camera(world.camera, width, height);
  auto vis    = visibility(world, camera, [](int) { return true; });
  auto g      = resolve_gbuffer(vis, world, camera);
  if (options.direct_lighting) compute_direct_lighting(g, world);
  return g;
}

}  // namespace glassbuf
