#pragma once

// Independent reference implementations and fixtures shared by the tests.

#include <cmath>
#include <filesystem>
#include <algorithm>
#include <functional>
#include <limits>
#include <memory>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "glassbuf/image.hpp"
#include "glassbuf/oit.hpp"
#include "glassbuf/raster.hpp"
#include "glassbuf/ops.hpp"
#include "glassbuf/rng.hpp"
#include "glassbuf/scene.hpp"
#include "glassbuf/tensor.hpp"

namespace oracle {

using namespace glassbuf;

inline std::filesystem::path scenes_dir() { return GLASSBUF_SCENES_DIR; }

inline std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::path(GLASSBUF_TEST_TMP) / name;
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

// ---- images and metrics ----

inline RadianceImage random_image(int w, int h, Pcg32& rng, float lo = 0.0f, float hi = 1.0f) {
  RadianceImage img(w, h);
  for (auto& p : img.pixels) p = {rng.uniform(lo, hi), rng.uniform(lo, hi), rng.uniform(lo, hi)};
  return img;
}

inline double clamp01(double v) { return v < 0 ? 0 : (v > 1 ? 1 : v); }

// Mean over selected pixels of sum_c f(a_c, b_c) / 3.
template <typename F>
double masked_mean(const RadianceImage& a, const RadianceImage& b, const CoverageMask* m, F f) {
  double total = 0;
  long n       = 0;
  for (int y = 0; y < a.height; y++)
    for (int x = 0; x < a.width; x++) {
      if (m && !m->at(x, y)) continue;
      for (int c = 0; c < 3; c++) total += f(clamp01(a.at(x, y)[c]), clamp01(b.at(x, y)[c]));
      n += 3;
    }
  return n ? total / n : std::numeric_limits<double>::quiet_NaN();
}

inline double mae(const RadianceImage& a, const RadianceImage& b, const CoverageMask* m = nullptr) {
  return masked_mean(a, b, m, [](double p, double q) { return std::abs(p - q); });
}

inline double psnr(const RadianceImage& a, const RadianceImage& b, const CoverageMask* m = nullptr) {
  double mse = masked_mean(a, b, m, [](double p, double q) { return (p - q) * (p - q); });
  if (std::isnan(mse)) return mse;
  return mse == 0 ? std::numeric_limits<double>::infinity() : -10 * std::log10(mse);
}

// SSIM with an explicit 2D 11x11 Gaussian window (sigma 1.5) over every valid
// window position, averaged over windows and channels.
inline double ssim(const RadianceImage& a, const RadianceImage& b) {
  constexpr int K = 11;
  double g[K][K], norm = 0;
  for (int i = 0; i < K; i++)
    for (int j = 0; j < K; j++) {
      double di = i - 5, dj = j - 5;
      g[i][j]   = std::exp(-(di * di + dj * dj) / (2 * 1.5 * 1.5));
      norm += g[i][j];
    }
  const double c1 = 0.01 * 0.01, c2 = 0.03 * 0.03;
  double total = 0;
  long count   = 0;
  for (int c = 0; c < 3; c++)
    for (int y = 0; y + K <= a.height; y++)
      for (int x = 0; x + K <= a.width; x++) {
        double mx = 0, my = 0, sxx = 0, syy = 0, sxy = 0;
        for (int i = 0; i < K; i++)
          for (int j = 0; j < K; j++) {
            double w = g[i][j] / norm, p = clamp01(a.at(x + j, y + i)[c]), q = clamp01(b.at(x + j, y + i)[c]);
            mx += w * p;
            my += w * q;
            sxx += w * p * p;
            syy += w * q * q;
            sxy += w * p * q;
          }
        sxx -= mx * mx;
        syy -= my * my;
        sxy -= mx * my;
        total += ((2 * mx * my + c1) * (2 * sxy + c2)) / ((mx * mx + my * my + c1) * (sxx + syy + c2));
        count++;
      }
  return total / count;
}

inline double dssim(const RadianceImage& a, const RadianceImage& b) { return (1 - ssim(a, b)) / 2; }

// ---- finite differences ----

inline Tensor random_tensor(Shape shape, std::uint64_t seed, float lo = -1.0f, float hi = 1.0f) {
  Tensor t(std::move(shape));
  Pcg32 rng(seed);
  for (auto& v : t.values()) v = rng.uniform(lo, hi);
  t.set_requires_grad(true);
  return t;
}

// Scalar w . flatten(y) with fixed random weights, so every output element
// gets a distinct sensitivity.
struct Projection {
  Tensor weights, bias;
  Projection(std::size_t n, std::uint64_t seed) : weights(random_tensor({1, int(n)}, seed)), bias({1}) {}
  Tensor operator()(const Tensor& y) const { return ops::dense(y, weights, bias); }
};

// Norm-wise relative error between the tape gradient of loss() w.r.t. x and
// central differences, over the sampled indices (all when empty).
inline double gradient_error(const std::function<Tensor()>& loss, Tensor x, std::vector<std::size_t> indices = {},
    float h = 1e-3f) {
  if (indices.empty())
    for (std::size_t i = 0; i < x.numel(); i++) indices.push_back(i);
  std::vector<double> analytic(indices.size(), 0.0), numeric(indices.size());
  {
    Tape tape;
    TapeScope scope(tape);
    auto l = loss();
    tape.backward(l);
    if (auto* g = tape.find_grad(x))
      for (std::size_t k = 0; k < indices.size(); k++) analytic[k] = g[indices[k]];
  }
  for (std::size_t k = 0; k < indices.size(); k++) {
    float& v     = x.data()[indices[k]];
    float saved  = v;
    v            = saved + h;
    double plus  = loss().item();
    v            = saved - h;
    double minus = loss().item();
    v            = saved;
    numeric[k]   = (plus - minus) / (2.0 * double(h));
  }
  double diff = 0, na = 0, nn = 0;
  for (std::size_t k = 0; k < indices.size(); k++) {
    diff += (analytic[k] - numeric[k]) * (analytic[k] - numeric[k]);
    na += analytic[k] * analytic[k];
    nn += numeric[k] * numeric[k];
  }
  double scale = std::max({std::sqrt(na), std::sqrt(nn), 1e-12});
  return std::sqrt(diff) / scale;
}

// ---- scenes ----

inline std::string vec_json(vec3f v) {
  std::ostringstream s;
  s.precision(9);
  s << "[" << v.x << "," << v.y << "," << v.z << "]";
  return s.str();
}

// Opaque back wall and floor, one point light, and t random axis-aligned
// transparent quads between the wall and a camera at (0, 1, 4).
inline std::shared_ptr<const Scene> random_quad_scene(int t, std::uint64_t seed, float alpha_lo = 0.2f,
    float alpha_hi = 0.8f) {
  Pcg32 rng(seed);
  std::ostringstream s;
  s.precision(9);
  s << R"({"objects": [
    {"name": "wall", "mesh": {"shape": "quad", "corners": [[-3,-1,-2],[3,-1,-2],[3,3,-2],[-3,3,-2]]},
     "material": {"albedo": [0.7, 0.6, 0.5]}},
    {"name": "floor", "mesh": {"shape": "quad", "corners": [[-3,0,2],[3,0,2],[3,0,-2],[-3,0,-2]]},
     "material": {"albedo": [0.4, 0.5, 0.6], "roughness": 0.5}})";
  for (int i = 0; i < t; i++) {
    float z  = rng.uniform(-1.5f, 1.5f);
    float x0 = rng.uniform(-1.5f, 0.3f), x1 = x0 + rng.uniform(0.4f, 1.5f);
    float y0 = rng.uniform(0.1f, 1.0f), y1 = y0 + rng.uniform(0.4f, 1.2f);
    vec3f albedo = {rng.next_float(), rng.next_float(), rng.next_float()};
    float alpha  = rng.uniform(alpha_lo, alpha_hi);
    s << ",\n{\"name\": \"glass" << i << "\", \"transparent\": true, \"mesh\": {\"shape\": \"quad\", \"corners\": ["
      << vec_json({x0, y0, z}) << "," << vec_json({x1, y0, z}) << "," << vec_json({x1, y1, z}) << ","
      << vec_json({x0, y1, z}) << "]}, \"material\": {\"albedo\": " << vec_json(albedo) << ", \"alpha\": " << alpha
      << ", \"roughness\": 0.3}}";
  }
  s << R"(],
  "lights": [{"name": "key", "type": "point", "position": [1, 2.5, 2], "intensity": [6, 6, 6]}],
  "camera_ranges": {"position": {"min": [-0.3, 0.9, 3.8], "max": [0.3, 1.1, 4.2]},
                    "look_at": {"min": [0, 0.7, 0], "max": [0, 0.7, 0]}, "fov_deg": 50}})";
  return std::make_shared<const Scene>(parse_scene(s.str(), "."));
}

// ---- classical OIT ----

// A-buffer built in one pass: every transparent fragment in front of the
// nearest opaque one, in rasterization order, plus the opaque albedo behind.
inline LayerStack gather_fragments(const World& world, int width, int height) {
  auto camera = make_camera(world.camera, width, height);
  std::vector<Fragment> opaque(std::size_t(width) * height);
  for (auto& f : opaque) f.z = std::numeric_limits<float>::infinity();
  for_each_fragment(world, camera, [&](int o) { return !world.objects[o].transparent; }, [&](const Fragment& f) {
    auto& cur = opaque[std::size_t(f.y) * width + f.x];
    if (f.z < cur.z) cur = f;
  });
  LayerStack stack(width, height, 1 << 20, world.background);
  for (int y = 0; y < height; y++)
    for (int x = 0; x < width; x++) {
      auto& f = opaque[std::size_t(y) * width + x];
      if (f.triangle >= 0)
        stack.background[std::size_t(y) * width + x] =
            world.surface(f.triangle, f.b1, f.b2, -camera.ray(x + 0.5f, y + 0.5f).d).albedo;
    }
  for_each_fragment(world, camera, [&](int o) { return world.objects[o].transparent; }, [&](const Fragment& f) {
    std::size_t p = std::size_t(f.y) * width + f.x;
    if (!(f.z < opaque[p].z)) return;
    int object = world.triangles[f.triangle].object;
    auto sp    = world.surface(f.triangle, f.b1, f.b2, -camera.ray(f.x + 0.5f, f.y + 0.5f).d);
    stack.layers[p].push_back({sp.albedo, world.objects[object].material.alpha, f.z, object});
  });
  return stack;
}

// Front-to-back over operator in double after sorting by (depth, object,
// color, alpha).
inline vec3f composite_reference(std::vector<FragmentLayer> layers, vec3f background) {
  std::sort(layers.begin(), layers.end(), [](auto& a, auto& b) {
    return std::tuple(a.depth, a.object, a.color.x, a.color.y, a.color.z, a.alpha) <
           std::tuple(b.depth, b.object, b.color.x, b.color.y, b.color.z, b.alpha);
  });
  double out[3] = {0, 0, 0}, transmit = 1;
  for (auto& l : layers) {
    for (int c = 0; c < 3; c++) out[c] += transmit * l.alpha * l.color[c];
    transmit *= 1.0 - l.alpha;
  }
  for (int c = 0; c < 3; c++) out[c] += transmit * background[c];
  return {float(out[0]), float(out[1]), float(out[2])};
}

}  // namespace oracle
