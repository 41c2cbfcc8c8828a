#include <cmath>
#include <vector>

#include "glassbuf/bsdf.hpp"
#include "glassbuf/parallel.hpp"
#include "glassbuf/pathtrace.hpp"
#include "glassbuf/rng.hpp"

namespace glassbuf {

namespace {

struct PathRadiance {
  rgb direct;    // emission and single-scattering light
  rgb indirect;  // two or more scattering events
};

// Area lights are emit-only and never occlude: they are reached by camera
// rays and specular chains, and by next-event estimation otherwise.
rgb area_light_emission(const World& world, const Ray& ray, float tmax) {
  rgb total = {0, 0, 0};
  for (auto& light : world.lights) {
    if (light.kind != LightKind::area_quad) continue;
    auto& c = light.corners;
    Ray r   = ray;
    r.tmax  = tmax;
    float t, b1, b2;
    bool hit = intersect_triangle(r, c[0], c[1] - c[0], c[2] - c[0], t, b1, b2) ||
               intersect_triangle(r, c[0], c[2] - c[0], c[3] - c[0], t, b1, b2);
    if (hit && dot(light_normal(light), ray.d) < 0) total += light.emission;
  }
  return total;
}

PathRadiance trace_path(const World& world, Ray ray, Pcg32& rng, const TraceOptions& opt) {
  PathRadiance out;
  rgb throughput = {1, 1, 1};
  int bounces    = 0;
  int crossings  = 0;
  bool specular  = true;  // camera rays behave like a specular chain
  float eps      = world.epsilon();
  auto deposit = [&](int events, rgb value) {
    if (events <= 1)
      out.direct += value;
    else
      out.indirect += value;
  };

  for (;;) {
    auto hit = world.bvh.intersect(ray);
    if (specular) deposit(bounces, throughput * area_light_emission(world, ray, hit ? hit.t : ray.tmax));
    if (!hit) {
      deposit(bounces, throughput * world.background);
      break;
    }
    auto wo = -ray.d;
    auto sp = world.surface(hit.triangle, hit.b1, hit.b2, wo);

    if (sp.transparent && rng.next_float() >= sp.alpha) {
      // straight transmission through a thin sheet; not a scattering event
      if (++crossings > opt.max_crossings) break;
      throughput *= sp.tint;
      ray = Ray{sp.position - sp.geo_normal * eps, ray.d};
      continue;
    }

    if (max_component(sp.emission) > 0) deposit(bounces, throughput * sp.emission);

    int events = bounces + 1;
    for (auto& light : world.lights) {
      float u1 = rng.next_float(), u2 = rng.next_float();
      auto ls  = sample_light(light, sp.position, u1, u2);
      if (!ls) continue;
      auto f = bsdf_eval(sp, wo, ls->wi);
      if (max_component(f) <= 0) continue;
      auto tr = transmittance(world, sp.position, sp.geo_normal, ls->point);
      if (max_component(tr) <= 0) continue;
      deposit(events, throughput * f * ls->radiance * tr * dot(sp.normal, ls->wi));
    }
    if (events >= opt.max_depth) break;

    float u_lobe = rng.next_float(), u1 = rng.next_float(), u2 = rng.next_float();
    auto sample  = bsdf_sample(sp, wo, u_lobe, u1, u2);
    if (!sample) break;
    throughput *= sample->weight;
    specular = sample->specular;
    bounces  = events;
    if (bounces >= opt.roulette_depth) {
      float q = std::clamp(max_component(throughput), 0.05f, 0.95f);
      if (rng.next_float() >= q) break;
      throughput = throughput / q;
    }
    if (max_component(throughput) <= 0) break;
    ray = Ray{sp.position + sp.geo_normal * eps, sample->wi};
  }
  return out;
}

struct Accumulated {
  std::vector<double> direct, indirect;  // 3 doubles per pixel, summed over samples
};

Accumulated render(const World& world, int width, int height, int spp, std::uint64_t seed,
    const TraceOptions& options, TraceStats* stats) {
  auto camera = make_camera(world.camera, width, height);
  Accumulated acc;
  acc.direct.assign(std::size_t(width) * height * 3, 0.0);
  acc.indirect.assign(std::size_t(width) * height * 3, 0.0);
  std::atomic<std::uint64_t> rejected{0};
  parallel_for(std::size_t(height), [&](std::size_t row) {
    int y = static_cast<int>(row);
    for (int x = 0; x < width; x++) {
      double d[3] = {0, 0, 0}, ind[3] = {0, 0, 0};
      for (int s = 0; s < spp; s++) {
        PathRadiance r;
        for (int attempt = 0; attempt <= options.max_nan_retries; attempt++) {
          Pcg32 rng(hash_values(seed, x, y, s, attempt));
          float jx = rng.next_float(), jy = rng.next_float();
          r = trace_path(world, camera.ray(x + jx, y + jy), rng, options);
          if (isfinite(r.direct) && isfinite(r.indirect)) break;
          rejected.fetch_add(1);
          r = {};
        }
        for (int c = 0; c < 3; c++) {
          d[c] += r.direct[c];
          ind[c] += r.indirect[c];
        }
      }
      auto base = (std::size_t(y) * width + x) * 3;
      for (int c = 0; c < 3; c++) {
        acc.direct[base + c]   = d[c];
        acc.indirect[base + c] = ind[c];
      }
    }
  });
  if (stats) stats->rejected_samples += rejected.load();
  return acc;
}

}  // namespace

RadianceImage trace_image(const World& world, int width, int height, int spp, std::uint64_t seed,
    const TraceOptions& options, TraceStats* stats) {
  auto acc = render(world, width, height, spp, seed, options, stats);
  RadianceImage image(width, height);
  for (std::size_t i = 0; i < image.pixels.size(); i++)
    for (int c = 0; c < 3; c++)
      image.pixels[i][c] = static_cast<float>((acc.direct[3 * i + c] + acc.indirect[3 * i + c]) / spp);
  return image;
}

RadianceImage trace_image(const SceneInstance& instance, int width, int height, int spp, std::uint64_t seed,
    const TraceOptions& options, TraceStats* stats) {
  return trace_image(build_world(instance), width, height, spp, seed, options, stats);
}

std::pair<RadianceImage, RadianceImage> split_direct_indirect(const World& world, int width, int height,
    int spp, std::uint64_t seed, const TraceOptions& options, TraceStats* stats) {
  auto acc = render(world, width, height, spp, seed, options, stats);
  RadianceImage direct(width, height), indirect(width, height);
  for (std::size_t i = 0; i < direct.pixels.size(); i++) {
    for (int c = 0; c < 3; c++) {
      direct.pixels[i][c]   = static_cast<float>(acc.direct[3 * i + c] / spp);
      indirect.pixels[i][c] = static_cast<float>(acc.indirect[3 * i + c] / spp);
    }
  }
  return {std::move(direct), std::move(indirect)};
}

std::pair<RadianceImage, RadianceImage> split_direct_indirect(const SceneInstance& instance, int width,
    int height, int spp, std::uint64_t seed, const TraceOptions& options, TraceStats* stats) {
  return split_direct_indirect(build_world(instance), width, height, spp, seed, options, stats);
}

CoverageMask trace_coverage(const World& world, int width, int height) {
  auto camera = make_camera(world.camera, width, height);
  CoverageMask mask(width, height);
  for (int y = 0; y < height; y++) {
    for (int x = 0; x < width; x++) {
      auto hit = world.bvh.intersect(camera.ray(x + 0.5f, y + 0.5f));
      mask.mask[std::size_t(y) * width + x] = hit && world.objects[world.triangles[hit.triangle].object].transparent;
    }
  }
  return mask;
}

CoverageMask trace_coverage(const SceneInstance& instance, int width, int height) {
  return trace_coverage(build_world(instance), width, height);
}

std::optional<SurfacePoint> first_opaque_hit(const World& world, const Camera& camera, int x, int y) {
  auto ray = camera.ray(x + 0.5f, y + 0.5f);
  for (int crossing = 0; crossing < 64; crossing++) {
    auto hit = world.bvh.intersect(ray);
    if (!hit) return std::nullopt;
    auto sp = world.surface(hit.triangle, hit.b1, hit.b2, -ray.d);
    if (!sp.transparent) return sp;
    ray.tmin = hit.t + world.epsilon();
  }
  return std::nullopt;
}

}  // namespace glassbuf
