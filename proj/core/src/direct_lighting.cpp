#include <cmath>

#include "glassbuf/bsdf.hpp"
#include "glassbuf/parallel.hpp"
#include "glassbuf/raster.hpp"

namespace glassbuf {

namespace {

// Irradiance from a uniform quad emitter of unit radiance at p with normal n
// (Lambert's polygon formula, no horizon clipping).
float quad_irradiance(const Light& light, vec3f p, vec3f n) {
  auto nl = light_normal(light);
  if (dot(nl, p - light_centroid(light)) <= 0) return 0;
  double sum = 0, reference = 0;
  for (int i = 0; i < 4; i++) {
    auto a = normalize(light.corners[i] - p);
    auto b = normalize(light.corners[(i + 1) % 4] - p);
    auto g = cross(a, b);
    float len = length(g);
    if (len <= 0) continue;
    g = g / len;
    double theta = std::acos(std::clamp(double(dot(a, b)), -1.0, 1.0));
    sum += theta * dot(g, n);
    reference += theta * dot(g, -nl);
  }
  // the winding seen from p decides the sign; the reference term is positive
  // for the emitting side
  if (reference < 0) sum = -sum;
  return static_cast<float>(std::max(0.0, sum) * 0.5);
}

rgb glossy_eval(const SurfacePoint& sp, vec3f wo, vec3f wi) {
  if (sp.roughness < mirror_roughness || sp.roughness >= 1) return {0, 0, 0};
  float cos_o = dot(sp.normal, wo), cos_i = dot(sp.normal, wi);
  if (cos_o <= 0 || cos_i <= 0) return {0, 0, 0};
  float alpha = std::max(sp.roughness * sp.roughness, 1e-4f);
  auto h      = normalize(wo + wi);
  float spec  = ggx_d(dot(sp.normal, h), alpha) * ggx_g1(cos_o, alpha) * ggx_g1(cos_i, alpha) / (4 * cos_o * cos_i);
  return sp.albedo * ((1 - sp.roughness) * spec);
}

rgb shade(const World& world, const SurfacePoint& sp, vec3f wo) {
  rgb total = {0, 0, 0};
  for (auto& light : world.lights) {
    if (light.kind == LightKind::point) {
      auto ls = sample_light(light, sp.position, 0, 0);
      if (!ls) continue;
      float cos_i = dot(sp.normal, ls->wi);
      if (cos_i <= 0) continue;
      auto f = bsdf_eval(sp, wo, ls->wi);
      if (max_component(f) <= 0) continue;
      total += f * ls->radiance * cos_i * transmittance(world, sp.position, sp.normal, ls->point);
      continue;
    }
    auto centroid = light_centroid(light);
    auto tr       = transmittance(world, sp.position, sp.normal, centroid);
    if (max_component(tr) <= 0) continue;
    rgb radiance = sp.albedo * (sp.roughness / pi) * quad_irradiance(light, sp.position, sp.normal);
    auto d       = centroid - sp.position;
    float dist2  = dot(d, d);
    if (dist2 > 0) {
      auto wi     = d / std::sqrt(dist2);
      float cos_l = -dot(light_normal(light), wi);
      float cos_i = dot(sp.normal, wi);
      if (cos_l > 0 && cos_i > 0)
        radiance += glossy_eval(sp, wo, wi) * (cos_i * light_area(light) * cos_l / dist2);
    }
    total += light.emission * radiance * tr;
  }
  return total;
}

}  // namespace

void compute_direct_lighting(GBuffer& g, const World& world) {
  parallel_for(std::size_t(g.height), [&](std::size_t row) {
    int y = static_cast<int>(row);
    for (int x = 0; x < g.width; x++) {
      if (g.at(gch::depth, x, y) >= 1) {
        g.set(gch::ld, x, y, {0, 0, 0});
        continue;
      }
      SurfacePoint sp;
      sp.position   = g.vec(gch::position, x, y);
      sp.normal     = g.vec(gch::normal, x, y);
      sp.geo_normal = sp.normal;
      sp.albedo     = g.vec(gch::albedo, x, y);
      sp.roughness  = g.at(gch::roughness, x, y);
      g.set(gch::ld, x, y, shade(world, sp, g.vec(gch::wo, x, y)));
    }
  });
}

}  // namespace glassbuf
