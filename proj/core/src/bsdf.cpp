#include <cmath>

#include "glassbuf/bsdf.hpp"

namespace glassbuf {

namespace {

float ggx_alpha(float roughness) { return std::max(roughness * roughness, 1e-4f); }

vec3f to_world(vec3f local, vec3f n) {
  vec3f t, b;
  make_basis(n, t, b);
  return t * local.x + b * local.y + n * local.z;
}

bool same_side(const SurfacePoint& sp, vec3f wo, vec3f wi) {
  return dot(sp.normal, wi) > 0 && dot(sp.normal, wo) > 0 && dot(sp.geo_normal, wi) > 0;
}

}  // namespace

float ggx_d(float cos_h, float alpha) {
  float a2 = alpha * alpha;
  float d  = cos_h * cos_h * (a2 - 1) + 1;
  return a2 / (pi * d * d);
}

float ggx_g1(float cos_v, float alpha) {
  float c2   = cos_v * cos_v;
  float tan2 = std::max(0.0f, 1 - c2) / std::max(c2, 1e-12f);
  return 2 / (1 + std::sqrt(1 + alpha * alpha * tan2));
}

rgb bsdf_eval(const SurfacePoint& sp, vec3f wo, vec3f wi) {
  if (!same_side(sp, wo, wi)) return {0, 0, 0};
  float kd = sp.roughness;
  rgb f    = sp.albedo * (kd / pi);
  if (sp.roughness >= mirror_roughness && kd < 1) {
    float alpha = ggx_alpha(sp.roughness);
    auto h      = normalize(wo + wi);
    float cos_o = dot(sp.normal, wo), cos_i = dot(sp.normal, wi);
    float spec  = ggx_d(dot(sp.normal, h), alpha) * ggx_g1(cos_o, alpha) * ggx_g1(cos_i, alpha) / (4 * cos_o * cos_i);
    f += sp.albedo * ((1 - kd) * spec);
  }
  return f;
}

float bsdf_pdf(const SurfacePoint& sp, vec3f wo, vec3f wi) {
  if (!same_side(sp, wo, wi)) return 0;
  float kd  = sp.roughness;
  float pdf = kd * dot(sp.normal, wi) / pi;
  if (sp.roughness >= mirror_roughness && kd < 1) {
    float alpha = ggx_alpha(sp.roughness);
    auto h      = normalize(wo + wi);
    float cos_h = dot(sp.normal, h);
    pdf += (1 - kd) * ggx_d(cos_h, alpha) * cos_h / (4 * std::abs(dot(wo, h)));
  }
  return pdf;
}

std::optional<BsdfSample> bsdf_sample(const SurfacePoint& sp, vec3f wo, float u_lobe, float u1, float u2) {
  float kd    = sp.roughness;
  bool mirror = sp.roughness < mirror_roughness;
  vec3f wi;
  if (u_lobe >= kd) {
    if (mirror) {
      wi = reflect(wo, sp.normal);
      if (!same_side(sp, wo, wi)) return std::nullopt;
      return BsdfSample{wi, sp.albedo, true};
    }
    float alpha = ggx_alpha(sp.roughness);
    float tan2  = alpha * alpha * u1 / (1 - u1);
    float cos_t = 1 / std::sqrt(1 + tan2);
    float sin_t = std::sqrt(std::max(0.0f, 1 - cos_t * cos_t));
    float phi   = 2 * pi * u2;
    auto h      = to_world({sin_t * std::cos(phi), sin_t * std::sin(phi), cos_t}, sp.normal);
    wi          = reflect(wo, h);
  } else {
    float r   = std::sqrt(u1);
    float phi = 2 * pi * u2;
    wi = to_world({r * std::cos(phi), r * std::sin(phi), std::sqrt(std::max(0.0f, 1 - u1))}, sp.normal);
    // a direction under the true surface is mirrored back instead of being dropped, which keeps diffuse
    // scattering energy conserving with interpolated normals
    float below = dot(sp.geo_normal, wi);
    if (below <= 0) wi = normalize(wi - sp.geo_normal * (2 * below - 1e-6f));
  }
  if (!same_side(sp, wo, wi)) return std::nullopt;
  float cos_i = dot(sp.normal, wi);
  if (mirror) {
    // diffuse lobe of a mirror mixture: f * cos / (kd * cos / pi) == albedo
    return BsdfSample{wi, sp.albedo, false};
  }
  float pdf = bsdf_pdf(sp, wo, wi);
  if (!(pdf > 0)) return std::nullopt;
  return BsdfSample{wi, bsdf_eval(sp, wo, wi) * (cos_i / pdf), false};
}

// -----------------------------------------------------------------------------
// LIGHTS
// -----------------------------------------------------------------------------

float light_area(const Light& light) {
  if (light.kind == LightKind::point) return 0;
  auto& c = light.corners;
  return 0.5f * (length(cross(c[1] - c[0], c[2] - c[0])) + length(cross(c[2] - c[0], c[3] - c[0])));
}

vec3f light_normal(const Light& light) {
  auto& c = light.corners;
  return normalize(cross(c[1] - c[0], c[3] - c[0]));
}

vec3f light_centroid(const Light& light) {
  if (light.kind == LightKind::point) return light.position;
  auto& c = light.corners;
  return (c[0] + c[1] + c[2] + c[3]) * 0.25f;
}

std::optional<LightSample> sample_light(const Light& light, vec3f p, float u1, float u2) {
  if (light.kind == LightKind::point) {
    auto d      = light.position - p;
    float dist2 = dot(d, d);
    if (dist2 <= 0) return std::nullopt;
    float dist = std::sqrt(dist2);
    return LightSample{light.position, d / dist, dist, light.emission / dist2};
  }
  auto& c  = light.corners;
  float a0 = 0.5f * length(cross(c[1] - c[0], c[2] - c[0]));
  float a1 = 0.5f * length(cross(c[2] - c[0], c[3] - c[0]));
  float area = a0 + a1;
  // pick a triangle by area, then a uniform point inside it
  vec3f q0 = c[0], q1 = c[1], q2 = c[2];
  float split = a0 / area;
  if (u1 < split) {
    u1 = u1 / split;
  } else {
    u1 = (u1 - split) / (1 - split);
    q1 = c[2];
    q2 = c[3];
  }
  float su = std::sqrt(u1);
  auto q   = q0 * (1 - su) + q1 * (su * (1 - u2)) + q2 * (su * u2);
  auto d   = q - p;
  float dist2 = dot(d, d);
  if (dist2 <= 0) return std::nullopt;
  float dist  = std::sqrt(dist2);
  auto wi     = d / dist;
  float cos_l = -dot(light_normal(light), wi);
  if (cos_l <= 0) return std::nullopt;
  return LightSample{q, wi, dist, light.emission * (cos_l * area / dist2)};
}

rgb transmittance(const World& world, vec3f p, vec3f n, vec3f q) {
  auto d     = q - p;
  float dist = length(d);
  if (dist <= 0) return {1, 1, 1};
  d = d / dist;
  float eps = world.epsilon();
  Ray ray{p + n * (dot(n, d) >= 0 ? eps : -eps), d, 0, 0};
  ray.tmax = length(q - ray.o) - eps;
  rgb tr   = {1, 1, 1};
  for (int crossing = 0; crossing < 64; crossing++) {
    auto hit = world.bvh.intersect(ray);
    if (!hit) return tr;
    auto& object = world.objects[world.triangles[hit.triangle].object];
    if (!object.transparent) return {0, 0, 0};
    tr = tr * object.material.tint * (1 - object.material.alpha);
    if (max_component(tr) <= 0) return tr;
    ray.tmin = hit.t + eps;
  }
  return {0, 0, 0};
}

}  // namespace glassbuf
