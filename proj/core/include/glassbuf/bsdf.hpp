#pragma once

#include <optional>

#include "glassbuf/world.hpp"

namespace glassbuf {

// Reflection model shared by the path tracer and the direct-lighting pass:
// Lambertian and GGX lobes mixed by roughness,
//   f = r * albedo / pi + (1 - r) * albedo * D * G / (4 cos_i cos_o),
// with GGX alpha = r^2. Below mirror_roughness the glossy lobe becomes a
// perfect mirror (a delta lobe that eval() does not include).
inline constexpr float mirror_roughness = 0.02f;

struct BsdfSample {
  vec3f wi;
  rgb weight;  // f * cos / pdf
  bool specular = false;
};

rgb bsdf_eval(const SurfacePoint& sp, vec3f wo, vec3f wi);
float bsdf_pdf(const SurfacePoint& sp, vec3f wo, vec3f wi);
std::optional<BsdfSample> bsdf_sample(const SurfacePoint& sp, vec3f wo, float u_lobe, float u1, float u2);

float ggx_d(float cos_h, float alpha);
float ggx_g1(float cos_v, float alpha);

struct LightSample {
  vec3f point;
  vec3f wi;
  float distance = 0;
  rgb radiance;  // incident radiance / pdf (solid-angle conversion included)
};

// Samples a position on the light as seen from p. For point lights the
// sample is deterministic; area quads are sampled uniformly by area.
// Returns nullopt when the light faces away from p.
std::optional<LightSample> sample_light(const Light& light, vec3f p, float u1, float u2);

float light_area(const Light& light);
vec3f light_normal(const Light& light);
vec3f light_centroid(const Light& light);

// Attenuation along the segment p -> q: zero if an opaque surface intervenes,
// otherwise the product of (1 - alpha) * tint over crossed transparent surfaces.
rgb transmittance(const World& world, vec3f p, vec3f n, vec3f q);

}  // namespace glassbuf
