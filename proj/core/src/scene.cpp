#include <algorithm>
#include <cmath>
#include <sstream>

#include "glassbuf/errors.hpp"
#include "glassbuf/rng.hpp"
#include "glassbuf/scene.hpp"

namespace glassbuf {

// -----------------------------------------------------------------------------
// AFFINE TRANSFORMS
// -----------------------------------------------------------------------------

vec3f affine3f::normal(vec3f n) const {
  // cofactor matrix of the linear part == det * inverse transpose
  float a = m[0], b = m[1], c = m[2];
  float d = m[4], e = m[5], f = m[6];
  float g = m[8], h = m[9], i = m[10];
  vec3f r0 = {e * i - f * h, f * g - d * i, d * h - e * g};
  vec3f r1 = {c * h - b * i, a * i - c * g, b * g - a * h};
  vec3f r2 = {b * f - c * e, c * d - a * f, a * e - b * d};
  float det = a * r0.x + b * r0.y + c * r0.z;
  vec3f out = {dot(r0, n), dot(r1, n), dot(r2, n)};
  return normalize(det < 0 ? -out : out);
}

affine3f affine3f::operator*(const affine3f& o) const {
  affine3f r;
  for (int row = 0; row < 3; row++) {
    for (int col = 0; col < 4; col++) {
      float v = m[row * 4 + 0] * o.m[0 * 4 + col] + m[row * 4 + 1] * o.m[1 * 4 + col] +
                m[row * 4 + 2] * o.m[2 * 4 + col];
      if (col == 3) v += m[row * 4 + 3];
      r.m[row * 4 + col] = v;
    }
  }
  return r;
}

affine3f affine3f::translation(vec3f t) { return {{1, 0, 0, t.x, 0, 1, 0, t.y, 0, 0, 1, t.z}}; }

affine3f affine3f::scaling(vec3f s) { return {{s.x, 0, 0, 0, 0, s.y, 0, 0, 0, 0, s.z, 0}}; }

affine3f affine3f::rotation(vec3f axis, float degrees) {
  auto u = normalize(axis);
  float rad = degrees * pi / 180;
  float c = std::cos(rad), s = std::sin(rad), t = 1 - c;
  return {{t * u.x * u.x + c, t * u.x * u.y - s * u.z, t * u.x * u.z + s * u.y, 0,
      t * u.x * u.y + s * u.z, t * u.y * u.y + c, t * u.y * u.z - s * u.x, 0,
      t * u.x * u.z - s * u.y, t * u.y * u.z + s * u.x, t * u.z * u.z + c, 0}};
}

// -----------------------------------------------------------------------------
// SCENE QUERIES
// -----------------------------------------------------------------------------

std::size_t Scene::transparent_count() const {
  return static_cast<std::size_t>(
      std::count_if(objects.begin(), objects.end(), [](const Object& o) { return o.transparent; }));
}

bbox3f Scene::bounds() const {
  bbox3f box;
  for (auto& object : objects) {
    bbox3f local;
    for (auto& p : object.mesh.positions) local.expand(object.transform.point(p));
    box.expand(local);
    for (auto& var : variables) {
      if (var.kind != VariableKind::translation || var.target != object.name) continue;
      box.expand(local.min + var.min);
      box.expand(local.max + var.max);
      box.expand(local.min + var.max);
      box.expand(local.max + var.min);
    }
  }
  for (auto& light : lights) {
    if (light.kind == LightKind::point) {
      box.expand(light.position);
    } else {
      for (auto& c : light.corners) box.expand(c);
    }
  }
  return box;
}

// -----------------------------------------------------------------------------
// VALIDATION
// -----------------------------------------------------------------------------

namespace {

[[noreturn]] void fail(const std::string& what) { throw ValidationError(what); }

bool in_unit(vec3f v) { return min_component(v) >= 0 && max_component(v) <= 1; }

void validate_mesh(const Object& object) {
  auto& mesh = object.mesh;
  auto where = "object '" + object.name + "'";
  if (mesh.triangles.empty()) fail(where + ": mesh has no triangles");
  if (mesh.normals.size() != mesh.positions.size())
    fail(where + ": normals count must equal positions count");
  if (mesh.uvs.size() != mesh.positions.size()) fail(where + ": uvs count must equal positions count");
  for (auto& tri : mesh.triangles)
    for (int v : tri)
      if (v < 0 || std::size_t(v) >= mesh.positions.size()) fail(where + ": triangle index out of range");
  for (auto& n : mesh.normals)
    if (std::abs(length(n) - 1) > 1e-3f) fail(where + ": normals must be unit length");
  for (auto& uv : mesh.uvs)
    if (uv.x < 0 || uv.x > 1 || uv.y < 0 || uv.y > 1) fail(where + ": uvs must lie in [0,1]^2");
}

}  // namespace

void validate_scene(const Scene& scene) {
  if (scene.lights.empty()) fail("scene must have at least one light");
  if (std::none_of(scene.objects.begin(), scene.objects.end(), [](auto& o) { return !o.transparent; }))
    fail("scene must have at least one opaque object");
  for (auto& object : scene.objects) {
    auto& mat  = object.material;
    auto where = "object '" + object.name + "'";
    validate_mesh(object);
    if (!in_unit(mat.albedo)) fail(where + ": albedo must lie in [0,1]^3");
    if (!(mat.roughness >= 0 && mat.roughness <= 1)) fail(where + ": roughness must lie in [0,1]");
    if (min_component(mat.emission) < 0 || !isfinite(mat.emission)) fail(where + ": emission must be >= 0");
    if (!(mat.alpha > 0 && mat.alpha <= 1)) fail(where + ": alpha must lie in (0,1]");
    if (mat.alpha < 1 && !object.transparent) fail(where + ": alpha < 1 requires the transparent flag");
    if (object.transparent) {
      if (!in_unit(mat.tint)) fail(where + ": tint must lie in [0,1]^3");
      if (max_component(mat.emission) > 0) fail(where + ": transparent objects cannot be emissive");
    }
  }
  for (auto& light : scene.lights) {
    auto where = "light '" + light.name + "'";
    if (min_component(light.emission) < 0 || !isfinite(light.emission)) fail(where + ": emission must be >= 0");
    if (light.kind == LightKind::area_quad) {
      auto& c = light.corners;
      auto n  = cross(c[1] - c[0], c[3] - c[0]);
      if (length(n) <= 0) fail(where + ": degenerate area quad");
      float size = std::max(length(c[1] - c[0]), length(c[3] - c[0]));
      if (std::abs(dot(normalize(n), c[2] - c[0])) > 1e-4f * size) fail(where + ": area-quad corners must be coplanar");
    }
  }
  auto& cam = scene.camera_ranges;
  if (cam.position.empty() || cam.look_at.empty()) fail("camera_ranges: boxes must satisfy min <= max");
  if (!(cam.fov_min_deg > 0 && cam.fov_min_deg <= cam.fov_max_deg && cam.fov_max_deg < 180))
    fail("camera_ranges: fov must satisfy 0 < min <= max < 180");
  if (length(cam.up) <= 0) fail("camera_ranges: up vector must be non-zero");
  for (auto& var : scene.variables) {
    auto where = "variable '" + var.name + "'";
    int comps  = var.is_vector() ? 3 : 1;
    for (int i = 0; i < comps; i++)
      if (!(var.min[i] <= var.max[i])) fail(where + ": min must be <= max");
    switch (var.kind) {
      case VariableKind::light_scale: {
        if (std::none_of(scene.lights.begin(), scene.lights.end(), [&](auto& l) { return l.name == var.target; }))
          fail(where + ": unknown light '" + var.target + "'");
        if (var.min.x < 0) fail(where + ": light scale must be >= 0");
        break;
      }
      default: {
        auto it = std::find_if(scene.objects.begin(), scene.objects.end(), [&](auto& o) { return o.name == var.target; });
        if (it == scene.objects.end()) fail(where + ": unknown object '" + var.target + "'");
        if (var.kind == VariableKind::roughness && (var.min.x < 0 || var.max.x > 1))
          fail(where + ": roughness range must lie in [0,1]");
        if (var.kind == VariableKind::color && (!in_unit(var.min) || !in_unit(var.max)))
          fail(where + ": color range must lie in [0,1]^3");
        break;
      }
    }
  }
}

// -----------------------------------------------------------------------------
// SAMPLING
// -----------------------------------------------------------------------------

SceneInstance sample_instance(std::shared_ptr<const Scene> scene, std::uint64_t seed) {
  Pcg32 rng(splitmix64(seed));
  auto& ranges = scene->camera_ranges;
  SceneInstance instance;
  instance.seed = seed;
  auto draw3 = [&](const vec3f& lo, const vec3f& hi) {
    vec3f v;
    v.x = rng.uniform(lo.x, hi.x);
    v.y = rng.uniform(lo.y, hi.y);
    v.z = rng.uniform(lo.z, hi.z);
    return v;
  };
  instance.camera.position = draw3(ranges.position.min, ranges.position.max);
  instance.camera.look_at  = draw3(ranges.look_at.min, ranges.look_at.max);
  instance.camera.fov_deg  = rng.uniform(ranges.fov_min_deg, ranges.fov_max_deg);
  instance.camera.up       = ranges.up;
  instance.variable_values.reserve(scene->variables.size());
  for (auto& var : scene->variables) {
    if (var.is_vector()) {
      instance.variable_values.push_back(draw3(var.min, var.max));
    } else {
      instance.variable_values.push_back({rng.uniform(var.min.x, var.max.x), 0, 0});
    }
  }
  instance.scene = std::move(scene);
  return instance;
}

SceneInstance make_instance(std::shared_ptr<const Scene> scene, const CameraPose& camera, std::uint64_t seed) {
  SceneInstance instance;
  instance.camera = camera;
  instance.seed   = seed;
  for (auto& var : scene->variables) instance.variable_values.push_back((var.min + var.max) * 0.5f);
  instance.scene = std::move(scene);
  return instance;
}

// -----------------------------------------------------------------------------
// MESH GENERATORS
// -----------------------------------------------------------------------------

Mesh make_quad(const std::array<vec3f, 4>& corners) {
  Mesh mesh;
  auto n = normalize(cross(corners[1] - corners[0], corners[3] - corners[0]));
  mesh.positions = {corners.begin(), corners.end()};
  mesh.normals   = {n, n, n, n};
  mesh.uvs       = {{0, 0}, {1, 0}, {1, 1}, {0, 1}};
  mesh.triangles = {{0, 1, 2}, {0, 2, 3}};
  return mesh;
}

Mesh make_box(vec3f size) {
  Mesh mesh;
  auto h = size * 0.5f;
  // each face: normal, u axis, v axis
  const vec3f faces[6][3] = {
      {{1, 0, 0}, {0, 0, -1}, {0, 1, 0}},
      {{-1, 0, 0}, {0, 0, 1}, {0, 1, 0}},
      {{0, 1, 0}, {1, 0, 0}, {0, 0, -1}},
      {{0, -1, 0}, {1, 0, 0}, {0, 0, 1}},
      {{0, 0, 1}, {1, 0, 0}, {0, 1, 0}},
      {{0, 0, -1}, {-1, 0, 0}, {0, 1, 0}},
  };
  for (auto& face : faces) {
    auto [n, u, v] = std::tuple{face[0], face[1], face[2]};
    auto c = n * h;
    auto base = static_cast<int>(mesh.positions.size());
    const float su[4] = {-1, 1, 1, -1};
    const float sv[4] = {-1, -1, 1, 1};
    for (int k = 0; k < 4; k++) {
      mesh.positions.push_back(c + u * h * su[k] + v * h * sv[k]);
      mesh.normals.push_back(n);
      mesh.uvs.push_back({(su[k] + 1) / 2, (sv[k] + 1) / 2});
    }
    mesh.triangles.push_back({base, base + 1, base + 2});
    mesh.triangles.push_back({base, base + 2, base + 3});
  }
  return mesh;
}

Mesh make_sphere(float radius, int slices, int stacks, bool smooth) {
  Mesh grid;
  for (int j = 0; j <= stacks; j++) {
    float v     = float(j) / stacks;
    float theta = v * pi;
    for (int i = 0; i <= slices; i++) {
      float u   = float(i) / slices;
      float phi = u * 2 * pi;
      vec3f n   = {std::sin(theta) * std::cos(phi), std::cos(theta), -std::sin(theta) * std::sin(phi)};
      grid.positions.push_back(n * radius);
      grid.normals.push_back(normalize(n));
      grid.uvs.push_back({u, 1 - v});
    }
  }
  auto idx = [&](int i, int j) { return j * (slices + 1) + i; };
  for (int j = 0; j < stacks; j++) {
    for (int i = 0; i < slices; i++) {
      if (j != 0) grid.triangles.push_back({idx(i, j), idx(i, j + 1), idx(i + 1, j)});
      if (j != stacks - 1) grid.triangles.push_back({idx(i + 1, j), idx(i, j + 1), idx(i + 1, j + 1)});
    }
  }
  if (smooth) return grid;
  Mesh flat;
  for (auto& tri : grid.triangles) {
    auto& p = grid.positions;
    auto n  = normalize(cross(p[tri[1]] - p[tri[0]], p[tri[2]] - p[tri[0]]));
    auto base = static_cast<int>(flat.positions.size());
    for (int k = 0; k < 3; k++) {
      flat.positions.push_back(p[tri[k]]);
      flat.normals.push_back(n);
      flat.uvs.push_back(grid.uvs[tri[k]]);
    }
    flat.triangles.push_back({base, base + 1, base + 2});
  }
  return flat;
}

}  // namespace glassbuf
