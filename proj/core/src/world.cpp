#include <cmath>

#include "glassbuf/world.hpp"

namespace glassbuf {

Camera make_camera(const CameraPose& pose, int width, int height) {
  Camera cam;
  cam.eye     = pose.position;
  cam.forward = normalize(pose.look_at - pose.position);
  auto right  = cross(cam.forward, pose.up);
  if (length(right) < 1e-6f) right = cross(cam.forward, std::abs(cam.forward.y) < 0.9f ? vec3f{0, 1, 0} : vec3f{1, 0, 0});
  cam.right        = normalize(right);
  cam.up           = cross(cam.right, cam.forward);
  cam.tan_half_fov = std::tan(pose.fov_deg * pi / 360);
  cam.aspect       = float(width) / float(height);
  cam.width        = width;
  cam.height       = height;
  return cam;
}

Ray Camera::ray(float px, float py) const {
  float sx = (2 * px / width - 1) * tan_half_fov * aspect;
  float sy = (1 - 2 * py / height) * tan_half_fov;
  return {eye, normalize(forward + right * sx + up * sy)};
}

vec3f Camera::to_camera(vec3f p) const {
  auto d = p - eye;
  return {dot(d, right), dot(d, up), dot(d, forward)};
}

vec2f Camera::project(vec3f pc) const {
  return {(pc.x / pc.z / (tan_half_fov * aspect) + 1) * 0.5f * width,
      (1 - pc.y / pc.z / tan_half_fov) * 0.5f * height};
}

SurfacePoint World::surface(int triangle, float b1, float b2, vec3f wo) const {
  auto& tri    = triangles[triangle];
  auto& object = objects[tri.object];
  auto& mat    = object.material;
  float b0     = 1 - b1 - b2;
  SurfacePoint sp;
  sp.position   = tri.p[0] * b0 + tri.p[1] * b1 + tri.p[2] * b2;
  sp.geo_normal = normalize(cross(tri.p[1] - tri.p[0], tri.p[2] - tri.p[0]));
  sp.normal     = normalize(tri.n[0] * b0 + tri.n[1] * b1 + tri.n[2] * b2);
  if (dot(sp.geo_normal, wo) < 0) {
    sp.geo_normal = -sp.geo_normal;
    sp.normal     = -sp.normal;
  }
  // interpolated normals can put the viewer below the shading horizon near silhouettes
  if (dot(sp.normal, wo) <= 0) sp.normal = sp.geo_normal;
  sp.uv = {tri.uv[0].x * b0 + tri.uv[1].x * b1 + tri.uv[2].x * b2,
      tri.uv[0].y * b0 + tri.uv[1].y * b1 + tri.uv[2].y * b2};
  sp.albedo = mat.albedo;
  if (mat.albedo_texture) sp.albedo = sp.albedo * mat.albedo_texture->lookup(sp.uv);
  sp.roughness   = mat.roughness;
  sp.alpha       = object.transparent ? mat.alpha : 1.0f;
  sp.tint        = mat.tint;
  sp.emission    = mat.emission;
  sp.transparent = object.transparent;
  sp.object      = tri.object;
  return sp;
}

World build_world(const SceneInstance& instance) {
  auto& scene = *instance.scene;
  World world;
  world.background = scene.background;
  world.camera     = instance.camera;

  std::vector<affine3f> transforms;
  for (auto& object : scene.objects) {
    transforms.push_back(object.transform);
    WorldObject wo;
    wo.name        = object.name;
    wo.material    = object.material;
    wo.transparent = object.transparent;
    world.objects.push_back(wo);
  }
  world.lights = scene.lights;

  for (std::size_t v = 0; v < scene.variables.size(); v++) {
    auto& var   = scene.variables[v];
    auto value  = instance.variable_values[v];
    if (var.kind == VariableKind::light_scale) {
      for (auto& light : world.lights)
        if (light.name == var.target) light.emission = light.emission * value.x;
      continue;
    }
    for (std::size_t o = 0; o < scene.objects.size(); o++) {
      if (scene.objects[o].name != var.target) continue;
      switch (var.kind) {
        case VariableKind::translation: transforms[o] = affine3f::translation(value) * transforms[o]; break;
        case VariableKind::roughness: world.objects[o].material.roughness = value.x; break;
        case VariableKind::color: world.objects[o].material.albedo = value; break;
        default: break;
      }
    }
  }

  std::vector<std::array<vec3f, 3>> positions;
  for (std::size_t o = 0; o < scene.objects.size(); o++) {
    auto& mesh = scene.objects[o].mesh;
    auto& xf   = transforms[o];
    world.objects[o].first_triangle = static_cast<int>(world.triangles.size());
    for (auto& t : mesh.triangles) {
      WorldTriangle wt;
      for (int k = 0; k < 3; k++) {
        wt.p[k]  = xf.point(mesh.positions[t[k]]);
        wt.n[k]  = xf.normal(mesh.normals[t[k]]);
        wt.uv[k] = mesh.uvs[t[k]];
      }
      wt.object = static_cast<int>(o);
      world.triangles.push_back(wt);
      positions.push_back(wt.p);
    }
    world.objects[o].triangle_count = static_cast<int>(world.triangles.size()) - world.objects[o].first_triangle;
  }
  world.bvh = Bvh(positions);

  world.bounds = scene.bounds();
  bbox3f reach = world.bounds;
  reach.expand(scene.camera_ranges.position);
  reach.expand(instance.camera.position);
  world.depth_scale = 1.01f * std::max(length(reach.size()), 1e-3f);
  float extent = std::max(max_component(reach.max), -min_component(reach.min));
  world.ray_epsilon = 1e-4f * std::max(1.0f, extent);
  return world;
}

}  // namespace glassbuf
