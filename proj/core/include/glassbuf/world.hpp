#pragma once

#include <string>
#include <vector>

#include "glassbuf/bvh.hpp"
#include "glassbuf/scene.hpp"

namespace glassbuf {

// Pinhole camera for a given image size. Pixel (x, y) covers
// [x, x+1) x [y, y+1) with row 0 at the top; pixel centers sit at +0.5.
struct Camera {
  vec3f eye;
  vec3f forward, right, up;
  float tan_half_fov = 0;
  float aspect       = 1;
  int width = 0, height = 0;

  Ray ray(float px, float py) const;
  // (x, y, z) in camera space; z is the distance along forward.
  vec3f to_camera(vec3f p) const;
  // Continuous pixel coordinates of a camera-space point with z > 0.
  vec2f project(vec3f pc) const;
};

Camera make_camera(const CameraPose& pose, int width, int height);

struct WorldTriangle {
  std::array<vec3f, 3> p;
  std::array<vec3f, 3> n;
  std::array<vec2f, 3> uv;
  int object = 0;
};

struct WorldObject {
  std::string name;
  Material material;  // with variable values applied
  bool transparent = false;
  int first_triangle = 0, triangle_count = 0;
};

// Surface attributes at a ray hit or rasterized fragment. Normals are
// face-forwarded toward the viewer (wo).
struct SurfacePoint {
  vec3f position;
  vec3f normal;      // shading normal
  vec3f geo_normal;  // geometric normal
  vec2f uv;
  rgb albedo;
  float roughness = 1;
  float alpha     = 1;
  rgb tint        = {1, 1, 1};
  rgb emission    = {0, 0, 0};
  bool transparent = false;
  int object = -1;
};

// World-space geometry of one SceneInstance: transforms and variables baked
// in. Both the path tracer and the rasterizer consume this, so they see the
// same triangles.
struct World {
  std::vector<WorldTriangle> triangles;
  std::vector<WorldObject> objects;
  std::vector<Light> lights;  // with light_scale applied
  rgb background;
  CameraPose camera;
  bbox3f bounds;
  float depth_scale = 1;  // camera-space z divided by this gives normalized depth
  Bvh bvh;

  SurfacePoint surface(int triangle, float b1, float b2, vec3f wo) const;
  // Ray epsilon used to offset spawned rays from surfaces.
  float epsilon() const { return ray_epsilon; }
  float ray_epsilon = 1e-4f;
};

World build_world(const SceneInstance& instance);

}  // namespace glassbuf
