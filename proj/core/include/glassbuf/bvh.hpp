#pragma once

#include <limits>
#include <span>
#include <vector>

#include "glassbuf/math.hpp"

namespace glassbuf {

struct Ray {
  vec3f o;
  vec3f d;
  float tmin = 0;
  float tmax = std::numeric_limits<float>::infinity();
};

struct Hit {
  int triangle = -1;
  float t      = 0;
  float b1 = 0, b2 = 0;  // barycentrics of vertices 1 and 2

  explicit operator bool() const { return triangle >= 0; }
};

// Binary BVH over triangles, split at the object median of the longest
// centroid axis. Construction is deterministic.
class Bvh {
 public:
  Bvh() = default;
  explicit Bvh(std::span<const std::array<vec3f, 3>> triangles);

  Hit intersect(const Ray& ray) const;
  bool empty() const { return nodes_.empty(); }

 private:
  struct Node {
    bbox3f box;
    int start = 0, count = 0;  // leaf range when count > 0
    int left = -1, right = -1;
  };
  struct Tri {
    vec3f p0, e1, e2;
    int id;
  };

  int build(int start, int end);

  std::vector<Node> nodes_;
  std::vector<Tri> tris_;
};

// Moller-Trumbore intersection; returns false on miss or t outside (tmin, tmax).
bool intersect_triangle(const Ray& ray, vec3f p0, vec3f e1, vec3f e2, float& t, float& b1, float& b2);

}  // namespace glassbuf
