#include <algorithm>
#include <numeric>

#include "glassbuf/bvh.hpp"

namespace glassbuf {

bool intersect_triangle(const Ray& ray, vec3f p0, vec3f e1, vec3f e2, float& t, float& b1, float& b2) {
  auto pvec = cross(ray.d, e2);
  float det = dot(e1, pvec);
  if (det == 0) return false;
  float inv = 1.0f / det;
  // slack on the barycentric bounds so rays through a shared edge cannot slip
  // between its two triangles
  constexpr float slack = 1e-6f;
  auto tvec = ray.o - p0;
  float u   = dot(tvec, pvec) * inv;
  if (u < -slack || u > 1 + slack) return false;
  auto qvec = cross(tvec, e1);
  float v   = dot(ray.d, qvec) * inv;
  if (v < -slack || u + v > 1 + slack) return false;
  float tt = dot(e2, qvec) * inv;
  if (!(tt > ray.tmin && tt < ray.tmax)) return false;
  t  = tt;
  b1 = u;
  b2 = v;
  return true;
}

namespace {

bool hit_box(const bbox3f& box, vec3f o, vec3f inv_d, float tmin, float tmax) {
  for (int a = 0; a < 3; a++) {
    float t0 = (box.min[a] - o[a]) * inv_d[a];
    float t1 = (box.max[a] - o[a]) * inv_d[a];
    if (t0 > t1) std::swap(t0, t1);
    // NaN from 0 * inf keeps the previous bounds
    tmin = t0 > tmin ? t0 : tmin;
    tmax = t1 < tmax ? t1 : tmax;
    if (tmin > tmax * 1.00000024f) return false;
  }
  return true;
}

}  // namespace

Bvh::Bvh(std::span<const std::array<vec3f, 3>> triangles) {
  tris_.reserve(triangles.size());
  for (std::size_t i = 0; i < triangles.size(); i++) {
    auto& p = triangles[i];
    tris_.push_back({p[0], p[1] - p[0], p[2] - p[0], static_cast<int>(i)});
  }
  if (!tris_.empty()) {
    nodes_.reserve(2 * tris_.size());
    build(0, static_cast<int>(tris_.size()));
  }
}

int Bvh::build(int start, int end) {
  int index = static_cast<int>(nodes_.size());
  nodes_.emplace_back();
  bbox3f box, centroids;
  for (int i = start; i < end; i++) {
    auto& t = tris_[i];
    box.expand(t.p0);
    box.expand(t.p0 + t.e1);
    box.expand(t.p0 + t.e2);
    centroids.expand(t.p0 + (t.e1 + t.e2) / 3.0f);
  }
  nodes_[index].box = box;
  int count = end - start;
  auto extent = centroids.size();
  int axis = extent.x >= extent.y && extent.x >= extent.z ? 0 : (extent.y >= extent.z ? 1 : 2);
  if (count <= 4 || extent[axis] <= 0) {
    nodes_[index].start = start;
    nodes_[index].count = count;
    return index;
  }
  int mid = start + count / 2;
  auto key = [axis](const Tri& t) { return (t.p0 + (t.e1 + t.e2) / 3.0f)[axis]; };
  std::nth_element(tris_.begin() + start, tris_.begin() + mid, tris_.begin() + end, [&](const Tri& a, const Tri& b) {
    float ka = key(a), kb = key(b);
    return ka < kb || (ka == kb && a.id < b.id);
  });
  int left  = build(start, mid);
  int right = build(mid, end);
  nodes_[index].left  = left;
  nodes_[index].right = right;
  return index;
}

Hit Bvh::intersect(const Ray& ray) const {
  Hit hit;
  if (nodes_.empty()) return hit;
  vec3f inv_d = {1 / ray.d.x, 1 / ray.d.y, 1 / ray.d.z};
  Ray r = ray;
  int stack[64];
  int top = 0;
  stack[top++] = 0;
  while (top > 0) {
    auto& node = nodes_[stack[--top]];
    if (!hit_box(node.box, r.o, inv_d, r.tmin, r.tmax)) continue;
    if (node.count > 0) {
      for (int i = node.start; i < node.start + node.count; i++) {
        auto& t = tris_[i];
        float tt, b1, b2;
        if (intersect_triangle(r, t.p0, t.e1, t.e2, tt, b1, b2)) {
          r.tmax = tt;
          hit    = {t.id, tt, b1, b2};
        }
      }
    } else {
      stack[top++] = node.left;
      stack[top++] = node.right;
    }
  }
  return hit;
}

}  // namespace glassbuf
