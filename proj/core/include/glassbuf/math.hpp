#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>

namespace glassbuf {

inline constexpr float pi = std::numbers::pi_v<float>;

struct vec2f {
  float x = 0, y = 0;
};

struct vec3f {
  float x = 0, y = 0, z = 0;

  constexpr float& operator[](int i) { return i == 0 ? x : (i == 1 ? y : z); }
  constexpr float operator[](int i) const { return i == 0 ? x : (i == 1 ? y : z); }
};

using rgb = vec3f;

constexpr vec3f operator+(vec3f a, vec3f b) { return {a.x + b.x, a.y + b.y, a.z + b.z}; }
constexpr vec3f operator-(vec3f a, vec3f b) { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
constexpr vec3f operator-(vec3f a) { return {-a.x, -a.y, -a.z}; }
constexpr vec3f operator*(vec3f a, vec3f b) { return {a.x * b.x, a.y * b.y, a.z * b.z}; }
constexpr vec3f operator*(vec3f a, float s) { return {a.x * s, a.y * s, a.z * s}; }
constexpr vec3f operator*(float s, vec3f a) { return a * s; }
constexpr vec3f operator/(vec3f a, float s) { return {a.x / s, a.y / s, a.z / s}; }
constexpr vec3f& operator+=(vec3f& a, vec3f b) { return a = a + b; }
constexpr vec3f& operator*=(vec3f& a, vec3f b) { return a = a * b; }
constexpr vec3f& operator*=(vec3f& a, float s) { return a = a * s; }
constexpr bool operator==(vec3f a, vec3f b) { return a.x == b.x && a.y == b.y && a.z == b.z; }

constexpr float dot(vec3f a, vec3f b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
constexpr vec3f cross(vec3f a, vec3f b) {
  return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}
inline float length(vec3f a) { return std::sqrt(dot(a, a)); }
inline vec3f normalize(vec3f a) {
  auto l = length(a);
  return l > 0 ? a / l : a;
}
constexpr float max_component(vec3f a) { return std::max(a.x, std::max(a.y, a.z)); }
constexpr float min_component(vec3f a) { return std::min(a.x, std::min(a.y, a.z)); }
constexpr vec3f min(vec3f a, vec3f b) {
  return {std::min(a.x, b.x), std::min(a.y, b.y), std::min(a.z, b.z)};
}
constexpr vec3f max(vec3f a, vec3f b) {
  return {std::max(a.x, b.x), std::max(a.y, b.y), std::max(a.z, b.z)};
}
inline bool isfinite(vec3f a) {
  return std::isfinite(a.x) && std::isfinite(a.y) && std::isfinite(a.z);
}
inline vec3f reflect(vec3f w, vec3f n) { return -w + 2 * dot(n, w) * n; }

// Right-handed orthonormal basis around a unit vector (Duff et al. 2017).
inline void make_basis(vec3f n, vec3f& t, vec3f& b) {
  float sign = std::copysign(1.0f, n.z);
  float a    = -1.0f / (sign + n.z);
  float bb   = n.x * n.y * a;
  t = {1.0f + sign * n.x * n.x * a, sign * bb, -sign * n.x};
  b = {bb, sign + n.y * n.y * a, -n.y};
}

struct bbox3f {
  vec3f min = {std::numeric_limits<float>::max(), std::numeric_limits<float>::max(),
      std::numeric_limits<float>::max()};
  vec3f max = {std::numeric_limits<float>::lowest(), std::numeric_limits<float>::lowest(),
      std::numeric_limits<float>::lowest()};

  void expand(vec3f p) {
    min = glassbuf::min(min, p);
    max = glassbuf::max(max, p);
  }
  void expand(const bbox3f& b) {
    expand(b.min);
    expand(b.max);
  }
  bool empty() const { return min.x > max.x; }
  vec3f center() const { return (min + max) * 0.5f; }
  vec3f size() const { return max - min; }
};

// Affine transform stored row-major; the last row is implicitly (0,0,0,1).
struct affine3f {
  std::array<float, 12> m = {1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1, 0};

  vec3f point(vec3f p) const {
    return {m[0] * p.x + m[1] * p.y + m[2] * p.z + m[3],
        m[4] * p.x + m[5] * p.y + m[6] * p.z + m[7],
        m[8] * p.x + m[9] * p.y + m[10] * p.z + m[11]};
  }
  vec3f vector(vec3f v) const {
    return {m[0] * v.x + m[1] * v.y + m[2] * v.z, m[4] * v.x + m[5] * v.y + m[6] * v.z,
        m[8] * v.x + m[9] * v.y + m[10] * v.z};
  }
  // Normals transform by the inverse transpose of the linear part.
  vec3f normal(vec3f n) const;
  affine3f operator*(const affine3f& o) const;

  static affine3f translation(vec3f t);
  static affine3f scaling(vec3f s);
  static affine3f rotation(vec3f axis, float degrees);
};

}  // namespace glassbuf
