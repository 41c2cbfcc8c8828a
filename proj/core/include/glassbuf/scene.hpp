#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "glassbuf/image.hpp"
#include "glassbuf/math.hpp"

namespace glassbuf {

struct Mesh {
  std::vector<vec3f> positions;
  std::vector<vec3f> normals;
  std::vector<vec2f> uvs;
  std::vector<std::array<int, 3>> triangles;
};

struct Material {
  rgb albedo = {0.8f, 0.8f, 0.8f};
  std::shared_ptr<const Texture> albedo_texture;  // multiplies albedo when present
  std::string albedo_texture_path;
  float roughness = 1.0f;
  rgb emission    = {0, 0, 0};
  float alpha     = 1.0f;          // < 1 only for transparent objects
  rgb tint        = {1, 1, 1};     // straight-transmission color, transparent only
};

struct Object {
  std::string name;
  Mesh mesh;
  Material material;
  bool transparent = false;
  affine3f transform;
};

enum class LightKind { point, area_quad };

// Point lights carry intensity (radiance x m^2, i.e. W/sr); area quads carry
// radiance emitted on the side of cross(c1 - c0, c3 - c0).
struct Light {
  std::string name;
  LightKind kind = LightKind::point;
  vec3f position;
  std::array<vec3f, 4> corners{};
  rgb emission = {1, 1, 1};
};

struct CameraRanges {
  bbox3f position;
  bbox3f look_at;
  float fov_min_deg = 40;
  float fov_max_deg = 40;
  vec3f up          = {0, 1, 0};
};

enum class VariableKind { roughness, translation, light_scale, color };

// Named uniform range over one scene parameter. Scalar kinds use component x.
struct VariableSpec {
  std::string name;
  VariableKind kind = VariableKind::roughness;
  std::string target;  // object name, or light name for light_scale
  vec3f min;
  vec3f max;

  bool is_vector() const { return kind == VariableKind::translation || kind == VariableKind::color; }
};

struct Scene {
  std::vector<Object> objects;
  std::vector<Light> lights;
  CameraRanges camera_ranges;
  std::vector<VariableSpec> variables;
  rgb background = {0, 0, 0};

  std::size_t transparent_count() const;
  // World-space bounds of all geometry over every reachable translation.
  bbox3f bounds() const;
};

struct CameraPose {
  vec3f position;
  vec3f look_at;
  vec3f up       = {0, 1, 0};
  float fov_deg  = 40;  // vertical field of view

  bool operator==(const CameraPose&) const = default;
};

// One fully resolved draw of a scene: camera and every variable fixed.
struct SceneInstance {
  std::shared_ptr<const Scene> scene;
  CameraPose camera;
  std::vector<vec3f> variable_values;  // parallel to scene->variables
  std::uint64_t seed = 0;
};

// Throws ValidationError naming the violated invariant.
void validate_scene(const Scene& scene);

// Parses a scene JSON document; relative mesh/texture paths resolve against
// base_dir. Throws ParseError on malformed input, ValidationError on invariant
// violations and std::runtime_error on missing files.
Scene parse_scene(const std::string& json_text, const std::filesystem::path& base_dir);
Scene load_scene(const std::filesystem::path& path);

// Draws camera and variable values uniformly from the declared ranges. The draw
// order is: camera position (x,y,z), look-at (x,y,z), fov, then variables in
// declaration order (one draw per scalar, three per vector). Pure in
// (scene, seed).
SceneInstance sample_instance(std::shared_ptr<const Scene> scene, std::uint64_t seed);

// Instance with an explicit camera and every variable at the midpoint of its range.
SceneInstance make_instance(std::shared_ptr<const Scene> scene, const CameraPose& camera,
    std::uint64_t seed = 0);

Mesh make_quad(const std::array<vec3f, 4>& corners);
Mesh make_box(vec3f size);
Mesh make_sphere(float radius, int slices, int stacks, bool smooth = true);
Mesh load_obj(const std::filesystem::path& path);

}  // namespace glassbuf
