#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>

#include "glassbuf/errors.hpp"
#include "glassbuf/scene.hpp"
#include "json.hpp"

namespace glassbuf {

using json = nlohmann::json;

namespace {

[[noreturn]] void field_error(const std::string& field, const std::string& what) {
  throw ParseError("field '" + field + "': " + what);
}

float get_float(const json& j, const std::string& field) {
  if (!j.is_number()) field_error(field, "expected a number");
  return j.get<float>();
}

vec3f get_vec3(const json& j, const std::string& field) {
  if (!j.is_array() || j.size() != 3) field_error(field, "expected an array of 3 numbers");
  return {get_float(j[0], field + "[0]"), get_float(j[1], field + "[1]"), get_float(j[2], field + "[2]")};
}

// A scalar s is accepted wherever an RGB triple is expected and means (s,s,s).
vec3f get_rgb(const json& j, const std::string& field) {
  if (j.is_number()) {
    float v = j.get<float>();
    return {v, v, v};
  }
  return get_vec3(j, field);
}

const json& require(const json& j, const char* key, const std::string& field) {
  if (!j.is_object()) field_error(field, "expected an object");
  auto it = j.find(key);
  if (it == j.end()) field_error(field + "." + key, "missing required field");
  return *it;
}

std::vector<float> get_floats(const json& j, const std::string& field) {
  if (!j.is_array()) field_error(field, "expected an array");
  std::vector<float> out;
  out.reserve(j.size());
  for (std::size_t i = 0; i < j.size(); i++) out.push_back(get_float(j[i], field + "[" + std::to_string(i) + "]"));
  return out;
}

Mesh parse_mesh(const json& j, const std::string& field, const std::filesystem::path& base_dir) {
  if (!j.is_object()) field_error(field, "expected an object");
  if (j.contains("obj")) {
    auto& path = j["obj"];
    if (!path.is_string()) field_error(field + ".obj", "expected a file path");
    return load_obj(base_dir / path.get<std::string>());
  }
  if (j.contains("shape")) {
    auto shape = j["shape"].get<std::string>();
    if (shape == "quad") {
      auto& c = require(j, "corners", field);
      if (!c.is_array() || c.size() != 4) field_error(field + ".corners", "expected 4 corners");
      std::array<vec3f, 4> corners;
      for (int k = 0; k < 4; k++) corners[k] = get_vec3(c[k], field + ".corners[" + std::to_string(k) + "]");
      return make_quad(corners);
    }
    if (shape == "box") return make_box(get_vec3(require(j, "size", field), field + ".size"));
    if (shape == "sphere") {
      float radius = get_float(require(j, "radius", field), field + ".radius");
      int slices   = j.value("slices", 48);
      int stacks   = j.value("stacks", 24);
      bool smooth  = j.value("smooth", true);
      if (radius <= 0 || slices < 3 || stacks < 2) field_error(field, "invalid sphere parameters");
      return make_sphere(radius, slices, stacks, smooth);
    }
    field_error(field + ".shape", "unknown shape '" + shape + "'");
  }
  // inline triangle arrays
  Mesh mesh;
  auto positions = get_floats(require(j, "positions", field), field + ".positions");
  auto normals   = get_floats(require(j, "normals", field), field + ".normals");
  if (positions.size() % 3 != 0) field_error(field + ".positions", "length must be a multiple of 3");
  if (normals.size() != positions.size()) field_error(field + ".normals", "length must match positions");
  std::vector<float> uvs;
  if (j.contains("uvs")) {
    uvs = get_floats(j["uvs"], field + ".uvs");
    if (uvs.size() / 2 != positions.size() / 3 || uvs.size() % 2 != 0)
      field_error(field + ".uvs", "length must be 2 per vertex");
  } else {
    uvs.assign(positions.size() / 3 * 2, 0.0f);
  }
  for (std::size_t v = 0; v < positions.size() / 3; v++) {
    mesh.positions.push_back({positions[3 * v], positions[3 * v + 1], positions[3 * v + 2]});
    mesh.normals.push_back({normals[3 * v], normals[3 * v + 1], normals[3 * v + 2]});
    mesh.uvs.push_back({uvs[2 * v], uvs[2 * v + 1]});
  }
  if (j.contains("indices")) {
    auto& idx = j["indices"];
    if (!idx.is_array() || idx.size() % 3 != 0) field_error(field + ".indices", "expected 3 indices per triangle");
    for (std::size_t t = 0; t < idx.size() / 3; t++) {
      std::array<int, 3> tri;
      for (int k = 0; k < 3; k++) {
        if (!idx[3 * t + k].is_number_integer()) field_error(field + ".indices", "expected integers");
        tri[k] = idx[3 * t + k].get<int>();
      }
      mesh.triangles.push_back(tri);
    }
  } else {
    if (mesh.positions.size() % 3 != 0) field_error(field + ".positions", "non-indexed meshes need 3 vertices per triangle");
    for (int v = 0; v + 2 < static_cast<int>(mesh.positions.size()); v += 3) mesh.triangles.push_back({v, v + 1, v + 2});
  }
  return mesh;
}

affine3f parse_transform(const json& j, const std::string& field) {
  if (!j.is_object()) field_error(field, "expected an object");
  if (j.contains("matrix")) {
    auto m = get_floats(j["matrix"], field + ".matrix");
    if (m.size() != 16 && m.size() != 12) field_error(field + ".matrix", "expected 12 or 16 row-major values");
    if (m.size() == 16 && (m[12] != 0 || m[13] != 0 || m[14] != 0 || m[15] != 1))
      field_error(field + ".matrix", "last row must be (0,0,0,1)");
    affine3f t;
    std::copy_n(m.begin(), 12, t.m.begin());
    return t;
  }
  affine3f t;
  if (j.contains("scale")) t = affine3f::scaling(get_rgb(j["scale"], field + ".scale")) * t;
  if (j.contains("rotate")) {
    auto r = get_floats(j["rotate"], field + ".rotate");
    if (r.size() != 4) field_error(field + ".rotate", "expected [axis_x, axis_y, axis_z, degrees]");
    t = affine3f::rotation({r[0], r[1], r[2]}, r[3]) * t;
  }
  if (j.contains("translate")) t = affine3f::translation(get_vec3(j["translate"], field + ".translate")) * t;
  return t;
}

Material parse_material(const json& j, const std::string& field, const std::filesystem::path& base_dir) {
  if (!j.is_object()) field_error(field, "expected an object");
  if (j.value("refraction", false) || j.contains("ior"))
    throw ValidationError(field + ": refraction is not supported (thin straight-transmission surfaces only)");
  Material mat;
  if (j.contains("albedo")) mat.albedo = get_rgb(j["albedo"], field + ".albedo");
  if (j.contains("albedo_texture")) {
    if (!j.contains("albedo")) mat.albedo = {1, 1, 1};
    auto& tex = j["albedo_texture"];
    if (!tex.is_string()) field_error(field + ".albedo_texture", "expected a file path");
    mat.albedo_texture_path = tex.get<std::string>();
    mat.albedo_texture      = std::make_shared<Texture>(load_texture(base_dir / mat.albedo_texture_path));
  }
  if (j.contains("roughness")) mat.roughness = get_float(j["roughness"], field + ".roughness");
  if (j.contains("emission")) mat.emission = get_rgb(j["emission"], field + ".emission");
  if (j.contains("alpha")) mat.alpha = get_float(j["alpha"], field + ".alpha");
  if (j.contains("tint")) mat.tint = get_rgb(j["tint"], field + ".tint");
  return mat;
}

VariableKind parse_kind(const json& j, const std::string& field) {
  static const std::map<std::string, VariableKind> kinds = {{"roughness", VariableKind::roughness},
      {"translation", VariableKind::translation}, {"light_scale", VariableKind::light_scale},
      {"color", VariableKind::color}};
  if (!j.is_string()) field_error(field, "expected a string");
  auto it = kinds.find(j.get<std::string>());
  if (it == kinds.end()) field_error(field, "unknown variable kind '" + j.get<std::string>() + "'");
  return it->second;
}

bbox3f parse_box(const json& j, const std::string& field) {
  bbox3f box;
  box.min = get_vec3(require(j, "min", field), field + ".min");
  box.max = get_vec3(require(j, "max", field), field + ".max");
  return box;
}

}  // namespace

Scene parse_scene(const std::string& json_text, const std::filesystem::path& base_dir) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    auto pos  = std::min<std::size_t>(e.byte, json_text.size());
    auto line = 1 + std::count(json_text.begin(), json_text.begin() + static_cast<std::ptrdiff_t>(pos), '\n');
    throw ParseError("scene JSON syntax error at line " + std::to_string(line) + ": " + e.what());
  }
  if (!doc.is_object()) throw ParseError("scene document must be a JSON object");

  Scene scene;
  try {
    auto& objects = require(doc, "objects", "scene");
    if (!objects.is_array()) field_error("objects", "expected an array");
    for (std::size_t i = 0; i < objects.size(); i++) {
      auto field = "objects[" + std::to_string(i) + "]";
      auto& jo   = objects[i];
      Object object;
      object.name        = jo.value("name", "object" + std::to_string(i));
      object.mesh        = parse_mesh(require(jo, "mesh", field), field + ".mesh", base_dir);
      object.material    = jo.contains("material") ? parse_material(jo["material"], field + ".material", base_dir) : Material{};
      object.transparent = jo.value("transparent", false);
      if (jo.contains("transform")) object.transform = parse_transform(jo["transform"], field + ".transform");
      scene.objects.push_back(std::move(object));
    }

    auto& lights = require(doc, "lights", "scene");
    if (!lights.is_array()) field_error("lights", "expected an array");
    for (std::size_t i = 0; i < lights.size(); i++) {
      auto field = "lights[" + std::to_string(i) + "]";
      auto& jl   = lights[i];
      Light light;
      light.name = jl.value("name", "light" + std::to_string(i));
      auto type  = require(jl, "type", field).get<std::string>();
      if (type == "point") {
        light.kind     = LightKind::point;
        light.position = get_vec3(require(jl, "position", field), field + ".position");
        light.emission = get_rgb(require(jl, "intensity", field), field + ".intensity");
      } else if (type == "area") {
        light.kind = LightKind::area_quad;
        auto& c    = require(jl, "corners", field);
        if (!c.is_array() || c.size() != 4) field_error(field + ".corners", "expected 4 corners");
        for (int k = 0; k < 4; k++) light.corners[k] = get_vec3(c[k], field + ".corners[" + std::to_string(k) + "]");
        light.emission = get_rgb(require(jl, "radiance", field), field + ".radiance");
      } else {
        field_error(field + ".type", "unknown light type '" + type + "'");
      }
      scene.lights.push_back(light);
    }

    auto& cam = require(doc, "camera_ranges", "scene");
    scene.camera_ranges.position = parse_box(require(cam, "position", "camera_ranges"), "camera_ranges.position");
    scene.camera_ranges.look_at  = parse_box(require(cam, "look_at", "camera_ranges"), "camera_ranges.look_at");
    if (cam.contains("fov_deg")) {
      auto& fov = cam["fov_deg"];
      if (fov.is_array()) {
        auto v = get_floats(fov, "camera_ranges.fov_deg");
        if (v.size() != 2) field_error("camera_ranges.fov_deg", "expected a number or [min, max]");
        scene.camera_ranges.fov_min_deg = v[0];
        scene.camera_ranges.fov_max_deg = v[1];
      } else {
        scene.camera_ranges.fov_min_deg = scene.camera_ranges.fov_max_deg = get_float(fov, "camera_ranges.fov_deg");
      }
    }
    if (cam.contains("up")) scene.camera_ranges.up = get_vec3(cam["up"], "camera_ranges.up");

    if (doc.contains("variables")) {
      auto& vars = doc["variables"];
      if (!vars.is_array()) field_error("variables", "expected an array");
      for (std::size_t i = 0; i < vars.size(); i++) {
        auto field = "variables[" + std::to_string(i) + "]";
        auto& jv   = vars[i];
        VariableSpec var;
        var.name   = jv.value("name", "var" + std::to_string(i));
        var.kind   = parse_kind(require(jv, "kind", field), field + ".kind");
        var.target = require(jv, "target", field).get<std::string>();
        if (var.is_vector()) {
          var.min = get_vec3(require(jv, "min", field), field + ".min");
          var.max = get_vec3(require(jv, "max", field), field + ".max");
        } else {
          var.min = {get_float(require(jv, "min", field), field + ".min"), 0, 0};
          var.max = {get_float(require(jv, "max", field), field + ".max"), 0, 0};
        }
        scene.variables.push_back(var);
      }
    }
    if (doc.contains("background")) scene.background = get_rgb(doc["background"], "background");
  } catch (const json::exception& e) {
    throw ParseError(std::string("scene schema error: ") + e.what());
  }
  validate_scene(scene);
  return scene;
}

Scene load_scene(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read scene file: " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_scene(buffer.str(), path.parent_path());
}

Mesh load_obj(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read OBJ file: " + path.string());
  std::vector<vec3f> positions, normals;
  std::vector<vec2f> uvs;
  Mesh mesh;
  std::map<std::tuple<int, int, int>, int> vertex_ids;
  std::string line;
  int line_no = 0;
  auto fix = [](int idx, std::size_t count) { return idx < 0 ? static_cast<int>(count) + idx : idx - 1; };
  while (std::getline(in, line)) {
    line_no++;
    std::istringstream ls(line);
    std::string tag;
    if (!(ls >> tag) || tag[0] == '#') continue;
    if (tag == "v") {
      vec3f p;
      ls >> p.x >> p.y >> p.z;
      positions.push_back(p);
    } else if (tag == "vn") {
      vec3f n;
      ls >> n.x >> n.y >> n.z;
      normals.push_back(normalize(n));
    } else if (tag == "vt") {
      vec2f t;
      ls >> t.x >> t.y;
      uvs.push_back({std::clamp(t.x, 0.0f, 1.0f), std::clamp(t.y, 0.0f, 1.0f)});
    } else if (tag == "f") {
      std::vector<int> face;
      std::string token;
      while (ls >> token) {
        int vi = 0, ti = 0, ni = 0;
        char c1 = 0, c2 = 0;
        std::istringstream ts(token);
        ts >> vi;
        if (ts.peek() == '/') {
          ts >> c1;
          if (ts.peek() != '/') ts >> ti;
          if (ts.peek() == '/') ts >> c2 >> ni;
        }
        if (vi == 0) throw ParseError(path.string() + ":" + std::to_string(line_no) + ": malformed face");
        auto key = std::tuple{fix(vi, positions.size()), ti ? fix(ti, uvs.size()) : -1, ni ? fix(ni, normals.size()) : -1};
        auto [it, inserted] = vertex_ids.try_emplace(key, static_cast<int>(mesh.positions.size()));
        if (inserted) {
          auto [p, t, n] = key;
          if (p < 0 || std::size_t(p) >= positions.size())
            throw ParseError(path.string() + ":" + std::to_string(line_no) + ": vertex index out of range");
          mesh.positions.push_back(positions[p]);
          mesh.uvs.push_back(t >= 0 && std::size_t(t) < uvs.size() ? uvs[t] : vec2f{0, 0});
          mesh.normals.push_back(n >= 0 && std::size_t(n) < normals.size() ? normals[n] : vec3f{0, 0, 0});
        }
        face.push_back(it->second);
      }
      for (std::size_t k = 1; k + 1 < face.size(); k++) mesh.triangles.push_back({face[0], face[k], face[k + 1]});
    }
  }
  // vertices without normals get the normal of the first triangle using them
  for (auto& tri : mesh.triangles) {
    auto n = normalize(cross(mesh.positions[tri[1]] - mesh.positions[tri[0]], mesh.positions[tri[2]] - mesh.positions[tri[0]]));
    for (int v : tri)
      if (length(mesh.normals[v]) == 0) mesh.normals[v] = n;
  }
  return mesh;
}

}  // namespace glassbuf
