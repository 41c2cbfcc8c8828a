#include <doctest.h>

#include "glassbuf/pathtrace.hpp"
#include "glassbuf/raster.hpp"
#include "oracles.hpp"

using namespace glassbuf;

namespace {

std::string floor_with_light(const std::string& light_pos, const std::string& intensity) {
  return R"({
    "objects": [{"name": "floor", "mesh": {"shape": "quad", "corners": [[-50,0,50],[50,0,50],[50,0,-50],[-50,0,-50]]},
                 "material": {"albedo": [0.8, 0.8, 0.8], "roughness": 1}}],
    "lights": [{"type": "point", "position": )" +
         light_pos + R"(, "intensity": )" + intensity + R"(}],
    "camera_ranges": {"position": {"min": [0, 3, 3], "max": [0, 3, 3]},
                      "look_at": {"min": [0, 0, 0], "max": [0, 0, 0]}, "fov_deg": 1}})";
}

World world_of(const std::string& json) {
  return build_world(sample_instance(std::make_shared<const Scene>(parse_scene(json, ".")), 0));
}

std::shared_ptr<const Scene> desk() {
  static auto scene = std::make_shared<const Scene>(load_scene(oracle::scenes_dir() / "desk.json"));
  return scene;
}

}  // namespace

TEST_CASE("buffer layout law: 17 (t + 1) channels") {
  for (int t = 0; t <= 8; t++) {
    CAPTURE(t);
    auto stack = rasterize(sample_instance(oracle::random_quad_scene(t, 100 + t), 0), 12, 8);
    CHECK(stack.t() == t);
    CHECK(stack.total_channels() == 17 * (t + 1));
    CHECK(stack.bytes() == std::size_t(17) * (t + 1) * 12 * 8 * 4);
    CHECK(int(stack.tbuffer_objects.size()) == t);
  }
  CHECK(GBuffer(256, 256).bytes() == 4456448);
  CHECK(channel_names(false).size() == 17);
  CHECK(channel_names(true).size() == 17);
}

TEST_CASE("background pixels carry depth 1 and zeros elsewhere") {
  auto world = world_of(R"({
    "objects": [{"name": "card", "mesh": {"shape": "quad", "corners": [[-0.2,-0.2,0],[0.2,-0.2,0],[0.2,0.2,0],[-0.2,0.2,0]]}}],
    "lights": [{"type": "point", "position": [0, 0, 2], "intensity": [1, 1, 1]}],
    "camera_ranges": {"position": {"min": [0,0,3], "max": [0,0,3]}, "look_at": {"min": [0,0,0], "max": [0,0,0]}}})");
  auto stack = rasterize(world, 16, 16);
  auto& g    = stack.gbuffer;
  int background = 0, covered = 0;
  for (int y = 0; y < 16; y++)
    for (int x = 0; x < 16; x++) {
      if (g.at(gch::depth, x, y) == 1.0f) {
        background++;
        for (int c = 0; c < 17; c++)
          if (c != gch::depth) REQUIRE(g.at(c, x, y) == 0.0f);
      } else {
        covered++;
        CHECK(length(g.vec(gch::normal, x, y)) == doctest::Approx(1.0f).epsilon(1e-5));
        CHECK(g.at(gch::depth, x, y) > 0.0f);
        CHECK(g.at(gch::depth, x, y) < 1.0f);
      }
    }
  CHECK(background > 0);
  CHECK(covered > 0);
}

TEST_CASE("geometric consistency with the path tracer's first opaque hit") {
  for (std::uint64_t seed : {0, 1, 2}) {
    auto world  = build_world(sample_instance(desk(), seed));
    auto stack  = rasterize(world, 48, 48);
    auto camera = make_camera(world.camera, 48, 48);
    int checked = 0, mismatched = 0;
    for (int y = 0; y < 48; y++)
      for (int x = 0; x < 48; x++) {
        if (stack.gbuffer.at(gch::depth, x, y) >= 1.0f) continue;
        auto sp = first_opaque_hit(world, camera, x, y);
        REQUIRE(sp.has_value());
        checked++;
        float dp = length(sp->position - stack.gbuffer.vec(gch::position, x, y));
        float dn = max_component(max(sp->normal - stack.gbuffer.vec(gch::normal, x, y),
            stack.gbuffer.vec(gch::normal, x, y) - sp->normal));
        mismatched += dp > 1e-3f || dn > 1e-3f;
      }
    CAPTURE(seed);
    CHECK(checked > 1000);
    CHECK(mismatched == 0);
  }
}

TEST_CASE("per-object independence of transparency buffers") {
  auto scene = oracle::random_quad_scene(4, 17);
  auto full  = rasterize(sample_instance(scene, 0), 24, 24);
  for (int drop = 0; drop < 4; drop++) {
    auto reduced = std::make_shared<Scene>(*scene);
    auto name    = "glass" + std::to_string(drop);
    std::erase_if(reduced->objects, [&](const Object& o) { return o.name == name; });
    auto part = rasterize(sample_instance(reduced, 0), 24, 24);
    REQUIRE(part.t() == 3);
    // L_d sees the glass through its shadow rays; the geometry channels do not
    for (int c = 0; c < gch::ld; c++)
      CHECK(std::equal(part.gbuffer.channel(c), part.gbuffer.channel(c) + part.gbuffer.plane(), full.gbuffer.channel(c)));
    int j = 0;
    for (int i = 0; i < 4; i++) {
      if (i == drop) continue;
      CHECK(part.tbuffers[j] == full.tbuffers[i]);
      CHECK(part.tbuffer_objects[j] == full.tbuffer_objects[i]);
      j++;
    }
  }
}

TEST_CASE("occluded transparent quad keeps its full silhouette") {
  auto wall_template = []() -> std::string {
    return R"({
      "objects": [{"name": "wall", "mesh": {"shape": "quad", "corners": [[-1,-1,Z],[1,-1,Z],[1,1,Z],[-1,1,Z]]}},
                  {"name": "glass", "transparent": true, "material": {"alpha": 0.5},
                   "mesh": {"shape": "quad", "corners": [[-0.5,-0.5,-1],[0.5,-0.5,-1],[0.5,0.5,-1],[-0.5,0.5,-1]]}}],
      "lights": [{"type": "point", "position": [0, 0, 2], "intensity": [1, 1, 1]}],
      "camera_ranges": {"position": {"min": [0,0,3], "max": [0,0,3]}, "look_at": {"min": [0,0,0], "max": [0,0,0]}}})";
  };
  auto with_z = [&](const std::string& z) {
    auto s = wall_template();
    for (auto pos = s.find('Z'); pos != std::string::npos; pos = s.find('Z')) s.replace(pos, 1, z);
    return s;
  };
  auto hidden  = world_of(with_z("0"));   // wall in front of the glass
  auto visible = world_of(with_z("-2"));  // wall behind the glass
  auto a = rasterize(hidden, 32, 32), b = rasterize(visible, 32, 32);
  REQUIRE(a.t() == 1);
  int covered = 0;
  bool negative = false;
  for (int y = 0; y < 32; y++)
    for (int x = 0; x < 32; x++) {
      float ca = a.tbuffers[0].at(tch::coverage, x, y);
      REQUIRE(ca == b.tbuffers[0].at(tch::coverage, x, y));
      covered += ca == 1.0f;
      if (ca == 1.0f) negative |= a.tbuffers[0].at(tch::relative_depth, x, y) < 0;
    }
  CHECK(covered > 0);
  CHECK(negative);  // opaque surface nearer than the glass
  CHECK(trace_coverage(hidden, 32, 32).count() == 0);
  CHECK(trace_coverage(visible, 32, 32).count() == std::size_t(covered));
}

TEST_CASE("shared edges are rasterized exactly once") {
  auto world  = world_of(R"({
    "objects": [{"name": "wall", "mesh": {"shape": "quad", "corners": [[-9,-9,-3],[9,-9,-3],[9,9,-3],[-9,9,-3]]}},
                {"name": "fan", "mesh": {"positions": [0,0,0, 1,0,0, 0.7,0.7,0, 0,1,0, -0.7,0.7,0, -1,0,0, -0.7,-0.7,0, 0,-1,0, 0.7,-0.7,0],
                                         "normals": [0,0,1, 0,0,1, 0,0,1, 0,0,1, 0,0,1, 0,0,1, 0,0,1, 0,0,1, 0,0,1],
                                         "indices": [0,1,2, 0,2,3, 0,3,4, 0,4,5, 0,5,6, 0,6,7, 0,7,8, 0,8,1]}}],
    "lights": [{"type": "point", "position": [0, 0, 2], "intensity": [1, 1, 1]}],
    "camera_ranges": {"position": {"min": [0,0,3], "max": [0,0,3]}, "look_at": {"min": [0,0,0], "max": [0,0,0]}}})");
  auto camera = make_camera(world.camera, 33, 33);
  std::vector<int> count(33 * 33, 0);
  for_each_fragment(world, camera, [&](int object) { return world.objects[object].name == "fan"; },
      [&](const Fragment& f) { count[f.y * 33 + f.x]++; });
  int inside = 0;
  for (int c : count) {
    REQUIRE(c <= 1);
    inside += c;
  }
  CHECK(inside > 100);
  CHECK(count[16 * 33 + 16] == 1);  // the shared center vertex
}

TEST_CASE("direct lighting of a lambertian pixel") {
  auto stack = rasterize(world_of(floor_with_light("[0, 2, 0]", "[1, 1, 1]")), 3, 3);
  auto ld    = stack.gbuffer.vec(gch::ld, 1, 1);
  CHECK(ld.x == doctest::Approx(0.8 / pi / 4).epsilon(1e-3));
  CHECK(ld.x == doctest::Approx(0.06366).epsilon(1e-3));

  auto away = rasterize(world_of(floor_with_light("[0, -2, 0]", "[1, 1, 1]")), 3, 3);
  for (int y = 0; y < 3; y++)
    for (int x = 0; x < 3; x++) CHECK(away.gbuffer.vec(gch::ld, x, y) == rgb{0, 0, 0});
}

TEST_CASE("direct lighting is exactly linear in emission") {
  auto inst   = sample_instance(desk(), 3);
  auto scaled = std::make_shared<Scene>(*desk());
  for (auto& l : scaled->lights) l.emission = l.emission * 2.0f;
  auto inst2 = inst;
  inst2.scene = scaled;
  auto a = rasterize(inst, 24, 24);
  auto b = rasterize(inst2, 24, 24);
  for (int y = 0; y < 24; y++)
    for (int x = 0; x < 24; x++) {
      auto la = a.gbuffer.vec(gch::ld, x, y), lb = b.gbuffer.vec(gch::ld, x, y);
      REQUIRE(lb == la * 2.0f);
    }
}

TEST_CASE("combined g-buffer sees transparent surfaces in front") {
  auto world    = build_world(sample_instance(desk(), 0));
  auto separate = rasterize(world, 32, 32);
  auto combined = rasterize_combined(world, 32, 32);
  auto mask     = trace_coverage(world, 32, 32);
  int differing = 0;
  for (int y = 0; y < 32; y++)
    for (int x = 0; x < 32; x++) {
      bool same = combined.at(gch::depth, x, y) == separate.gbuffer.at(gch::depth, x, y);
      if (!mask.at(x, y)) CHECK(same);
      differing += !same;
    }
  CHECK(differing > 0);
}

TEST_CASE("rasterization is deterministic and the dump round-trips bit-exactly") {
  auto inst = sample_instance(desk(), 9);
  auto a    = rasterize(inst, 20, 20);
  auto b    = rasterize(inst, 20, 20);
  CHECK(a.gbuffer == b.gbuffer);
  REQUIRE(a.t() == b.t());
  for (int i = 0; i < a.t(); i++) CHECK(a.tbuffers[i] == b.tbuffers[i]);

  auto dir = oracle::scratch_dir("buffers");
  save_buffers(dir, a);
  auto c = load_buffers(dir);
  CHECK(c.gbuffer == a.gbuffer);
  REQUIRE(c.t() == a.t());
  for (int i = 0; i < a.t(); i++) CHECK(c.tbuffers[i] == a.tbuffers[i]);
  CHECK(c.tbuffer_objects == a.tbuffer_objects);
  CHECK(c.depth_scale == a.depth_scale);
}
