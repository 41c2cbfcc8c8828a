#include <fstream>

#include <json.hpp>

#include "glassbuf/errors.hpp"
#include "glassbuf/raster.hpp"

namespace glassbuf {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

json save_buffer(const fs::path& dir, const std::string& prefix, const FeatureBuffer& buf,
    const std::vector<ChannelGroup>& groups) {
  json out = json::array();
  for (auto& g : groups) {
    FloatImage img{buf.width, buf.height, g.count, {}};
    img.data.resize(buf.plane() * g.count);
    for (int c = 0; c < g.count; c++) {
      const float* src = buf.channel(g.first + c);
      for (std::size_t i = 0; i < buf.plane(); i++) img.data[i * g.count + c] = src[i];
    }
    auto file = prefix + "_" + std::string(g.name) + ".pfm";
    write_pfm(dir / file, img);
    out.push_back({{"name", g.name}, {"file", file}, {"first", g.first}, {"count", g.count}});
  }
  return out;
}

void load_buffer(const fs::path& dir, const json& groups, FeatureBuffer& buf) {
  for (auto& g : groups) {
    auto img   = read_pfm(dir / g.at("file").get<std::string>());
    int first  = g.at("first").get<int>();
    int count  = g.at("count").get<int>();
    if (img.width != buf.width || img.height != buf.height || img.channels != count || first < 0 ||
        first + count > buffer_channels)
      throw ValidationError("buffer group " + g.at("name").get<std::string>() + " has inconsistent dimensions");
    for (int c = 0; c < count; c++) {
      float* dst = buf.channel(first + c);
      for (std::size_t i = 0; i < buf.plane(); i++) dst[i] = img.data[i * count + c];
    }
  }
}

json to_json(vec3f v) { return json::array({v.x, v.y, v.z}); }
vec3f vec_from(const json& j) { return {j.at(0).get<float>(), j.at(1).get<float>(), j.at(2).get<float>()}; }

}  // namespace

void save_buffers(const fs::path& dir, const BufferStack& stack) {
  fs::create_directories(dir);
  json manifest;
  manifest["format"]      = "glassbuf-buffers";
  manifest["version"]     = 1;
  manifest["width"]       = stack.gbuffer.width;
  manifest["height"]      = stack.gbuffer.height;
  manifest["depth_scale"] = stack.depth_scale;
  manifest["bounds"]      = {{"min", to_json(stack.bounds.min)}, {"max", to_json(stack.bounds.max)}};
  manifest["gbuffer"]     = {{"channels", channel_names(false)}, {"groups", save_buffer(dir, "gbuffer", stack.gbuffer, gbuffer_groups())}};
  json tb = json::array();
  for (int i = 0; i < stack.t(); i++) {
    char prefix[32];
    std::snprintf(prefix, sizeof(prefix), "tbuffer%02d", i);
    auto name = i < int(stack.tbuffer_objects.size()) ? stack.tbuffer_objects[i] : std::string();
    tb.push_back({{"object", name}, {"channels", channel_names(true)},
        {"groups", save_buffer(dir, prefix, stack.tbuffers[i], tbuffer_groups())}});
  }
  manifest["tbuffers"] = tb;
  std::ofstream out(dir / "buffers.json");
  if (!out) throw std::runtime_error("cannot write " + (dir / "buffers.json").string());
  out << manifest.dump(2) << "\n";
}

BufferStack load_buffers(const fs::path& dir) {
  std::ifstream in(dir / "buffers.json");
  if (!in) throw std::runtime_error("cannot read " + (dir / "buffers.json").string());
  json manifest;
  try {
    manifest = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError((dir / "buffers.json").string() + ": " + e.what());
  }
  if (manifest.value("format", "") != "glassbuf-buffers") throw ValidationError("not a buffer manifest: " + dir.string());
  int w = manifest.at("width").get<int>(), h = manifest.at("height").get<int>();
  BufferStack stack;
  stack.depth_scale = manifest.at("depth_scale").get<float>();
  stack.bounds.min  = vec_from(manifest.at("bounds").at("min"));
  stack.bounds.max  = vec_from(manifest.at("bounds").at("max"));
  stack.gbuffer     = GBuffer(w, h);
  load_buffer(dir, manifest.at("gbuffer").at("groups"), stack.gbuffer);
  for (auto& t : manifest.at("tbuffers")) {
    TransparencyBuffer buf(w, h);
    load_buffer(dir, t.at("groups"), buf);
    stack.tbuffers.push_back(std::move(buf));
    stack.tbuffer_objects.push_back(t.value("object", ""));
  }
  return stack;
}

}  // namespace glassbuf
