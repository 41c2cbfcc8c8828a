#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "glassbuf/dataset.hpp"
#include "glassbuf/errors.hpp"
#include "glassbuf/parallel.hpp"
#include "glassbuf/pathtrace.hpp"
#include "glassbuf/rng.hpp"

namespace glassbuf {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string hex_hash(const std::string& text) {
  std::uint64_t h = 0x6a09e667f3bcc909ull;
  for (unsigned char c : text) h = hash_combine(h, c);
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

template <typename T>
T field(const json& j, const char* key, T fallback, const std::string& where) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ParseError(where + key + ": wrong type");
  }
}

}  // namespace

void TrainConfig::validate() const {
  if (counts.train < 1 || counts.val < 1 || counts.test < 1) throw ValidationError("counts: every split needs >= 1 sample");
  if (resolution < 16 || resolution % 4) throw ValidationError("resolution must be a multiple of 4 and >= 16");
  if (spp < 1) throw ValidationError("spp must be >= 1");
  if (max_depth < 1) throw ValidationError("max_depth must be >= 1");
  if (!(lr > 0)) throw ValidationError("lr must be > 0");
  if (!(weight_decay >= 0)) throw ValidationError("weight_decay must be >= 0");
  if (!(lambda >= 0 && lambda <= 1)) throw ValidationError("lambda must lie in [0, 1]");
  if (toggles.positional_encoding && pe_frequencies < 1) throw ValidationError("pe_frequencies must be >= 1");
  if (batch_size < 1) throw ValidationError("batch_size must be >= 1");
  if (max_steps < 0) throw ValidationError("max_steps must be >= 0");
  if (supersample.steps < 0 || !(supersample.lr > 0)) throw ValidationError("supersample: steps >= 0 and lr > 0 required");
}

std::string TrainConfig::to_json() const {
  json j = {{"scene", scene.string()}, {"resolution", resolution},
      {"counts", {{"train", counts.train}, {"val", counts.val}, {"test", counts.test}}}, {"spp", spp},
      {"max_depth", max_depth}, {"lr", lr}, {"weight_decay", weight_decay}, {"lambda", lambda},
      {"pe_frequencies", pe_frequencies}, {"batch_size", batch_size}, {"max_steps", max_steps}, {"seed", seed},
      {"toggles", {{"positional_encoding", toggles.positional_encoding}, {"loss", toggles.dssim ? "l1_dssim" : "l1"},
                      {"transparency_buffers", toggles.transparency_buffers}}},
      {"supersample", {{"enabled", supersample.enabled}, {"steps", supersample.steps}, {"lr", supersample.lr}}}};
  return j.dump(2);
}

TrainConfig TrainConfig::from_json(const std::string& text, const fs::path& base_dir) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("config: ") + e.what());
  }
  if (!j.is_object()) throw ParseError("config: top level must be an object");
  static const std::set<std::string> known = {"scene", "resolution", "counts", "spp", "max_depth", "lr",
      "weight_decay", "lambda", "pe_frequencies", "batch_size", "max_steps", "seed", "toggles", "supersample"};
  for (auto& [key, value] : j.items())
    if (!known.count(key)) throw ValidationError("config: unknown field '" + key + "'");
  TrainConfig c;
  if (!j.contains("scene")) throw ValidationError("config: missing field 'scene'");
  fs::path scene = field<std::string>(j, "scene", "", "config.");
  c.scene        = scene.is_absolute() ? scene : (base_dir / scene).lexically_normal();
  c.resolution   = field(j, "resolution", c.resolution, "config.");
  if (j.contains("counts")) {
    auto& k = j["counts"];
    c.counts.train = field(k, "train", c.counts.train, "config.counts.");
    c.counts.val   = field(k, "val", c.counts.val, "config.counts.");
    c.counts.test  = field(k, "test", c.counts.test, "config.counts.");
  }
  c.spp            = field(j, "spp", c.spp, "config.");
  c.max_depth      = field(j, "max_depth", c.max_depth, "config.");
  c.lr             = field(j, "lr", c.lr, "config.");
  c.weight_decay   = field(j, "weight_decay", c.weight_decay, "config.");
  c.lambda         = field(j, "lambda", c.lambda, "config.");
  c.pe_frequencies = field(j, "pe_frequencies", c.pe_frequencies, "config.");
  c.batch_size     = field(j, "batch_size", c.batch_size, "config.");
  c.max_steps      = field(j, "max_steps", c.max_steps, "config.");
  c.seed           = field(j, "seed", c.seed, "config.");
  if (j.contains("toggles")) {
    auto& t = j["toggles"];
    c.toggles.positional_encoding  = field(t, "positional_encoding", true, "config.toggles.");
    c.toggles.transparency_buffers = field(t, "transparency_buffers", true, "config.toggles.");
    auto loss = field<std::string>(t, "loss", "l1_dssim", "config.toggles.");
    if (loss != "l1" && loss != "l1_dssim") throw ValidationError("config.toggles.loss must be \"l1\" or \"l1_dssim\"");
    c.toggles.dssim = loss == "l1_dssim";
  }
  if (j.contains("supersample")) {
    auto& s = j["supersample"];
    c.supersample.enabled = field(s, "enabled", false, "config.supersample.");
    c.supersample.steps   = field(s, "steps", 0, "config.supersample.");
    c.supersample.lr      = field(s, "lr", c.supersample.lr, "config.supersample.");
  }
  c.validate();
  return c;
}

TrainConfig TrainConfig::load(const fs::path& path) {
  return from_json(read_text(path), path.has_parent_path() ? path.parent_path() : fs::path("."));
}

std::string TrainConfig::dataset_hash() const {
  json j = {{"scene", scene.string()}, {"resolution", resolution},
      {"counts", {counts.train, counts.val, counts.test}}, {"spp", spp}, {"max_depth", max_depth}, {"seed", seed},
      {"supersample", supersample.enabled}};
  return hex_hash(j.dump());
}

std::string TrainConfig::hash() const { return hex_hash(to_json()); }

const char* split_name(Split split) {
  switch (split) {
    case Split::train: return "train";
    case Split::val: return "val";
    case Split::test: return "test";
  }
  return "?";
}

Split parse_split(const std::string& name) {
  if (name == "train") return Split::train;
  if (name == "val") return Split::val;
  if (name == "test") return Split::test;
  throw ValidationError("unknown split '" + name + "' (expected train, val or test)");
}

std::uint64_t sample_seed(std::uint64_t base, Split split, int index) {
  return hash_values(base, 0x73706c6974ull, static_cast<int>(split), index);
}

RadianceImage downsample2(const RadianceImage& image) {
  RadianceImage out(image.width / 2, image.height / 2);
  for (int y = 0; y < out.height; y++)
    for (int x = 0; x < out.width; x++)
      out.at(x, y) = (image.at(2 * x, 2 * y) + image.at(2 * x + 1, 2 * y) + image.at(2 * x, 2 * y + 1) +
                         image.at(2 * x + 1, 2 * y + 1)) * 0.25f;
  return out;
}

namespace {

json instance_json(const SceneInstance& inst) {
  auto v = [](vec3f p) { return json::array({p.x, p.y, p.z}); };
  json vars = json::array();
  for (std::size_t i = 0; i < inst.variable_values.size(); i++)
    vars.push_back({{"name", inst.scene->variables[i].name}, {"value", v(inst.variable_values[i])}});
  return {{"seed", inst.seed},
      {"camera", {{"position", v(inst.camera.position)}, {"look_at", v(inst.camera.look_at)}, {"up", v(inst.camera.up)},
                     {"fov_deg", inst.camera.fov_deg}}},
      {"variables", vars}};
}

void write_sample(const TrainConfig& config, const std::shared_ptr<const Scene>& scene, const SampleRecord& rec,
    const fs::path& root) {
  auto dir = root / rec.dir;
  fs::create_directories(dir);
  auto instance = sample_instance(scene, rec.seed);
  auto world    = build_world(instance);
  int res       = config.resolution;

  save_buffers(dir / "buffers", rasterize(world, res, res));
  BufferStack naive;
  naive.gbuffer     = rasterize_combined(world, res, res);
  naive.depth_scale = world.depth_scale;
  naive.bounds      = world.bounds;
  save_buffers(dir / "naive", naive);

  TraceOptions options;
  options.max_depth = config.max_depth;
  TraceStats stats;
  auto trace_seed = hash_values(rec.seed, 0x7472616365ull);
  RadianceImage truth;
  if (config.supersample.enabled) {
    auto hires = trace_image(world, 2 * res, 2 * res, config.spp, trace_seed, options, &stats);
    save_radiance_pfm(dir / "gt_hires.pfm", hires);
    BufferStack hb;
    hb.gbuffer     = rasterize(world, 2 * res, 2 * res).gbuffer;
    hb.depth_scale = world.depth_scale;
    hb.bounds      = world.bounds;
    save_buffers(dir / "hires", hb);
    truth = downsample2(hires);
  } else {
    truth = trace_image(world, res, res, config.spp, trace_seed, options, &stats);
  }
  save_radiance_pfm(dir / "gt.pfm", truth);
  save_preview_png(dir / "gt.png", truth);
  save_mask_png(dir / "coverage.png", trace_coverage(world, res, res));
  auto meta = instance_json(instance);
  meta["rejected_samples"] = stats.rejected_samples;
  write_text(dir / "instance.json", meta.dump(2) + "\n");
}

}  // namespace

void gen_dataset(const TrainConfig& config, const fs::path& out) {
  config.validate();
  auto scene = std::make_shared<const Scene>(load_scene(config.scene));
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec || !fs::is_directory(out)) throw std::runtime_error("cannot create dataset directory " + out.string());

  std::vector<SampleRecord> records;
  std::set<std::uint64_t> seeds;
  for (auto [split, count] : {std::pair{Split::train, config.counts.train}, std::pair{Split::val, config.counts.val},
           std::pair{Split::test, config.counts.test}}) {
    for (int i = 0; i < count; i++) {
      SampleRecord r{split, i, sample_seed(config.seed, split, i), ""};
      if (!seeds.insert(r.seed).second) throw std::runtime_error("sample seed collision");
      char dir[64];
      std::snprintf(dir, sizeof(dir), "%s/%04d", split_name(split), i);
      r.dir = dir;
      records.push_back(r);
    }
  }

  parallel_for(records.size(), [&](std::size_t i) {
    try {
      write_sample(config, scene, records[i], out);
    } catch (const std::exception& e) {
      throw std::runtime_error("sample " + records[i].dir + ": " + e.what());
    }
  });

  json manifest;
  manifest["format"]       = "glassbuf-dataset";
  manifest["version"]      = 1;
  manifest["config"]       = json::parse(config.to_json());
  manifest["dataset_hash"] = config.dataset_hash();
  manifest["counts"]       = {{"train", config.counts.train}, {"val", config.counts.val}, {"test", config.counts.test}};
  manifest["samples"]      = json::array();
  for (auto& r : records)
    manifest["samples"].push_back({{"split", split_name(r.split)}, {"index", r.index}, {"seed", r.seed}, {"dir", r.dir}});
  write_text(out / "dataset.json", manifest.dump(2) + "\n");
}

std::vector<SampleRecord> read_manifest(const fs::path& dir, TrainConfig* config) {
  json manifest;
  try {
    manifest = json::parse(read_text(dir / "dataset.json"));
  } catch (const json::parse_error& e) {
    throw ParseError((dir / "dataset.json").string() + ": " + e.what());
  }
  if (manifest.value("format", "") != "glassbuf-dataset") throw ValidationError(dir.string() + " is not a dataset");
  if (config) *config = TrainConfig::from_json(manifest.at("config").dump(), dir);
  std::vector<SampleRecord> out;
  for (auto& s : manifest.at("samples"))
    out.push_back({parse_split(s.at("split")), s.at("index").get<int>(), s.at("seed").get<std::uint64_t>(),
        s.at("dir").get<std::string>()});
  return out;
}

std::vector<Sample> load_split(const fs::path& dir, Split split, const LoadOptions& options) {
  std::vector<Sample> out;
  for (auto& r : read_manifest(dir)) {
    if (r.split != split) continue;
    Sample s;
    s.record = r;
    auto sd  = dir / r.dir;
    if (options.stack) s.stack = load_buffers(sd / (options.naive ? "naive" : "buffers"));
    s.truth    = load_radiance_pfm(sd / "gt.pfm");
    s.coverage = load_mask_png(sd / "coverage.png");
    if (options.hires) {
      if (!fs::exists(sd / "hires")) throw ValidationError("dataset has no supersampling data: " + sd.string());
      s.hires       = load_buffers(sd / "hires").gbuffer;
      s.truth_hires = load_radiance_pfm(sd / "gt_hires.pfm");
    }
    if (options.stack && (s.stack.gbuffer.width != s.truth.width || s.stack.gbuffer.height != s.truth.height))
      throw ShapeError("sample " + r.dir + ": buffer and ground-truth sizes differ");
    out.push_back(std::move(s));
  }
  if (out.empty()) throw ValidationError(std::string("split '") + split_name(split) + "' is empty in " + dir.string());
  return out;
}

}  // namespace glassbuf
