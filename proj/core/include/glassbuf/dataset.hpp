#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "glassbuf/image.hpp"
#include "glassbuf/raster.hpp"

namespace glassbuf {

struct TrainConfig {
  std::filesystem::path scene;
  int resolution = 64;
  struct Counts {
    int train = 300, val = 32, test = 32;
  } counts;
  int spp            = 256;
  int max_depth      = 8;
  float lr           = 1e-4f;
  float weight_decay = 1e-4f;
  float lambda       = 0.5f;  // weight of L1 in the combined loss
  int pe_frequencies = 6;
  int batch_size     = 4;
  int max_steps      = 2000;
  std::uint64_t seed = 1;
  struct Toggles {
    bool positional_encoding  = true;
    bool dssim                = true;  // "loss": "l1_dssim" (true) or "l1"
    bool transparency_buffers = true;
  } toggles;
  struct Supersample {
    bool enabled = false;  // also write 2x G-buffers and ground truth
    int steps    = 0;
    float lr     = 1e-3f;
  } supersample;

  // Throws ValidationError on broken invariants (counts >= 1, lr > 0, lambda in [0,1], ...).
  void validate() const;
  std::string to_json() const;
  // Relative scene paths resolve against base_dir.
  static TrainConfig from_json(const std::string& text, const std::filesystem::path& base_dir);
  static TrainConfig load(const std::filesystem::path& path);
  // Hash of the fields that decide the dataset contents.
  std::string dataset_hash() const;
  std::string hash() const;
};

enum class Split { train, val, test };
const char* split_name(Split split);
Split parse_split(const std::string& name);

struct SampleRecord {
  Split split = Split::train;
  int index   = 0;
  std::uint64_t seed = 0;
  std::string dir;  // relative to the dataset root
};

// Seed of sample `index` in `split`; distinct across splits.
std::uint64_t sample_seed(std::uint64_t base, Split split, int index);

// Writes every sample and dataset.json. Output depends only on the config.
// Layout per sample: buffers/ (separate opaque and transparency buffers),
// naive/ (single combined G-buffer), gt.pfm, gt.png, coverage.png,
// instance.json, and with supersampling hires/ and gt_hires.pfm.
void gen_dataset(const TrainConfig& config, const std::filesystem::path& out);

std::vector<SampleRecord> read_manifest(const std::filesystem::path& dir, TrainConfig* config = nullptr);

struct Sample {
  SampleRecord record;
  BufferStack stack;  // separate buffers, or the naive combined G-buffer with t = 0
  RadianceImage truth;
  CoverageMask coverage;
  std::optional<GBuffer> hires;
  std::optional<RadianceImage> truth_hires;
};

struct LoadOptions {
  bool naive  = false;
  bool hires  = false;
  bool stack  = true;
};

std::vector<Sample> load_split(const std::filesystem::path& dir, Split split, const LoadOptions& options = {});

// 2x2 box filter.
RadianceImage downsample2(const RadianceImage& image);

}  // namespace glassbuf
