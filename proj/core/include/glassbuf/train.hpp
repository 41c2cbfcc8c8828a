#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "glassbuf/dataset.hpp"
#include "glassbuf/glassnet.hpp"
#include "glassbuf/metrics.hpp"

namespace glassbuf {

GlassNetConfig model_config(const TrainConfig& config);

struct TrainSummary {
  int steps = 0;
  std::vector<double> train_loss;  // per step
  double best_val_loss = 0;
  int best_step        = 0;
};

struct TrainOptions {
  std::ostream* log = nullptr;
};

// Minimizes lambda * L1 + (1 - lambda) * DSSIM (or L1 alone) with AdamW over
// F, h, B and R; validates once per epoch and keeps the checkpoint with the
// lowest validation loss. Writes <ckpt>.loss.csv next to the checkpoint. With
// supersampling enabled, S is trained afterwards on (ground truth, 2x G-buffer)
// pairs and stored in the same checkpoint. Throws NumericError naming the step
// on a non-finite loss.
TrainSummary train(const TrainConfig& config, const std::filesystem::path& data, const std::filesystem::path& ckpt,
    const TrainOptions& options = {});

struct LoadedModel {
  GlassNet net;
  TrainConfig config;
  bool supersampler_trained = false;
};
LoadedModel load_model(const std::filesystem::path& ckpt);
void save_model(const std::filesystem::path& ckpt, const GlassNet& net, const TrainConfig& config, int step,
    double val_loss, bool supersampler_trained);

// Inference on one sample's buffers; [3, H, W].
Tensor predict(const GlassNet& net, const BufferStack& stack);

// Renders every view of the split and scores it against the ground truth.
// Never writes into the dataset directory. With supersample the 2x output of
// S is scored against the 2x ground truth.
MetricsReport evaluate(const std::filesystem::path& ckpt, const std::filesystem::path& data, Split split,
    bool supersample = false);

// Single view of a scene: prediction.{pfm,png}; with spp > 0 also truth,
// difference and metrics.json. spp < 0 takes the checkpoint's value.
void render_view(const std::filesystem::path& ckpt, const std::filesystem::path& scene, std::uint64_t seed,
    const std::filesystem::path& out, int spp = -1);

// Sorted vs draw-order compositing of depth-peeled layers: sorted.png,
// unsorted.png, difference.png, triptych.png and oit.json.
void oit_demo(const std::filesystem::path& scene, const std::filesystem::path& out, int resolution = 128,
    std::uint64_t seed = 0, int max_peels = 8);

}  // namespace glassbuf
