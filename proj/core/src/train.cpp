#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <ostream>

#include <json.hpp>

#include "glassbuf/checkpoint.hpp"
#include "glassbuf/errors.hpp"
#include "glassbuf/loss.hpp"
#include "glassbuf/oit.hpp"
#include "glassbuf/parallel.hpp"
#include "glassbuf/pathtrace.hpp"
#include "glassbuf/rng.hpp"
#include "glassbuf/train.hpp"

namespace glassbuf {

namespace fs = std::filesystem;
using nlohmann::json;

GlassNetConfig model_config(const TrainConfig& config) {
  GlassNetConfig m;
  m.positional_encoding  = config.toggles.positional_encoding;
  m.pe_frequencies       = config.pe_frequencies;
  m.transparency_buffers = config.toggles.transparency_buffers;
  m.seed                 = hash_values(config.seed, 0x6d6f64656cull);
  return m;
}

void save_model(const fs::path& ckpt, const GlassNet& net, const TrainConfig& config, int step, double val_loss,
    bool supersampler_trained) {
  json meta = {{"model", json::parse(net.config().to_json())}, {"train_config", json::parse(config.to_json())},
      {"step", step}, {"val_loss", val_loss}, {"supersampler_trained", supersampler_trained}};
  save_checkpoint(ckpt, meta.dump(), net.params());
}

LoadedModel load_model(const fs::path& ckpt) {
  auto c    = load_checkpoint(ckpt);
  auto meta = json::parse(c.meta_json);
  if (!meta.contains("model") || !meta.contains("train_config"))
    throw ValidationError(ckpt.string() + ": checkpoint has no model description");
  LoadedModel m{GlassNet(GlassNetConfig::from_json(meta["model"].dump())),
      TrainConfig::from_json(meta["train_config"].dump(), ckpt.parent_path()), meta.value("supersampler_trained", false)};
  assign_parameters(m.net.params(), c);
  return m;
}

Tensor predict(const GlassNet& net, const BufferStack& stack) { return net.forward(stack); }

namespace {

struct Prepared {
  const Sample* sample;
  Tensor target;
};

double validation_loss(const GlassNet& net, const std::vector<Prepared>& val, const TrainConfig& config) {
  std::vector<double> losses(val.size());
  parallel_for(val.size(), [&](std::size_t i) {
    auto pred = net.forward(val[i].sample->stack);
    losses[i] = combined_loss(pred, val[i].target, config.lambda, config.toggles.dssim).item();
  });
  return std::accumulate(losses.begin(), losses.end(), 0.0) / std::max<std::size_t>(val.size(), 1);
}

std::vector<Prepared> prepare(const std::vector<Sample>& samples) {
  std::vector<Prepared> out;
  for (auto& s : samples) out.push_back({&s, image_to_tensor(s.truth)});
  return out;
}

// Shuffled sample order per epoch, reproducible from the seed.
std::vector<int> epoch_order(std::uint64_t seed, int epoch, int n) {
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  Pcg32 rng(hash_values(seed, 0x65706f6368ull, epoch));
  for (int i = n - 1; i > 0; i--) std::swap(order[i], order[rng.next_below(i + 1)]);
  return order;
}

void scale_gradients(Gradients& g, float s) {
  for (auto& p : g)
    for (auto& v : p) v *= s;
}

void train_supersampler(GlassNet& net, const TrainConfig& config, const fs::path& data, std::ostream* log) {
  auto samples = load_split(data, Split::train, LoadOptions{false, true, false});
  std::vector<Tensor> inputs, hires, targets;
  for (auto& s : samples) {
    inputs.push_back(image_to_tensor(s.truth));
    hires.push_back(buffer_tensor(*s.hires));
    targets.push_back(image_to_tensor(*s.truth_hires));
  }
  auto params = net.params().subset({"S."});
  AdamConfig ac;
  ac.lr    = config.supersample.lr;
  auto adam = make_adam(params, ac);
  int n     = static_cast<int>(samples.size());
  int batch = std::min(config.batch_size, n);
  std::vector<int> order;
  int cursor = n, epoch = 0;
  for (int step = 1; step <= config.supersample.steps; step++) {
    std::vector<int> picks;
    while (int(picks.size()) < batch) {
      if (cursor >= n) {
        order  = epoch_order(config.seed ^ 0x5353ull, epoch++, n);
        cursor = 0;
      }
      picks.push_back(order[cursor++]);
    }
    std::vector<Gradients> shards(picks.size());
    std::vector<double> losses(picks.size());
    parallel_for(picks.size(), [&](std::size_t k) {
      int i = picks[k];
      Tape tape;
      TapeScope scope(tape);
      auto pred = net.supersample(inputs[i], hires[i]);
      auto loss = l1_loss(pred, targets[i]);
      tape.backward(loss);
      shards[k] = collect_gradients(tape, params);
      losses[k] = loss.item();
    });
    double loss = std::accumulate(losses.begin(), losses.end(), 0.0) / picks.size();
    if (!std::isfinite(loss)) throw NumericError("non-finite supersampler loss at step " + std::to_string(step));
    auto grads = sum_gradients(shards);
    scale_gradients(grads, 1.0f / picks.size());
    adam_step(params, grads, adam);
    if (log && (step % 50 == 0 || step == 1)) *log << "supersample step " << step << " loss " << loss << "\n";
  }
}

}  // namespace

TrainSummary train(const TrainConfig& config, const fs::path& data, const fs::path& ckpt, const TrainOptions& options) {
  config.validate();
  LoadOptions lo;
  lo.naive        = !config.toggles.transparency_buffers;
  auto train_set  = load_split(data, Split::train, lo);
  auto val_set    = load_split(data, Split::val, lo);
  auto train_prep = prepare(train_set);
  auto val_prep   = prepare(val_set);

  GlassNet net(model_config(config));
  auto params = net.params().subset({"F.", "h.", "B.", "R."});
  AdamConfig ac;
  ac.lr           = config.lr;
  ac.weight_decay = config.weight_decay;
  auto adam       = make_adam(params, ac);

  fs::path curve_path = ckpt;
  curve_path += ".loss.csv";
  if (ckpt.has_parent_path()) fs::create_directories(ckpt.parent_path());
  std::ofstream curve(curve_path);
  if (!curve) throw std::runtime_error("cannot write " + curve_path.string());
  curve << "step,epoch,train_loss,val_loss\n";

  TrainSummary summary;
  summary.best_val_loss = std::numeric_limits<double>::infinity();
  int n     = static_cast<int>(train_prep.size());
  int batch = std::min(config.batch_size, n);
  int steps_per_epoch = (n + batch - 1) / batch;
  std::vector<int> order;
  int cursor = n, epoch = -1;

  auto validate = [&](int step) {
    double val = validation_loss(net, val_prep, config);
    curve << step << "," << epoch << ",," << val << "\n";
    if (options.log) *options.log << "step " << step << " epoch " << epoch << " val_loss " << val << "\n";
    if (val < summary.best_val_loss) {
      summary.best_val_loss = val;
      summary.best_step     = step;
      save_model(ckpt, net, config, step, val, false);
    }
  };

  if (config.max_steps == 0) validate(0);
  for (int step = 1; step <= config.max_steps; step++) {
    std::vector<int> picks;
    while (int(picks.size()) < batch) {
      if (cursor >= n) {
        order  = epoch_order(config.seed, ++epoch, n);
        cursor = 0;
      }
      picks.push_back(order[cursor++]);
    }
    std::vector<Gradients> shards(picks.size());
    std::vector<double> losses(picks.size());
    parallel_for(picks.size(), [&](std::size_t k) {
      auto& s = train_prep[picks[k]];
      Tape tape;
      TapeScope scope(tape);
      auto pred = net.forward(s.sample->stack);
      auto loss = combined_loss(pred, s.target, config.lambda, config.toggles.dssim);
      tape.backward(loss);
      shards[k] = collect_gradients(tape, params);
      losses[k] = loss.item();
    });
    double loss = std::accumulate(losses.begin(), losses.end(), 0.0) / picks.size();
    if (!std::isfinite(loss)) throw NumericError("non-finite training loss at step " + std::to_string(step));
    auto grads = sum_gradients(shards);
    scale_gradients(grads, 1.0f / picks.size());
    adam_step(params, grads, adam);
    summary.train_loss.push_back(loss);
    summary.steps = step;
    curve << step << "," << epoch << "," << loss << ",\n";
    if (options.log && (step % 25 == 0 || step == 1)) *options.log << "step " << step << " loss " << loss << "\n";
    if (step % steps_per_epoch == 0 || step == config.max_steps) validate(step);
  }

  if (config.supersample.enabled && config.supersample.steps > 0) {
    auto best = load_model(ckpt);
    train_supersampler(best.net, config, data, options.log);
    save_model(ckpt, best.net, config, summary.best_step, summary.best_val_loss, true);
  }
  return summary;
}

namespace {

CoverageMask upsample_mask(const CoverageMask& m) {
  CoverageMask out(2 * m.width, 2 * m.height);
  for (int y = 0; y < out.height; y++)
    for (int x = 0; x < out.width; x++) out.mask[std::size_t(y) * out.width + x] = m.at(x / 2, y / 2);
  return out;
}

}  // namespace

MetricsReport evaluate(const fs::path& ckpt, const fs::path& data, Split split, bool supersample) {
  auto model = load_model(ckpt);
  if (supersample && !model.supersampler_trained) throw ValidationError("checkpoint has no trained supersampler");
  LoadOptions lo;
  lo.naive     = !model.net.config().transparency_buffers;
  lo.hires     = supersample;
  auto samples = load_split(data, split, lo);
  MetricsReport report;
  report.split       = split_name(split);
  report.config_hash = model.config.hash();
  report.images.resize(samples.size());
  parallel_for(samples.size(), [&](std::size_t i) {
    auto& s   = samples[i];
    auto pred = model.net.forward(s.stack);
    ImageMetrics m;
    if (supersample) {
      auto up = model.net.supersample(pred, buffer_tensor(*s.hires));
      m = compute_metrics(tensor_to_image(up), *s.truth_hires, upsample_mask(s.coverage));
    } else {
      m = compute_metrics(tensor_to_image(pred), s.truth, s.coverage);
    }
    m.id              = s.record.dir;
    report.images[i]  = m;
  });
  report.finalize();
  return report;
}

void render_view(const fs::path& ckpt, const fs::path& scene_path, std::uint64_t seed, const fs::path& out, int spp) {
  auto model = load_model(ckpt);
  auto scene = std::make_shared<const Scene>(load_scene(scene_path));
  auto inst  = sample_instance(scene, seed);
  auto world = build_world(inst);
  int res    = model.config.resolution;
  if (spp < 0) spp = model.config.spp;
  fs::create_directories(out);

  BufferStack stack;
  if (model.net.config().transparency_buffers) {
    stack = rasterize(world, res, res);
  } else {
    stack.gbuffer = rasterize_combined(world, res, res);
  }
  auto pred = tensor_to_image(model.net.forward(stack));
  save_radiance_pfm(out / "prediction.pfm", pred);
  save_preview_png(out / "prediction.png", pred);
  if (spp == 0) return;

  TraceOptions options;
  options.max_depth = model.config.max_depth;
  auto truth = trace_image(world, res, res, spp, hash_values(seed, 0x7472616365ull), options);
  auto mask  = trace_coverage(world, res, res);
  auto diff  = abs_difference(pred, truth);
  save_radiance_pfm(out / "truth.pfm", truth);
  save_preview_png(out / "truth.png", truth);
  save_radiance_pfm(out / "difference.pfm", diff);
  save_preview_png(out / "difference.png", diff);
  save_mask_png(out / "coverage.png", mask);
  MetricsReport report;
  report.split       = "render";
  report.config_hash = model.config.hash();
  auto m             = compute_metrics(pred, truth, mask);
  m.id               = "seed-" + std::to_string(seed);
  report.images.push_back(m);
  report.finalize();
  std::ofstream(out / "metrics.json") << report.to_json() << "\n";
}

void oit_demo(const fs::path& scene_path, const fs::path& out, int resolution, std::uint64_t seed, int max_peels) {
  auto scene = std::make_shared<const Scene>(load_scene(scene_path));
  auto world = build_world(sample_instance(scene, seed));
  int passes = 0;
  auto stack = depth_peel(world, resolution, resolution, max_peels, &passes);
  auto sorted   = composite_sorted(stack);
  auto unsorted = composite_unsorted(stack, draw_order(stack), BlendOrder::back_to_front);
  auto diff     = abs_difference(sorted, unsorted);
  fs::create_directories(out);
  save_preview_png(out / "sorted.png", sorted);
  save_preview_png(out / "unsorted.png", unsorted);
  save_preview_png(out / "difference.png", diff);
  RadianceImage triptych(3 * resolution, resolution);
  for (int y = 0; y < resolution; y++)
    for (int x = 0; x < resolution; x++) {
      triptych.at(x, y)                  = sorted.at(x, y);
      triptych.at(resolution + x, y)     = unsorted.at(x, y);
      triptych.at(2 * resolution + x, y) = diff.at(x, y);
    }
  save_preview_png(out / "triptych.png", triptych);
  std::size_t max_layers = 0, layered = 0;
  for (auto& l : stack.layers) {
    max_layers = std::max(max_layers, l.size());
    layered += l.size() > 1;
  }
  RadianceImage zero(resolution, resolution);
  json report = {{"mae", {{"sorted_vs_unsorted", mae(sorted, unsorted)}, {"sorted_vs_sorted", mae(sorted, sorted)},
                             {"difference_vs_zero", mae(diff, zero)}}},
      {"resolution", resolution}, {"seed", seed}, {"peel_passes", passes}, {"max_layers", max_layers},
      {"pixels_with_multiple_layers", layered}};
  std::ofstream(out / "oit.json") << report.dump(2) << "\n";
}

}  // namespace glassbuf
