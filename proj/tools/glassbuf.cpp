#include <charconv>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "glassbuf/bench.hpp"
#include "glassbuf/checkpoint.hpp"
#include "glassbuf/dataset.hpp"
#include "glassbuf/errors.hpp"
#include "glassbuf/train.hpp"

namespace fs = std::filesystem;
using namespace glassbuf;

namespace {

constexpr int exit_ok         = 0;
constexpr int exit_validation = 1;
constexpr int exit_runtime    = 2;

std::vector<int> parse_int_list(const std::string& text) {
  std::vector<int> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    int v    = 0;
    auto res = std::from_chars(item.data(), item.data() + item.size(), v);
    if (res.ec != std::errc{} || res.ptr != item.data() + item.size())
      throw ValidationError("not an integer list: '" + text + "'");
    out.push_back(v);
  }
  if (out.empty()) throw ValidationError("empty integer list");
  return out;
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Deferred neural rendering of transparent objects"};
  app.require_subcommand(1);

  std::string config_path, out, data, ckpt, scene, split = "test", t_list = "1,2,4,8";
  std::uint64_t seed = 0;
  int spp = -1, res = 256, oit_res = 128, peels = 8;
  bool supersample = false;

  auto gen = app.add_subcommand("gen-dataset", "Render buffers and ground truth for every split");
  gen->add_option("--config", config_path, "Training config JSON")->required();
  gen->add_option("--out", out, "Dataset directory")->required();

  auto train_cmd = app.add_subcommand("train", "Train GlassNet on a generated dataset");
  train_cmd->add_option("--config", config_path, "Training config JSON")->required();
  train_cmd->add_option("--data", data, "Dataset directory")->required();
  train_cmd->add_option("--out", ckpt, "Checkpoint path")->required();

  auto eval = app.add_subcommand("eval", "Score a checkpoint on a dataset split");
  eval->add_option("--ckpt", ckpt, "Checkpoint path")->required();
  eval->add_option("--data", data, "Dataset directory")->required();
  eval->add_option("--split", split, "train, val or test");
  eval->add_option("--out", out, "Report JSON path")->required();
  eval->add_flag("--supersample", supersample, "Score the 2x supersampled output");

  auto render = app.add_subcommand("render", "Render one scene instance");
  render->add_option("--ckpt", ckpt, "Checkpoint path")->required();
  render->add_option("--scene", scene, "Scene JSON")->required();
  render->add_option("--seed", seed, "Instance seed")->required();
  render->add_option("--out", out, "Output directory")->required();
  render->add_option("--spp", spp, "Reference samples per pixel (0 skips the reference)");

  auto bench = app.add_subcommand("bench-memory", "Transparency-stage memory against t");
  bench->add_option("--t", t_list, "Comma separated buffer counts");
  bench->add_option("--res", res, "Square resolution");
  bench->add_option("--out", out, "Directory for memory.csv and memory.json");

  auto oit = app.add_subcommand("oit-demo", "Sorted vs unsorted compositing of peeled layers");
  oit->add_option("--scene", scene, "Scene JSON")->required();
  oit->add_option("--out", out, "Output directory")->required();
  oit->add_option("--res", oit_res, "Square resolution");
  oit->add_option("--seed", seed, "Instance seed");
  oit->add_option("--peels", peels, "Maximum peel passes");

  auto info = app.add_subcommand("model-info", "Print the layer table of a model");
  auto info_src = info->add_option_group("source");
  info_src->add_option("--ckpt", ckpt, "Checkpoint path");
  info_src->add_option("--config", config_path, "Training config JSON");
  info_src->require_option(1);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? exit_ok : exit_validation;
  }

  try {
    if (*gen) {
      gen_dataset(TrainConfig::load(config_path), out);
      std::cout << "dataset written to " << out << "\n";
    } else if (*train_cmd) {
      TrainOptions options;
      options.log  = &std::cout;
      auto summary = train(TrainConfig::load(config_path), data, ckpt, options);
      std::cout << "trained " << summary.steps << " steps; best val loss " << summary.best_val_loss << " at step "
                << summary.best_step << "\n";
    } else if (*eval) {
      auto report = evaluate(ckpt, data, parse_split(split), supersample);
      write_text(out, report.to_json());
      std::cout << "report written to " << out << "\n";
    } else if (*render) {
      render_view(ckpt, scene, seed, out, spp);
      std::cout << "render written to " << out << "\n";
    } else if (*bench) {
      auto report = bench_memory(parse_int_list(t_list), res);
      std::cout << report.csv();
      if (!out.empty()) {
        write_text(fs::path(out) / "memory.csv", report.csv());
        write_text(fs::path(out) / "memory.json", report.json());
      }
    } else if (*oit) {
      oit_demo(scene, out, oit_res, seed, peels);
      std::cout << "oit demo written to " << out << "\n";
    } else if (*info) {
      GlassNetConfig config;
      if (!ckpt.empty()) {
        auto c = load_checkpoint(ckpt);
        config = GlassNetConfig::from_json(nlohmann::json::parse(c.meta_json).at("model").dump());
      } else {
        config = model_config(TrainConfig::load(config_path));
      }
      std::cout << GlassNet(config).layer_table_json() << "\n";
    }
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_validation;
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_validation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_runtime;
  }
  return exit_ok;
}
