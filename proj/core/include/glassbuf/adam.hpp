#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "glassbuf/tensor.hpp"

namespace glassbuf {

struct Param {
  std::string name;
  Tensor value;
};

// Ordered collection of named trainable tensors.
class ParamSet {
 public:
  Tensor& add(const std::string& name, Shape shape);
  // Adds an existing tensor; the set aliases its storage.
  void insert(const Param& param);
  // Parameters whose names start with any of the prefixes, sharing storage.
  ParamSet subset(const std::vector<std::string>& prefixes) const;
  const Tensor* find(const std::string& name) const;
  const Tensor& at(const std::string& name) const;

  std::vector<Param>& items() { return params_; }
  const std::vector<Param>& items() const { return params_; }
  std::size_t size() const { return params_.size(); }
  std::size_t count() const;  // total number of scalars

 private:
  std::vector<Param> params_;
};

using Gradients = std::vector<std::vector<float>>;  // parallel to ParamSet::items()

// Gradients of every parameter on a tape; parameters the tape never reached get zeros.
Gradients collect_gradients(const Tape& tape, const ParamSet& params);
// Element-wise sum in shard order, so the result does not depend on which
// shard finished first.
Gradients sum_gradients(const std::vector<Gradients>& shards);

struct AdamConfig {
  float lr           = 1e-4f;
  float beta1        = 0.9f;
  float beta2        = 0.999f;
  float eps          = 1e-8f;
  float weight_decay = 0.0f;
};

struct AdamState {
  AdamConfig config;
  std::int64_t step = 0;
  std::vector<std::vector<float>> m, v;
};

AdamState make_adam(const ParamSet& params, const AdamConfig& config);

// One AdamW update (decoupled weight decay, bias-corrected moments). Any
// non-finite gradient raises NumericError naming the parameter, before
// anything is modified.
void adam_step(ParamSet& params, const Gradients& grads, AdamState& state);

}  // namespace glassbuf
