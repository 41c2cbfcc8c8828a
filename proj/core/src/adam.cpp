#include <cmath>

#include "glassbuf/adam.hpp"
#include "glassbuf/errors.hpp"

namespace glassbuf {

Tensor& ParamSet::add(const std::string& name, Shape shape) {
  if (find(name)) throw ValidationError("duplicate parameter " + name);
  Tensor t(std::move(shape));
  t.set_requires_grad(true).set_name(name);
  params_.push_back({name, t});
  return params_.back().value;
}

void ParamSet::insert(const Param& param) {
  if (find(param.name)) throw ValidationError("duplicate parameter " + param.name);
  params_.push_back(param);
}

ParamSet ParamSet::subset(const std::vector<std::string>& prefixes) const {
  ParamSet out;
  for (auto& p : params_)
    for (auto& prefix : prefixes)
      if (p.name.starts_with(prefix)) {
        out.params_.push_back(p);
        break;
      }
  return out;
}

const Tensor* ParamSet::find(const std::string& name) const {
  for (auto& p : params_)
    if (p.name == name) return &p.value;
  return nullptr;
}

const Tensor& ParamSet::at(const std::string& name) const {
  if (auto* t = find(name)) return *t;
  throw ValidationError("unknown parameter " + name);
}

std::size_t ParamSet::count() const {
  std::size_t n = 0;
  for (auto& p : params_) n += p.value.numel();
  return n;
}

Gradients collect_gradients(const Tape& tape, const ParamSet& params) {
  Gradients out;
  out.reserve(params.size());
  for (auto& p : params.items()) {
    const float* g = tape.find_grad(p.value);
    if (g)
      out.emplace_back(g, g + p.value.numel());
    else
      out.emplace_back(p.value.numel(), 0.0f);
  }
  return out;
}

Gradients sum_gradients(const std::vector<Gradients>& shards) {
  if (shards.empty()) return {};
  Gradients out = shards[0];
  for (std::size_t s = 1; s < shards.size(); s++) {
    if (shards[s].size() != out.size()) throw ShapeError("gradient shards disagree on parameter count");
    for (std::size_t p = 0; p < out.size(); p++)
      for (std::size_t i = 0; i < out[p].size(); i++) out[p][i] += shards[s][p][i];
  }
  return out;
}

AdamState make_adam(const ParamSet& params, const AdamConfig& config) {
  AdamState state;
  state.config = config;
  for (auto& p : params.items()) {
    state.m.emplace_back(p.value.numel(), 0.0f);
    state.v.emplace_back(p.value.numel(), 0.0f);
  }
  return state;
}

void adam_step(ParamSet& params, const Gradients& grads, AdamState& state) {
  auto& items = params.items();
  if (grads.size() != items.size() || state.m.size() != items.size())
    throw ShapeError("adam_step: " + std::to_string(grads.size()) + " gradients for " + std::to_string(items.size()) +
                     " parameters");
  for (std::size_t p = 0; p < items.size(); p++) {
    if (grads[p].size() != items[p].value.numel())
      throw ShapeError("adam_step: gradient size mismatch for " + items[p].name);
    for (float g : grads[p])
      if (!std::isfinite(g)) throw NumericError("non-finite gradient for parameter " + items[p].name);
  }
  auto& c = state.config;
  state.step++;
  double bc1 = 1 - std::pow(double(c.beta1), double(state.step));
  double bc2 = 1 - std::pow(double(c.beta2), double(state.step));
  for (std::size_t p = 0; p < items.size(); p++) {
    float* w = items[p].value.data();
    auto& m  = state.m[p];
    auto& v  = state.v[p];
    for (std::size_t i = 0; i < m.size(); i++) {
      float g = grads[p][i];
      m[i]    = c.beta1 * m[i] + (1 - c.beta1) * g;
      v[i]    = c.beta2 * v[i] + (1 - c.beta2) * g * g;
      double mhat = m[i] / bc1, vhat = v[i] / bc2;
      w[i] -= c.lr * c.weight_decay * w[i];
      w[i] -= static_cast<float>(c.lr * mhat / (std::sqrt(vhat) + c.eps));
    }
  }
}

}  // namespace glassbuf
