#include <atomic>
#include <sstream>

#include "glassbuf/errors.hpp"
#include "glassbuf/tensor.hpp"

namespace glassbuf {

namespace memory {

namespace {
std::atomic<std::size_t> g_live{0};
std::atomic<std::size_t> g_peak{0};
}  // namespace

std::size_t live_bytes() { return g_live.load(); }
std::size_t peak_bytes() { return g_peak.load(); }
void reset_peak() { g_peak.store(g_live.load()); }

void on_alloc(std::size_t bytes) {
  auto now  = g_live.fetch_add(bytes) + bytes;
  auto peak = g_peak.load();
  while (now > peak && !g_peak.compare_exchange_weak(peak, now)) {
  }
}

void on_free(std::size_t bytes) { g_live.fetch_sub(bytes); }

}  // namespace memory

std::string shape_string(const Shape& shape) {
  std::ostringstream out;
  out << "[";
  for (std::size_t i = 0; i < shape.size(); i++) out << (i ? "," : "") << shape[i];
  out << "]";
  return out.str();
}

std::size_t shape_numel(const Shape& shape) {
  std::size_t n = 1;
  for (int d : shape) {
    if (d < 0) throw ShapeError("negative dimension in " + shape_string(shape));
    n *= std::size_t(d);
  }
  return n;
}

Tensor::Tensor(Shape shape, float fill) : impl_(std::make_shared<TensorImpl>()) {
  auto n       = shape_numel(shape);
  impl_->shape = std::move(shape);
  impl_->data.assign(n, fill);
}

Tensor Tensor::from(Shape shape, std::span<const float> values) {
  if (shape_numel(shape) != values.size())
    throw ShapeError("shape " + shape_string(shape) + " does not hold " + std::to_string(values.size()) + " values");
  Tensor t;
  t.impl_        = std::make_shared<TensorImpl>();
  t.impl_->shape = std::move(shape);
  t.impl_->data.assign(values.begin(), values.end());
  return t;
}

Tensor Tensor::clone() const {
  auto t = Tensor::from(shape(), values());
  t.impl_->requires_grad = impl_->requires_grad;
  t.impl_->name          = impl_->name;
  return t;
}

void Tape::backward(const Tensor& root) {
  if (root.numel() != 1) throw ShapeError("backward root must have one element, got " + shape_string(root.shape()));
  grad(root)[0] += 1.0f;
  for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) (*it)(*this);
}

std::span<float> Tape::grad(const Tensor& t) {
  auto [it, inserted] = grads_.try_emplace(t.impl());
  if (inserted) it->second.assign(t.numel(), 0.0f);
  return {it->second.data(), it->second.size()};
}

const float* Tape::find_grad(const Tensor& t) const {
  auto it = grads_.find(t.impl());
  return it == grads_.end() ? nullptr : it->second.data();
}

void Tape::clear() {
  nodes_.clear();
  grads_.clear();
}

namespace {
thread_local Tape* t_active = nullptr;
std::atomic<bool> g_debug{false};
}  // namespace

Tape* active_tape() { return t_active; }

TapeScope::TapeScope(Tape& tape) : previous_(t_active) { t_active = &tape; }
TapeScope::~TapeScope() { t_active = previous_; }

void set_debug_checks(bool on) { g_debug.store(on); }
bool debug_checks() { return g_debug.load(); }

}  // namespace glassbuf
