#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace glassbuf {

// Byte counters for every float buffer owned by the tensor engine (tensor
// data, gradients, op workspaces). Global and thread-safe.
namespace memory {
std::size_t live_bytes();
std::size_t peak_bytes();
// Sets the peak to the current live byte count.
void reset_peak();
void on_alloc(std::size_t bytes);
void on_free(std::size_t bytes);
}  // namespace memory

template <typename T>
struct TrackedAllocator {
  using value_type = T;
  TrackedAllocator() = default;
  template <typename U>
  TrackedAllocator(const TrackedAllocator<U>&) {}
  T* allocate(std::size_t n) {
    memory::on_alloc(n * sizeof(T));
    return std::allocator<T>{}.allocate(n);
  }
  void deallocate(T* p, std::size_t n) {
    memory::on_free(n * sizeof(T));
    std::allocator<T>{}.deallocate(p, n);
  }
  template <typename U>
  bool operator==(const TrackedAllocator<U>&) const { return true; }
};

using FloatVec  = std::vector<float, TrackedAllocator<float>>;
using DoubleVec = std::vector<double, TrackedAllocator<double>>;
using Shape     = std::vector<int>;

std::string shape_string(const Shape& shape);
std::size_t shape_numel(const Shape& shape);

struct TensorImpl {
  Shape shape;
  FloatVec data;
  bool requires_grad = false;
  std::string name;
};

// Shared handle to a dense float32 array. Copies alias the same storage.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, float fill = 0.0f);
  static Tensor from(Shape shape, std::span<const float> values);
  static Tensor scalar(float value) { return Tensor({1}, value); }

  const Shape& shape() const { return impl_->shape; }
  int dim(int i) const { return impl_->shape.at(i); }
  int rank() const { return static_cast<int>(impl_->shape.size()); }
  std::size_t numel() const { return impl_->data.size(); }
  float* data() { return impl_->data.data(); }
  const float* data() const { return impl_->data.data(); }
  std::span<float> values() { return {impl_->data.data(), impl_->data.size()}; }
  std::span<const float> values() const { return {impl_->data.data(), impl_->data.size()}; }
  float item() const { return impl_->data.at(0); }

  bool requires_grad() const { return impl_->requires_grad; }
  Tensor& set_requires_grad(bool on) {
    impl_->requires_grad = on;
    return *this;
  }
  const std::string& name() const { return impl_->name; }
  Tensor& set_name(std::string name) {
    impl_->name = std::move(name);
    return *this;
  }

  Tensor clone() const;
  TensorImpl* impl() const { return impl_.get(); }
  explicit operator bool() const { return impl_ != nullptr; }

 private:
  std::shared_ptr<TensorImpl> impl_;
};

// Records differentiable operations in execution order. Gradients live on the
// tape, keyed by tensor, so several tapes may share parameter tensors and run
// concurrently. Ops record onto the tape activated on the current thread;
// with no active tape nothing is recorded and intermediates are freed as soon
// as they go out of scope.
class Tape {
 public:
  using Backward = std::function<void(Tape&)>;

  void record(Backward backward) { nodes_.push_back(std::move(backward)); }
  std::size_t size() const { return nodes_.size(); }

  // Seeds d(root)/d(root) = 1 (root must be a one-element tensor) and runs
  // every recorded node once in reverse order.
  void backward(const Tensor& root);

  // Gradient buffer for t, zero-initialized on first access.
  std::span<float> grad(const Tensor& t);
  // Null when nothing has flowed into t.
  const float* find_grad(const Tensor& t) const;
  void clear();

 private:
  std::vector<Backward> nodes_;
  std::unordered_map<const TensorImpl*, FloatVec> grads_;
};

Tape* active_tape();

class TapeScope {
 public:
  explicit TapeScope(Tape& tape);
  ~TapeScope();
  TapeScope(const TapeScope&)            = delete;
  TapeScope& operator=(const TapeScope&) = delete;

 private:
  Tape* previous_;
};

// With debug checks on, every op verifies its output is finite and throws
// NumericError naming the op otherwise.
void set_debug_checks(bool on);
bool debug_checks();

}  // namespace glassbuf
