#pragma once

#include <vector>

#include "glassbuf/tensor.hpp"

// Differentiable operations. Images are [C, H, W]. Every op checks shapes and
// throws ShapeError naming the offending shapes.
namespace glassbuf::ops {

// weight [Cout, Cin, k, k] with k in {1, 3}, bias [Cout]; stride 1, zero padding k/2.
Tensor conv2d(const Tensor& x, const Tensor& weight, const Tensor& bias);
// x with N elements, weight [M, N], bias [M] -> [M].
Tensor dense(const Tensor& x, const Tensor& weight, const Tensor& bias);
Tensor leaky_relu(const Tensor& x, float slope = 0.2f);
Tensor softplus(const Tensor& x);
// 2x2 max pooling; H and W must be even. Ties pick the first element in
// row-major window order.
Tensor max_pool2(const Tensor& x);
Tensor upsample2(const Tensor& x);
// Concatenation along the channel (first) axis.
Tensor concat(const std::vector<Tensor>& parts);
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor scalar_mul(const Tensor& a, float s);
Tensor add_scalar(const Tensor& a, float s);
// Sum of all elements as a [1] tensor, accumulated in double.
Tensor sum_reduce(const Tensor& a);
Tensor mean_reduce(const Tensor& a);
// Each channel v becomes (v, sin(2^0 pi v), cos(2^0 pi v), ..., sin(2^{L-1} pi v),
// cos(2^{L-1} pi v)); output has C * (2L + 1) channels.
Tensor positional_encode(const Tensor& x, int frequencies);

}  // namespace glassbuf::ops
