#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "spcnn/tensor.hpp"

namespace spcnn {

// Leading padding used by every stride-1 SAME operation: floor((k - 1) / 2).
// For even k the extra row/column of padding goes to the bottom/right.
constexpr std::size_t same_pad_before(std::size_t k) noexcept {
  return (k - 1) / 2;
}

// SAME cross-correlation at stride 1.
//
//   out[n, o] = sum_c input[n, c] (*) kernel[o, c] + bias[o]
//
// input: N x C x H x W, kernel: O x C x kH x kW, bias: O entries. The output
// is N x O x H x W. Zero padding.
Tensor conv2d_same(const Tensor& input, const Tensor& kernel,
                   std::span<const double> bias);

struct Conv2dGrads {
  Tensor input;
  Tensor kernel;
  std::vector<double> bias;
};

// Exact gradients of conv2d_same contracted with `upstream` (shaped like the
// forward output).
Conv2dGrads conv2d_same_backward(const Tensor& input, const Tensor& kernel,
                                 const Tensor& upstream);

Tensor relu(const Tensor& input);
// Passes upstream where input > 0; the subgradient at 0 is taken as 0.
Tensor relu_backward(const Tensor& input, const Tensor& upstream);

// Flat input index that produced each pooled output element.
struct ArgmaxMap {
  Shape input_shape;
  std::vector<std::size_t> index;
};

struct PoolResult {
  Tensor output;
  ArgmaxMap argmax;
};

// p x p window max at stride 1 with SAME output size. Out-of-bounds
// positions never win (max over the valid intersection). Ties go to the
// smallest flat index. `window` must be odd.
PoolResult maxpool_same_stride1(const Tensor& input, std::size_t window);

// Scatter-add of `upstream` onto the recorded argmax positions.
Tensor maxpool_backward(const ArgmaxMap& argmax, const Tensor& upstream);

Tensor hadamard(const Tensor& a, const Tensor& b);

double sq_norm(const Tensor& a);

}  // namespace spcnn
