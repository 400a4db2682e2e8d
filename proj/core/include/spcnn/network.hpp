#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "spcnn/tensor.hpp"

namespace spcnn {

struct LayerSpec {
  std::size_t out_channels = 0;
  std::size_t in_channels = 0;
  std::size_t kernel_h = 0;
  std::size_t kernel_w = 0;
  bool has_relu = true;

  friend bool operator==(const LayerSpec&, const LayerSpec&) = default;
};

// The six-layer detector: 5x5x1 -> 64, four 3x3x64 -> 64 with ReLU, and a
// final linear 3x3x64 -> 1.
std::vector<LayerSpec> default_layers();

// Same topology as default_layers() but with `depth` layers of `width`
// channels. depth == 1 gives a single linear conv of size first_kernel.
std::vector<LayerSpec> make_layers(std::size_t depth, std::size_t width,
                                   std::size_t first_kernel = 5,
                                   std::size_t kernel = 3);

// Throws InvalidArgument unless the layers chain (1 input channel, each
// out == next in, 1 output channel).
void validate_layers(const std::vector<LayerSpec>& layers);

struct ModelParams {
  std::vector<LayerSpec> layers;
  std::vector<Tensor> weights;              // out x in x kh x kw per layer
  std::vector<std::vector<double>> biases;  // out per layer

  std::size_t depth() const noexcept { return layers.size(); }
  std::size_t parameter_count() const noexcept;
  // FNV-1a over layer specs and parameter bytes.
  std::uint64_t fingerprint() const noexcept;

  friend bool operator==(const ModelParams&, const ModelParams&) = default;
};

struct ParamGrads {
  std::vector<Tensor> weights;
  std::vector<std::vector<double>> biases;

  static ParamGrads zeros_like(const ModelParams& params);

  ParamGrads& operator+=(const ParamGrads& other);
  ParamGrads& operator*=(double s);
  double max_abs() const noexcept;
  bool all_finite() const noexcept;
};

// Zero parameters with the given topology.
ModelParams zero_params(const std::vector<LayerSpec>& layers);

// He-scaled uniform weights, U(-sqrt(6/fan_in), sqrt(6/fan_in)), zero biases.
ModelParams init_params(std::uint64_t seed,
                        const std::vector<LayerSpec>& layers = default_layers());

// Per-layer inputs and pre-activations retained for backward().
struct ForwardCache {
  std::uint64_t params_fingerprint = 0;
  std::vector<Tensor> inputs;
  std::vector<Tensor> pre_activations;
};

struct ForwardResult {
  Tensor output;
  ForwardCache cache;
};

ForwardResult forward(const ModelParams& params, const Tensor& x);

// forward() without keeping the cache.
Tensor predict(const ModelParams& params, const Tensor& x);

// Gradients of <dL/dy, f(x; params)> with respect to every weight and bias.
// Throws InvalidState if the cache was produced by different parameters.
ParamGrads backward(const ModelParams& params, const ForwardCache& cache,
                    const Tensor& grad_output);

// Copy of params with every value rounded through float32, the precision
// used by checkpoints.
ModelParams round_to_float(const ModelParams& params);

}  // namespace spcnn
