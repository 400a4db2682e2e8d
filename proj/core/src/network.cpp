#include "spcnn/network.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <random>
#include <string>

#include "spcnn/errors.hpp"
#include "spcnn/tensor_ops.hpp"

namespace spcnn {
namespace {

Shape kernel_shape(const LayerSpec& l) {
  return Shape{l.out_channels, l.in_channels, l.kernel_h, l.kernel_w};
}

constexpr std::uint64_t kFnvOffset = 1469598103934665603ull;
constexpr std::uint64_t kFnvPrime = 1099511628211ull;

void fnv_mix(std::uint64_t& h, const void* data, std::size_t bytes) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < bytes; ++i) {
    h ^= p[i];
    h *= kFnvPrime;
  }
}

}  // namespace

std::vector<LayerSpec> default_layers() { return make_layers(6, 64); }

std::vector<LayerSpec> make_layers(std::size_t depth, std::size_t width,
                                   std::size_t first_kernel,
                                   std::size_t kernel) {
  if (depth == 0) throw InvalidArgument("make_layers: depth must be >= 1");
  if (width == 0) throw InvalidArgument("make_layers: width must be >= 1");
  std::vector<LayerSpec> layers;
  for (std::size_t i = 0; i < depth; ++i) {
    const bool last = i + 1 == depth;
    const std::size_t k = i == 0 ? first_kernel : kernel;
    layers.push_back(LayerSpec{last ? 1 : width, i == 0 ? 1 : width, k, k, !last});
  }
  return layers;
}

void validate_layers(const std::vector<LayerSpec>& layers) {
  if (layers.empty()) throw InvalidArgument("network has no layers");
  if (layers.front().in_channels != 1) {
    throw InvalidArgument("layer 1 must take 1 input channel, has " +
                          std::to_string(layers.front().in_channels));
  }
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const auto& l = layers[i];
    if (l.kernel_h == 0 || l.kernel_w == 0 || l.out_channels == 0) {
      throw InvalidArgument("layer " + std::to_string(i + 1) +
                            " has a zero extent");
    }
    if (i + 1 < layers.size() && l.out_channels != layers[i + 1].in_channels) {
      throw InvalidArgument("layer " + std::to_string(i + 1) + " outputs " +
                            std::to_string(l.out_channels) +
                            " channels but layer " + std::to_string(i + 2) +
                            " expects " +
                            std::to_string(layers[i + 1].in_channels));
    }
  }
  if (layers.back().out_channels != 1) {
    throw InvalidArgument("final layer must produce 1 channel");
  }
}

std::size_t ModelParams::parameter_count() const noexcept {
  std::size_t n = 0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    n += weights[i].size() + biases[i].size();
  }
  return n;
}

std::uint64_t ModelParams::fingerprint() const noexcept {
  std::uint64_t h = kFnvOffset;
  for (const auto& l : layers) {
    const std::uint64_t v[5] = {l.out_channels, l.in_channels, l.kernel_h,
                                l.kernel_w, l.has_relu ? 1u : 0u};
    fnv_mix(h, v, sizeof(v));
  }
  for (std::size_t i = 0; i < weights.size(); ++i) {
    fnv_mix(h, weights[i].data().data(), weights[i].size() * sizeof(double));
    fnv_mix(h, biases[i].data(), biases[i].size() * sizeof(double));
  }
  return h;
}

ParamGrads ParamGrads::zeros_like(const ModelParams& params) {
  ParamGrads g;
  for (std::size_t i = 0; i < params.depth(); ++i) {
    g.weights.emplace_back(params.weights[i].shape());
    g.biases.emplace_back(params.biases[i].size(), 0.0);
  }
  return g;
}

ParamGrads& ParamGrads::operator+=(const ParamGrads& other) {
  if (other.weights.size() != weights.size()) {
    throw InvalidArgument("ParamGrads: layer count mismatch");
  }
  for (std::size_t i = 0; i < weights.size(); ++i) {
    auto dst = weights[i].data();
    auto src = other.weights[i].data();
    if (dst.size() != src.size()) {
      throw InvalidArgument("ParamGrads: layer " + std::to_string(i + 1) +
                            " size mismatch");
    }
    for (std::size_t k = 0; k < dst.size(); ++k) dst[k] += src[k];
    for (std::size_t k = 0; k < biases[i].size(); ++k) {
      biases[i][k] += other.biases[i][k];
    }
  }
  return *this;
}

ParamGrads& ParamGrads::operator*=(double s) {
  for (auto& w : weights) {
    for (double& v : w.data()) v *= s;
  }
  for (auto& b : biases) {
    for (double& v : b) v *= s;
  }
  return *this;
}

double ParamGrads::max_abs() const noexcept {
  double m = 0.0;
  for (const auto& w : weights) {
    for (double v : w.data()) m = std::max(m, std::abs(v));
  }
  for (const auto& b : biases) {
    for (double v : b) m = std::max(m, std::abs(v));
  }
  return m;
}

bool ParamGrads::all_finite() const noexcept {
  for (const auto& w : weights) {
    if (!w.all_finite()) return false;
  }
  for (const auto& b : biases) {
    for (double v : b) {
      if (!std::isfinite(v)) return false;
    }
  }
  return true;
}

ModelParams zero_params(const std::vector<LayerSpec>& layers) {
  validate_layers(layers);
  ModelParams p;
  p.layers = layers;
  for (const auto& l : layers) {
    p.weights.emplace_back(kernel_shape(l));
    p.biases.emplace_back(l.out_channels, 0.0);
  }
  return p;
}

ModelParams init_params(std::uint64_t seed,
                        const std::vector<LayerSpec>& layers) {
  ModelParams p = zero_params(layers);
  std::mt19937_64 rng(seed);
  for (std::size_t i = 0; i < p.depth(); ++i) {
    const auto& l = layers[i];
    const double fan_in = static_cast<double>(l.in_channels * l.kernel_h * l.kernel_w);
    const double bound = std::sqrt(6.0 / fan_in);
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (double& v : p.weights[i].data()) v = dist(rng);
  }
  return p;
}

ForwardResult forward(const ModelParams& params, const Tensor& x) {
  if (x.shape().c != 1) {
    throw InvalidArgument("forward: input must have 1 channel, has " +
                          std::to_string(x.shape().c));
  }
  ForwardResult r;
  r.cache.params_fingerprint = params.fingerprint();
  Tensor act = x;
  for (std::size_t i = 0; i < params.depth(); ++i) {
    Tensor pre = conv2d_same(act, params.weights[i], params.biases[i]);
    Tensor next = params.layers[i].has_relu ? relu(pre) : pre;
    r.cache.inputs.push_back(std::move(act));
    r.cache.pre_activations.push_back(std::move(pre));
    act = std::move(next);
  }
  r.output = std::move(act);
  return r;
}

Tensor predict(const ModelParams& params, const Tensor& x) {
  if (x.shape().c != 1) {
    throw InvalidArgument("predict: input must have 1 channel, has " +
                          std::to_string(x.shape().c));
  }
  Tensor act = x;
  for (std::size_t i = 0; i < params.depth(); ++i) {
    act = conv2d_same(act, params.weights[i], params.biases[i]);
    if (params.layers[i].has_relu) act = relu(act);
  }
  return act;
}

ParamGrads backward(const ModelParams& params, const ForwardCache& cache,
                    const Tensor& grad_output) {
  if (cache.inputs.size() != params.depth() ||
      cache.params_fingerprint != params.fingerprint()) {
    throw InvalidState(
        "backward: forward cache was produced by different parameters");
  }
  const Tensor& last = cache.pre_activations.back();
  if (grad_output.shape() != last.shape()) {
    throw InvalidArgument("backward: output gradient " +
                          to_string(grad_output.shape()) +
                          " != network output " + to_string(last.shape()));
  }
  ParamGrads g = ParamGrads::zeros_like(params);
  Tensor up = grad_output;
  for (std::size_t k = params.depth(); k-- > 0;) {
    if (params.layers[k].has_relu) up = relu_backward(cache.pre_activations[k], up);
    Conv2dGrads cg = conv2d_same_backward(cache.inputs[k], params.weights[k], up);
    g.weights[k] = std::move(cg.kernel);
    g.biases[k] = std::move(cg.bias);
    up = std::move(cg.input);
  }
  return g;
}

ModelParams round_to_float(const ModelParams& params) {
  ModelParams p = params;
  for (auto& w : p.weights) {
    for (double& v : w.data()) v = static_cast<float>(v);
  }
  for (auto& b : p.biases) {
    for (double& v : b) v = static_cast<float>(v);
  }
  return p;
}

}  // namespace spcnn
