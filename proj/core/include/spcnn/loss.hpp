#pragma once

#include <cstddef>
#include <span>

#include "spcnn/data.hpp"
#include "spcnn/network.hpp"
#include "spcnn/shape_prior.hpp"

namespace spcnn {

struct LossConfig {
  double lambda = 5e-7;
  PriorParams prior;
  double weight_decay = 1e-5;
  std::size_t threads = 1;
  // Negates the prior gradient. Only used to check that grad_check catches
  // a broken derivative.
  bool flip_prior_gradient = false;
};

// Batch means. total == fidelity - lambda * prior exactly; the weight-decay
// penalty (weight_decay / 2 * sum W^2) is reported separately and is not part
// of total.
struct LossBreakdown {
  double fidelity = 0.0;
  double prior = 0.0;
  double total = 0.0;
  double weight_decay_penalty = 0.0;
};

struct LossAndGrad {
  LossBreakdown loss;
  ParamGrads grads;  // of total + weight_decay_penalty
};

// Objective ||f(x) - y||^2 - lambda * prior(f(x)), averaged over the batch,
// and its parameter gradient. Per-sample gradients are reduced in sample
// order, so the result does not depend on the thread count. Throws
// NumericFailure (carrying batch_index) if a loss component is not finite.
LossAndGrad loss_and_grad(const ModelParams& params,
                          std::span<const TrainingTuple> batch,
                          const ShapeSet& shapes, const LossConfig& cfg,
                          std::size_t batch_index = 0);

// Loss only, no gradient.
LossBreakdown loss_value(const ModelParams& params,
                         std::span<const TrainingTuple> batch,
                         const ShapeSet& shapes, const LossConfig& cfg);

}  // namespace spcnn
