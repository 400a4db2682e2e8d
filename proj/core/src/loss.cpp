#include "spcnn/loss.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <thread>

#include "spcnn/errors.hpp"
#include "spcnn/tensor_ops.hpp"

namespace spcnn {
namespace {

struct SampleResult {
  double fidelity = 0.0;
  double prior = 0.0;
  ParamGrads grads;
};

void check_batch(std::span<const TrainingTuple> batch) {
  if (batch.empty()) throw InvalidArgument("loss: empty batch");
  const Shape s = batch.front().x.shape();
  for (const auto& t : batch) {
    if (t.x.shape() != s || t.y.shape() != s || t.edges.shape() != s) {
      throw InvalidArgument("loss: batch tuples must share one patch shape " +
                            to_string(s));
    }
  }
}

double weight_penalty(const ModelParams& params, double wd) {
  double s = 0.0;
  for (const auto& w : params.weights) s += sq_norm(w);
  return 0.5 * wd * s;
}

SampleResult run_sample(const ModelParams& params, const TrainingTuple& t,
                        const ShapeSet& shapes, const LossConfig& cfg,
                        double inv_n, bool with_grad) {
  SampleResult r;
  ForwardResult fw = forward(params, t.x);
  const Tensor& yhat = fw.output;
  Tensor residual(yhat.shape());
  for (std::size_t k = 0; k < yhat.size(); ++k) residual[k] = yhat[k] - t.y[k];
  r.fidelity = sq_norm(residual);
  if (!with_grad) {
    r.prior = prior_value(yhat, t.edges, shapes, cfg.prior);
    return r;
  }
  Tensor dy(yhat.shape());
  for (std::size_t k = 0; k < dy.size(); ++k) dy[k] = 2.0 * residual[k] * inv_n;
  if (cfg.lambda == 0.0) {
    r.prior = prior_value(yhat, t.edges, shapes, cfg.prior);
  } else {
    const PriorTermResult pr = prior_term(yhat, t.edges, shapes, cfg.prior);
    r.prior = pr.value;
    const double scale = (cfg.flip_prior_gradient ? -1.0 : 1.0) * cfg.lambda * inv_n;
    for (std::size_t k = 0; k < dy.size(); ++k) dy[k] -= scale * pr.grad[k];
  }
  r.grads = backward(params, fw.cache, dy);
  return r;
}

std::vector<SampleResult> run_batch(const ModelParams& params,
                                    std::span<const TrainingTuple> batch,
                                    const ShapeSet& shapes, const LossConfig& cfg,
                                    bool with_grad) {
  const double inv_n = 1.0 / static_cast<double>(batch.size());
  std::vector<SampleResult> results(batch.size());
  const std::size_t threads = std::clamp<std::size_t>(cfg.threads, 1, batch.size());
  if (threads == 1) {
    for (std::size_t i = 0; i < batch.size(); ++i) {
      results[i] = run_sample(params, batch[i], shapes, cfg, inv_n, with_grad);
    }
    return results;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(threads);
  for (std::size_t w = 0; w < threads; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::size_t i = w; i < batch.size(); i += threads) {
          results[i] = run_sample(params, batch[i], shapes, cfg, inv_n, with_grad);
        }
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return results;
}

LossBreakdown reduce(const std::vector<SampleResult>& results,
                     const ModelParams& params, const LossConfig& cfg,
                     std::size_t batch_index) {
  LossBreakdown lb;
  for (const auto& r : results) {
    lb.fidelity += r.fidelity;
    lb.prior += r.prior;
  }
  const double n = static_cast<double>(results.size());
  lb.fidelity /= n;
  lb.prior /= n;
  if (!std::isfinite(lb.fidelity) || !std::isfinite(lb.prior)) {
    throw NumericFailure("non-finite loss in batch " + std::to_string(batch_index) +
                             " (fidelity " + std::to_string(lb.fidelity) +
                             ", prior " + std::to_string(lb.prior) + ")",
                         batch_index);
  }
  lb.total = lb.fidelity - cfg.lambda * lb.prior;
  lb.weight_decay_penalty = weight_penalty(params, cfg.weight_decay);
  return lb;
}

}  // namespace

LossAndGrad loss_and_grad(const ModelParams& params,
                          std::span<const TrainingTuple> batch,
                          const ShapeSet& shapes, const LossConfig& cfg,
                          std::size_t batch_index) {
  check_batch(batch);
  auto results = run_batch(params, batch, shapes, cfg, true);
  LossAndGrad out;
  out.loss = reduce(results, params, cfg, batch_index);
  out.grads = std::move(results.front().grads);
  for (std::size_t i = 1; i < results.size(); ++i) out.grads += results[i].grads;
  if (cfg.weight_decay != 0.0) {
    for (std::size_t l = 0; l < params.depth(); ++l) {
      auto g = out.grads.weights[l].data();
      auto w = params.weights[l].data();
      for (std::size_t k = 0; k < g.size(); ++k) g[k] += cfg.weight_decay * w[k];
    }
  }
  if (!out.grads.all_finite()) {
    throw NumericFailure("non-finite gradient in batch " + std::to_string(batch_index),
                         batch_index);
  }
  return out;
}

LossBreakdown loss_value(const ModelParams& params,
                         std::span<const TrainingTuple> batch,
                         const ShapeSet& shapes, const LossConfig& cfg) {
  check_batch(batch);
  return reduce(run_batch(params, batch, shapes, cfg, false), params, cfg, 0);
}

}  // namespace spcnn
