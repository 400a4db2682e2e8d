#include "spcnn/grad_check.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iomanip>
#include <numeric>
#include <ostream>
#include <random>

#include "spcnn/data.hpp"
#include "spcnn/loss.hpp"
#include "spcnn/network.hpp"
#include "spcnn/shape_prior.hpp"
#include "spcnn/tensor_ops.hpp"

namespace spcnn {
namespace {

using Rng = std::mt19937_64;

std::size_t uniform_size(Rng& rng, std::size_t lo, std::size_t hi) {
  return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
}

Tensor random_tensor(Rng& rng, Shape s, double lo = -1.0, double hi = 1.0) {
  Tensor t(s);
  std::uniform_real_distribution<double> d(lo, hi);
  for (double& v : t.data()) v = d(rng);
  return t;
}

Tensor random_binary(Rng& rng, Shape s, double density) {
  Tensor t(s);
  std::bernoulli_distribution d(density);
  for (double& v : t.data()) v = d(rng) ? 1.0 : 0.0;
  return t;
}

// Distinct values spaced well beyond eps, shuffled, in [lo, hi].
Tensor distinct_values(Rng& rng, Shape s, double lo, double hi) {
  std::vector<double> v(s.size());
  std::iota(v.begin(), v.end(), 0.0);
  std::shuffle(v.begin(), v.end(), rng);
  const double step = (hi - lo) / static_cast<double>(std::max<std::size_t>(1, v.size()));
  for (double& x : v) x = lo + step * x;
  return Tensor(s, std::move(v));
}

// Running aggregate of one row.
struct Accumulator {
  GradCheckRow row;
  double eps;
  double tolerance;

  void compare(double analytic, double numeric, double f_scale) {
    row.max_rel_error =
        std::max(row.max_rel_error, gradient_rel_error(analytic, numeric, f_scale));
    ++row.checked;
  }

  GradCheckRow finish() {
    if (row.status != GradCheckRow::Status::kSkipped || row.checked > 0) {
      row.status = row.checked > 0 && row.max_rel_error < tolerance
                       ? GradCheckRow::Status::kPass
                       : GradCheckRow::Status::kFail;
    }
    return row;
  }
};

void check_conv(Rng& rng, Accumulator& acc) {
  const Shape is{uniform_size(rng, 1, 2), uniform_size(rng, 1, 3),
                 uniform_size(rng, 4, 7), uniform_size(rng, 4, 7)};
  const Shape ks{uniform_size(rng, 1, 3), is.c, uniform_size(rng, 1, 4),
                 uniform_size(rng, 1, 4)};
  Tensor x = random_tensor(rng, is);
  Tensor k = random_tensor(rng, ks);
  Tensor bt = random_tensor(rng, Shape{1, 1, 1, ks.n});
  std::vector<double> b(bt.data().begin(), bt.data().end());
  const auto f = [&] { return 0.5 * sq_norm(conv2d_same(x, k, b)); };
  const double f0 = f();
  const Tensor out = conv2d_same(x, k, b);
  const Conv2dGrads g = conv2d_same_backward(x, k, out);
  for (std::size_t i = 0; i < x.size(); ++i) {
    acc.compare(g.input[i], central_difference(x.data(), i, acc.eps, f), f0);
  }
  for (std::size_t i = 0; i < k.size(); ++i) {
    acc.compare(g.kernel[i], central_difference(k.data(), i, acc.eps, f), f0);
  }
  for (std::size_t i = 0; i < b.size(); ++i) {
    acc.compare(g.bias[i], central_difference(b, i, acc.eps, f), f0);
  }
}

void check_relu(Rng& rng, Accumulator& acc) {
  const Shape s{1, uniform_size(rng, 1, 3), uniform_size(rng, 3, 8),
                uniform_size(rng, 3, 8)};
  Tensor x = random_tensor(rng, s);
  for (double& v : x.data()) {
    if (std::abs(v) < 0.05) v = v < 0 ? -0.05 - std::abs(v) : 0.05 + v;
  }
  const Tensor c = random_tensor(rng, s);
  const auto f = [&] {
    const Tensor r = relu(x);
    double acc_v = 0.0;
    for (std::size_t i = 0; i < r.size(); ++i) acc_v += c[i] * r[i];
    return acc_v;
  };
  const double f0 = f();
  const Tensor g = relu_backward(x, c);
  for (std::size_t i = 0; i < x.size(); ++i) {
    acc.compare(g[i], central_difference(x.data(), i, acc.eps, f), f0);
  }
}

void check_maxpool(Rng& rng, Accumulator& acc) {
  const Shape s{1, 1, uniform_size(rng, 5, 9), uniform_size(rng, 5, 9)};
  const std::size_t p = uniform_size(rng, 0, 1) ? 5 : 3;
  Tensor x = distinct_values(rng, s, -1.0, 1.0);
  const auto f = [&] { return 0.5 * sq_norm(maxpool_same_stride1(x, p).output); };
  const double f0 = f();
  const PoolResult pr = maxpool_same_stride1(x, p);
  const Tensor g = maxpool_backward(pr.argmax, pr.output);
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double keep = x[i];
    x[i] = keep + acc.eps;
    const bool stable_hi = maxpool_same_stride1(x, p).argmax.index == pr.argmax.index;
    x[i] = keep - acc.eps;
    const bool stable_lo = maxpool_same_stride1(x, p).argmax.index == pr.argmax.index;
    x[i] = keep;
    if (!stable_hi || !stable_lo) {
      ++acc.row.excluded;
      continue;
    }
    acc.compare(g[i], central_difference(x.data(), i, acc.eps, f), f0);
  }
}

void check_hadamard(Rng& rng, Accumulator& acc) {
  const Shape s{1, uniform_size(rng, 1, 2), uniform_size(rng, 3, 7),
                uniform_size(rng, 3, 7)};
  Tensor a = random_tensor(rng, s);
  Tensor b = random_tensor(rng, s);
  const Tensor c = random_tensor(rng, s);
  const auto f = [&] {
    const Tensor h = hadamard(a, b);
    double v = 0.0;
    for (std::size_t i = 0; i < h.size(); ++i) v += c[i] * h[i];
    return v;
  };
  const double f0 = f();
  const Tensor ga = hadamard(c, b);
  const Tensor gb = hadamard(c, a);
  for (std::size_t i = 0; i < a.size(); ++i) {
    acc.compare(ga[i], central_difference(a.data(), i, acc.eps, f), f0);
    acc.compare(gb[i], central_difference(b.data(), i, acc.eps, f), f0);
  }
}

// Sign pattern of every pre-activation; a change means a ReLU kink was
// crossed.
std::vector<bool> relu_signature(const ModelParams& params, const Tensor& x) {
  const ForwardResult fw = forward(params, x);
  std::vector<bool> sig;
  for (std::size_t l = 0; l < params.depth(); ++l) {
    if (!params.layers[l].has_relu) continue;
    for (double v : fw.cache.pre_activations[l].data()) sig.push_back(v > 0.0);
  }
  return sig;
}

template <typename Signature, typename Objective>
void check_params(ModelParams& params, const ParamGrads& g, Accumulator& acc,
                  const Signature& signature, const Objective& f) {
  const double f0 = f();
  const auto base = signature();
  const auto visit = [&](std::span<double> values, std::span<const double> grads) {
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double keep = values[i];
      values[i] = keep + acc.eps;
      const bool hi = signature() == base;
      values[i] = keep - acc.eps;
      const bool lo = signature() == base;
      values[i] = keep;
      if (!hi || !lo) {
        ++acc.row.excluded;
        continue;
      }
      acc.compare(grads[i], central_difference(values, i, acc.eps, f), f0);
    }
  };
  for (std::size_t l = 0; l < params.depth(); ++l) {
    visit(params.weights[l].data(), g.weights[l].data());
    visit(params.biases[l], g.biases[l]);
  }
}

void check_network(Rng& rng, Accumulator& acc) {
  const std::size_t depth = uniform_size(rng, 2, 6);
  const std::size_t width = uniform_size(rng, 2, 4);
  const std::size_t hw = uniform_size(rng, 6, 8);
  ModelParams params = init_params(rng(), make_layers(depth, width));
  for (auto& b : params.biases) {
    for (double& v : b) v = std::uniform_real_distribution<double>(-0.1, 0.1)(rng);
  }
  const Tensor x = random_tensor(rng, Shape{1, 1, hw, hw}, 0.0, 1.0);
  const ForwardResult fw = forward(params, x);
  const ParamGrads g = backward(params, fw.cache, fw.output);
  check_params(
      params, g, acc, [&] { return relu_signature(params, x); },
      [&] { return 0.5 * sq_norm(predict(params, x)); });
}

// Threshold indicator and pooling argmax: the discrete state of the prior.
std::vector<std::size_t> prior_signature(const Tensor& y, const PriorParams& pp) {
  std::vector<std::size_t> sig = maxpool_same_stride1(threshold_mask(y, pp.threshold),
                                                      pp.window).argmax.index;
  for (double v : y.data()) sig.push_back(v >= pp.threshold ? 1 : 0);
  return sig;
}

void check_prior(Rng& rng, Accumulator& acc, bool flip) {
  const std::size_t h = uniform_size(rng, 10, 14), w = uniform_size(rng, 10, 14);
  const Shape s{1, 1, h, w};
  PriorParams pp;
  pp.window = uniform_size(rng, 0, 1) ? 5 : 3;
  pp.threshold = 0.2;
  Tensor y = distinct_values(rng, s, 0.01, 0.99);
  for (double& v : y.data()) {
    if (std::abs(v - pp.threshold) < 1e-3) v += 2e-3;
  }
  const Tensor edges = random_binary(rng, s, 0.3);
  ShapeSet shapes;
  const std::size_t n = uniform_size(rng, 1, 4);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t ts = uniform_size(rng, 3, 6);
    Tensor t = random_binary(rng, Shape{1, 1, ts, ts}, 0.4);
    t[0] = 1.0;
    shapes.templates.push_back(std::move(t));
  }
  const auto f = [&] { return prior_value(y, edges, shapes, pp); };
  const double f0 = f();
  PriorTermResult pr = prior_term(y, edges, shapes, pp);
  if (flip) {
    for (double& v : pr.grad.data()) v = -v;
  }
  const auto base = prior_signature(y, pp);
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double keep = y[i];
    y[i] = keep + acc.eps;
    const bool hi = prior_signature(y, pp) == base;
    y[i] = keep - acc.eps;
    const bool lo = prior_signature(y, pp) == base;
    y[i] = keep;
    if (!hi || !lo) {
      ++acc.row.excluded;
      continue;
    }
    acc.compare(pr.grad[i], central_difference(y.data(), i, acc.eps, f), f0);
  }
}

void check_total_loss(Rng& rng, Accumulator& acc, const TrainConfig& cfg, bool flip) {
  constexpr std::size_t kPatch = 12;
  LossConfig lc;
  // The prior gradient is scaled up relative to training so that it is
  // visible next to the fidelity gradient in a 12x12 patch.
  lc.lambda = cfg.lambda == 0.0 ? 0.0 : 1e-3;
  lc.prior = PriorParams{5, cfg.prior_threshold};
  lc.weight_decay = cfg.weight_decay;
  lc.flip_prior_gradient = flip;
  const ShapeSet shapes = generate_shape_set(rng(), 4, 8);

  std::vector<TrainingTuple> batch;
  for (int b = 0; b < 2; ++b) {
    TrainingTuple t;
    t.x = random_tensor(rng, Shape{1, 1, kPatch, kPatch}, 0.0, 1.0);
    t.edges = random_binary(rng, Shape{1, 1, kPatch, kPatch}, 0.3);
    const Center c{static_cast<std::int32_t>(uniform_size(rng, 2, kPatch - 3)),
                   static_cast<std::int32_t>(uniform_size(rng, 2, kPatch - 3))};
    t.y = make_soft_labels(std::span<const Center>(&c, 1), kPatch, kPatch);
    batch.push_back(std::move(t));
  }
  ModelParams params = init_params(rng(), make_layers(2, 3));
  // Lift the output so a good share of it clears the prior threshold.
  params.biases.back()[0] = 0.5;

  const auto signature = [&] {
    std::vector<std::size_t> sig;
    for (const auto& t : batch) {
      for (bool v : relu_signature(params, t.x)) sig.push_back(v);
      const auto ps = prior_signature(predict(params, t.x), lc.prior);
      sig.insert(sig.end(), ps.begin(), ps.end());
    }
    return sig;
  };
  const auto objective = [&] {
    const LossBreakdown lb = loss_value(params, batch, shapes, lc);
    return lb.total + lb.weight_decay_penalty;
  };
  const LossAndGrad lg = loss_and_grad(params, batch, shapes, lc);
  if (lc.lambda != 0.0 && lg.loss.prior == 0.0) acc.row.note = "prior inactive on a seed";
  check_params(params, lg.grads, acc, signature, objective);
}

}  // namespace

double gradient_rel_error(double analytic, double numeric, double f_scale) noexcept {
  const double floor = 1e-6 * std::max(1.0, std::abs(f_scale));
  const double denom = std::max({std::abs(analytic), std::abs(numeric), floor});
  return std::abs(analytic - numeric) / denom;
}

double central_difference(std::span<double> values, std::size_t k, double eps,
                           const std::function<double()>& f) {
  const double keep = values[k];
  values[k] = keep + eps;
  const double hi = f();
  values[k] = keep - eps;
  const double lo = f();
  values[k] = keep;
  return (hi - lo) / (2.0 * eps);
}

bool GradCheckReport::passed() const noexcept {
  return std::none_of(rows.begin(), rows.end(), [](const GradCheckRow& r) {
    return r.status == GradCheckRow::Status::kFail;
  });
}

GradCheckReport grad_check(const TrainConfig& cfg, std::uint64_t seed,
                           const GradCheckOptions& options) {
  const auto t0 = std::chrono::steady_clock::now();
  const auto make = [&](const char* name) {
    Accumulator a{GradCheckRow{name, GradCheckRow::Status::kPass, 0.0, 0, 0, ""},
                  options.eps, options.tolerance};
    return a;
  };
  Accumulator conv = make("conv2d_same"), relu_acc = make("relu"),
              pool = make("maxpool_same_stride1"), had = make("hadamard"),
              net = make("network"), prior = make("prior_term"),
              total = make("total_loss");
  const bool prior_live = cfg.lambda != 0.0;
  for (std::size_t s = 0; s < options.seeds; ++s) {
    Rng rng(seed + s);
    check_conv(rng, conv);
    check_relu(rng, relu_acc);
    check_maxpool(rng, pool);
    check_hadamard(rng, had);
    check_network(rng, net);
    if (prior_live) check_prior(rng, prior, options.flip_prior_sign);
    check_total_loss(rng, total, cfg, options.flip_prior_sign);
  }
  GradCheckReport report;
  for (Accumulator* a : {&conv, &relu_acc, &pool, &had, &net, &prior, &total}) {
    report.rows.push_back(a->finish());
  }
  if (!prior_live) {
    report.rows[5].status = GradCheckRow::Status::kSkipped;
    report.rows[5].note = "lambda = 0";
  }
  report.seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return report;
}

void print_report(std::ostream& os, const GradCheckReport& report, double tolerance) {
  os << std::left << std::setw(22) << "component" << std::setw(9) << "status"
     << std::setw(14) << "max_rel_err" << std::setw(10) << "checked"
     << "excluded\n";
  for (const auto& r : report.rows) {
    const char* st = r.status == GradCheckRow::Status::kPass   ? "PASS"
                     : r.status == GradCheckRow::Status::kFail ? "FAIL"
                                                               : "SKIPPED";
    os << std::left << std::setw(22) << r.component << std::setw(9) << st
       << std::setw(14) << std::scientific << std::setprecision(3) << r.max_rel_error
       << std::defaultfloat << std::setw(10) << r.checked << r.excluded;
    if (!r.note.empty()) os << "  (" << r.note << ")";
    os << "\n";
  }
  os << "tolerance " << tolerance << ", " << std::fixed << std::setprecision(2)
     << report.seconds << " s, " << (report.passed() ? "PASS" : "FAIL") << "\n"
     << std::defaultfloat;
}

}  // namespace spcnn
