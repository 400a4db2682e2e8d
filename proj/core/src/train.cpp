#include "spcnn/train.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <random>
#include <sstream>
#include <string>

#include "spcnn/errors.hpp"
#include "spcnn/eval.hpp"

namespace spcnn {

LossConfig loss_config(const TrainConfig& cfg) {
  LossConfig lc;
  lc.lambda = cfg.lambda;
  lc.prior = cfg.prior();
  lc.weight_decay = cfg.weight_decay;
  lc.threads = cfg.threads;
  return lc;
}

double learning_rate(const TrainConfig& cfg, std::size_t epoch) {
  return cfg.lr * std::pow(cfg.lr_decay, static_cast<double>(epoch / cfg.lr_decay_every));
}

double validation_f1(const ModelParams& params,
                     std::span<const AnnotatedImage> images,
                     const TrainConfig& cfg) {
  const ModelParams rounded = round_to_float(params);
  std::vector<Tensor> outputs;
  std::vector<std::vector<Center>> gts;
  for (const auto& img : images) {
    outputs.push_back(predict(rounded, img.luminance));
    gts.push_back(img.centers);
  }
  const double grid[] = {cfg.val_threshold};
  SweepParams sp;
  sp.radius = cfg.golden_radius;
  sp.nms_radius = cfg.nms_radius;
  return pr_sweep(outputs, gts, grid, sp).front().f1;
}

TrainResult train(std::span<const TrainingTuple> data, const ShapeSet& shapes,
                  const TrainConfig& cfg, const TrainOptions& options) {
  cfg.validate();
  if (data.empty()) throw InvalidArgument("train: empty dataset");
  if (shapes.size() == 0) throw InvalidArgument("train: empty shape set");

  TrainResult result;
  result.params = options.initial ? *options.initial : init_params(cfg.seed, cfg.layers());
  validate_layers(result.params.layers);
  ModelParams& params = result.params;
  ParamGrads velocity = ParamGrads::zeros_like(params);
  const LossConfig lc = loss_config(cfg);

  std::vector<std::size_t> order(data.size());
  std::vector<TrainingTuple> batch;
  for (std::size_t e = 0; e < cfg.epochs; ++e) {
    const std::size_t epoch = options.completed_epochs + e;
    const double lr = learning_rate(cfg, epoch);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::seed_seq seq{static_cast<std::uint32_t>(cfg.seed),
                      static_cast<std::uint32_t>(cfg.seed >> 32),
                      static_cast<std::uint32_t>(epoch)};
    std::mt19937_64 rng(seq);
    std::shuffle(order.begin(), order.end(), rng);

    EpochRecord rec;
    rec.epoch = epoch + 1;
    rec.lr = lr;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t stop = std::min(order.size(), start + cfg.batch_size);
      batch.clear();
      for (std::size_t k = start; k < stop; ++k) batch.push_back(data[order[k]]);
      const std::size_t batch_index = start / cfg.batch_size;
      LossAndGrad lg = loss_and_grad(params, batch, shapes, lc, batch_index);
      const double gmax = lg.grads.max_abs();
      if (gmax > cfg.grad_ceiling) {
        std::ostringstream msg;
        msg << "epoch " << rec.epoch << " batch " << batch_index
            << ": gradient max-norm " << gmax << " exceeds ceiling "
            << cfg.grad_ceiling << " (fidelity " << lg.loss.fidelity << ", prior "
            << lg.loss.prior << ")";
        throw NumericFailure(msg.str(), batch_index);
      }
      rec.grad_max = std::max(rec.grad_max, gmax);
      for (std::size_t l = 0; l < params.depth(); ++l) {
        auto w = params.weights[l].data();
        auto v = velocity.weights[l].data();
        auto g = lg.grads.weights[l].data();
        for (std::size_t k = 0; k < w.size(); ++k) {
          v[k] = cfg.momentum * v[k] - lr * g[k];
          w[k] += v[k];
        }
        auto& b = params.biases[l];
        auto& vb = velocity.biases[l];
        const auto& gb = lg.grads.biases[l];
        for (std::size_t k = 0; k < b.size(); ++k) {
          vb[k] = cfg.momentum * vb[k] - lr * gb[k];
          b[k] += vb[k];
        }
      }
      rec.loss.fidelity += lg.loss.fidelity;
      rec.loss.prior += lg.loss.prior;
      rec.loss.weight_decay_penalty += lg.loss.weight_decay_penalty;
      ++batches;
    }
    const double nb = static_cast<double>(batches);
    rec.loss.fidelity /= nb;
    rec.loss.prior /= nb;
    rec.loss.weight_decay_penalty /= nb;
    rec.loss.total = rec.loss.fidelity - cfg.lambda * rec.loss.prior;
    if (!options.validation.empty()) {
      rec.val_f1 = validation_f1(params, options.validation, cfg);
    }
    result.history.push_back(rec);
    if (options.callbacks.on_epoch) options.callbacks.on_epoch(rec, params);
  }
  return result;
}

void write_history_csv(const std::filesystem::path& path,
                       std::span<const EpochRecord> history) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << "epoch,fidelity,prior,total,lr,val_f1\n" << std::setprecision(17);
  for (const auto& r : history) {
    out << r.epoch << "," << r.loss.fidelity << "," << r.loss.prior << ","
        << r.loss.total << "," << r.lr << ",";
    if (r.val_f1) out << *r.val_f1;
    out << "\n";
  }
  if (!out) throw IoError("failed writing " + path.string());
}

std::vector<EpochRecord> read_history_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != "epoch,fidelity,prior,total,lr,val_f1") {
    throw IoError(path.string() + ": missing history header");
  }
  std::vector<EpochRecord> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cols;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cols.push_back(cell);
    if (line.back() == ',') cols.emplace_back();
    if (cols.size() != 6) throw IoError(path.string() + ": malformed row '" + line + "'");
    try {
      EpochRecord r;
      r.epoch = std::stoul(cols[0]);
      r.loss.fidelity = std::stod(cols[1]);
      r.loss.prior = std::stod(cols[2]);
      r.loss.total = std::stod(cols[3]);
      r.lr = std::stod(cols[4]);
      if (!cols[5].empty()) r.val_f1 = std::stod(cols[5]);
      out.push_back(r);
    } catch (const std::exception&) {
      throw IoError(path.string() + ": malformed row '" + line + "'");
    }
  }
  return out;
}

}  // namespace spcnn
