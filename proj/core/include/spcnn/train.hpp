#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "spcnn/config.hpp"
#include "spcnn/data.hpp"
#include "spcnn/loss.hpp"
#include "spcnn/network.hpp"
#include "spcnn/shape_prior.hpp"

namespace spcnn {

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based, continues across resumed runs
  LossBreakdown loss;     // mean over the epoch's batches
  double lr = 0.0;
  double grad_max = 0.0;  // largest |gradient| entry seen this epoch
  std::optional<double> val_f1;
};

struct TrainCallbacks {
  // Called after each epoch with the parameters reached at its end.
  std::function<void(const EpochRecord&, const ModelParams&)> on_epoch;
};

struct TrainOptions {
  std::optional<ModelParams> initial;      // resume point; fresh init otherwise
  std::size_t completed_epochs = 0;        // epochs already in `initial`
  std::span<const AnnotatedImage> validation;  // empty: no val_f1
  TrainCallbacks callbacks;
};

struct TrainResult {
  ModelParams params;
  std::vector<EpochRecord> history;
};

LossConfig loss_config(const TrainConfig& cfg);

// Learning rate in force during 0-based epoch e.
double learning_rate(const TrainConfig& cfg, std::size_t epoch);

// Mini-batch SGD with momentum over `data` for cfg.epochs epochs. Batches
// are drawn from a permutation seeded by (cfg.seed, epoch). Throws
// NumericFailure if the loss goes non-finite or the gradient max-norm
// exceeds cfg.grad_ceiling; epochs completed before the failure have
// already been reported through on_epoch.
TrainResult train(std::span<const TrainingTuple> data, const ShapeSet& shapes,
                  const TrainConfig& cfg, const TrainOptions& options = {});

// Micro-averaged F1 of detect(T = cfg.val_threshold) on full images, using
// parameters rounded to checkpoint precision.
double validation_f1(const ModelParams& params,
                     std::span<const AnnotatedImage> images,
                     const TrainConfig& cfg);

// "epoch,fidelity,prior,total,lr,val_f1"; val_f1 is empty when absent.
void write_history_csv(const std::filesystem::path& path,
                       std::span<const EpochRecord> history);
std::vector<EpochRecord> read_history_csv(const std::filesystem::path& path);

}  // namespace spcnn
