#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <nlohmann/json.hpp>

#include "spcnn/edge.hpp"
#include "spcnn/network.hpp"
#include "spcnn/shape_prior.hpp"

namespace spcnn {

// Training hyper-parameters. JSON keys are the member names.
struct TrainConfig {
  // Objective.
  double lambda = 5e-7;
  std::size_t pool_window = 11;
  double prior_threshold = 0.2;
  double weight_decay = 1e-5;

  // Optimiser: SGD with momentum, lr multiplied by lr_decay every
  // lr_decay_every epochs.
  double lr = 1e-6;
  double lr_decay = 0.75;
  std::size_t lr_decay_every = 5;
  double momentum = 0.9;
  std::size_t batch_size = 32;
  std::size_t epochs = 50;
  double grad_ceiling = 1e5;
  std::uint64_t seed = 0;

  // Network topology.
  std::size_t depth = 6;
  std::size_t width = 64;

  // Shape set (ignored when a template directory is supplied).
  std::size_t shape_count = 64;
  std::size_t shape_size = 20;
  std::uint64_t shape_seed = 0;

  // Data preparation.
  std::size_t patch = 40;
  std::size_t stride = 20;
  CannyParams canny;

  // Validation / detection.
  double val_threshold = 0.3;
  std::size_t nms_radius = 3;
  double golden_radius = 6.0;

  std::size_t threads = 1;

  PriorParams prior() const { return {pool_window, prior_threshold}; }
  std::vector<LayerSpec> layers() const { return make_layers(depth, width); }

  // Throws InvalidArgument on violated invariants (lambda >= 0, odd
  // pool_window, prior_threshold in [0, 1], ...).
  void validate() const;
};

nlohmann::json to_json(const TrainConfig& cfg);
// Keys absent from `j` keep `base` values; unknown keys are rejected.
TrainConfig config_from_json(const nlohmann::json& j, TrainConfig base = {});
TrainConfig load_config(const std::filesystem::path& path, TrainConfig base = {});

}  // namespace spcnn
