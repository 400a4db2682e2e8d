#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <utility>
#include <vector>

#include "spcnn/data.hpp"
#include "spcnn/detect.hpp"
#include "spcnn/tensor.hpp"

namespace spcnn {

constexpr double kGoldenRadius = 6.0;

struct MatchResult {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
  // (detection index, ground-truth index) of every accepted pair.
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
};

// Greedy one-to-one matching: candidate pairs within `radius` (inclusive)
// are accepted in order of increasing Euclidean distance.
MatchResult match_golden(std::span<const Detection> detections,
                         std::span<const Center> ground_truth,
                         double radius = kGoldenRadius);

struct EvalReport {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double threshold = 0.0;
};

// Harmonic mean, 0 when precision + recall == 0.
double f1_score(double precision, double recall) noexcept;

EvalReport make_report(std::size_t tp, std::size_t fp, std::size_t fn,
                       double threshold = 0.0) noexcept;

EvalReport evaluate(std::span<const Detection> detections,
                    std::span<const Center> ground_truth,
                    double radius = kGoldenRadius, double threshold = 0.0);

enum class Averaging { kMicro, kMacro };

struct PrPoint {
  double threshold = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
  std::size_t detections = 0;
};

using PrCurve = std::vector<PrPoint>;

struct SweepParams {
  double radius = kGoldenRadius;
  std::size_t nms_radius = 3;
  Averaging averaging = Averaging::kMicro;
};

// P/R/F1 over a test set at every threshold of an ascending grid. Micro
// averaging pools TP/FP/FN over images; macro averages per-image P and R.
PrCurve pr_sweep(std::span<const Tensor> outputs,
                 std::span<const std::vector<Center>> ground_truth,
                 std::span<const double> thresholds, const SweepParams& params = {});

// Row with the largest F1 (first on ties).
PrPoint best_f1(const PrCurve& curve);

// "threshold,precision,recall,f1".
void write_pr_csv(const std::filesystem::path& path, const PrCurve& curve);
// Whitespace-separated columns plus a gnuplot script plotting recall vs
// precision from it.
void write_pr_gnuplot(const std::filesystem::path& data_path,
                      const std::filesystem::path& script_path, const PrCurve& curve);

// Evenly spaced thresholds from `first` to `last` inclusive.
std::vector<double> threshold_grid(double first, double last, double step);

}  // namespace spcnn
