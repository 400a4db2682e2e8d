#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "spcnn/tensor.hpp"

namespace spcnn {

struct Detection {
  std::int32_t row = 0;
  std::int32_t col = 0;
  double score = 0.0;

  friend bool operator==(const Detection&, const Detection&) = default;
};

using DetectionSet = std::vector<Detection>;

// Pixels that are the maximum of their (2r+1)^2 neighbourhood, with plateau
// ties going to the smallest flat index. Independent of any threshold.
DetectionSet local_maxima(const Tensor& y, std::size_t nms_radius = 3);

// Local maxima with score >= threshold, in row-major order.
DetectionSet detect(const Tensor& y, double threshold, std::size_t nms_radius = 3);

// Subset of `candidates` scoring at least `threshold`.
DetectionSet filter_by_score(std::span<const Detection> candidates, double threshold);

// "row,col,score" with a header line.
void write_detections_csv(const std::filesystem::path& path,
                          std::span<const Detection> detections);
DetectionSet read_detections_csv(const std::filesystem::path& path);

}  // namespace spcnn
