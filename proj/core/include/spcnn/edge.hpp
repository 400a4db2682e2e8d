#pragma once

#include <cstdint>
#include <vector>

#include "spcnn/tensor.hpp"

namespace spcnn {

struct CannyParams {
  double sigma = 1.4;
  double low = 0.1;
  double high = 0.2;
  // When true, low/high are fractions of the largest gradient magnitude in
  // the image; otherwise they are absolute magnitudes.
  bool relative_thresholds = true;
};

// Gradient direction bins, in degrees of atan2(d/drow, d/dcol).
enum class EdgeDirection : std::uint8_t { k0 = 0, k45 = 1, k90 = 2, k135 = 3 };

// Every intermediate image of the detector, all 1 x 1 x H x W.
struct CannyStages {
  Tensor smoothed;
  Tensor grad_col;
  Tensor grad_row;
  Tensor magnitude;
  std::vector<EdgeDirection> direction;
  Tensor suppressed;  // magnitude where NMS kept the pixel, else 0
  double low_threshold = 0.0;
  double high_threshold = 0.0;
  Tensor edges;       // binary {0, 1}
};

// Gaussian smoothing (radius ceil(3 sigma), replicated border), Sobel
// gradients, 4-direction non-maximum suppression and 8-connected hysteresis.
CannyStages canny_stages(const Tensor& image, const CannyParams& params = {});

// Binary edge map of a single-channel image.
Tensor canny(const Tensor& image, const CannyParams& params = {});

// Pixel offsets (drow, dcol) of the two neighbours compared by NMS.
struct NeighbourOffsets {
  int drow0, dcol0, drow1, dcol1;
};
NeighbourOffsets nms_neighbours(EdgeDirection d) noexcept;

}  // namespace spcnn
