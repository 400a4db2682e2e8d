#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "spcnn/tensor.hpp"

namespace spcnn {

// Binary nucleus-boundary templates correlated against the masked edge map.
struct ShapeSet {
  enum class Provenance { kSynthetic, kLoaded };

  std::vector<Tensor> templates;  // each 1 x 1 x s x s, values in {0, 1}
  Provenance provenance = Provenance::kSynthetic;

  std::size_t size() const noexcept { return templates.size(); }
};

// One-pixel-wide closed boundary of the ellipse with semi-axes (a, b) rotated
// by theta, centred in an s x s grid. The boundary is the set of pixels inside
// the ellipse that have a 4-neighbour outside it.
Tensor rasterize_ellipse_boundary(std::size_t s, double a, double b,
                                  double theta);

// True when every 1-pixel has exactly two 8-connected 1-neighbours and the
// 1-pixels form a single 8-connected component.
bool is_closed_curve(const Tensor& tmpl);

// n ellipse boundaries with semi-axes in [0.25 s, 0.45 s] and rotation in
// [0, pi). Draws that do not yield a closed curve are redrawn.
ShapeSet generate_shape_set(std::uint64_t seed, std::size_t n = 64,
                            std::size_t s = 20);

// Directory of binary P5 PGM files (0 or 255), read in filename order.
ShapeSet load_shape_set(const std::filesystem::path& dir);
void save_shape_set(const std::filesystem::path& dir, const ShapeSet& shapes);

// Value-preserving threshold: v where v >= threshold, else 0.
Tensor threshold_mask(const Tensor& y, double threshold);

struct PriorParams {
  std::size_t window = 11;
  double threshold = 0.2;
};

struct PriorTermResult {
  double value = 0.0;
  Tensor grad;  // d value / d y, shaped like y
};

// Shape-prior score, summed over the batch:
//
//   sum_i || (maxpool_p(threshold(y)) .* edges) (*) S_i ||^2
//
// with (*) SAME cross-correlation, and its gradient with respect to y.
PriorTermResult prior_term(const Tensor& y, const Tensor& edges,
                           const ShapeSet& shapes, const PriorParams& params = {});

// prior_term() without the gradient.
double prior_value(const Tensor& y, const Tensor& edges, const ShapeSet& shapes,
                   const PriorParams& params = {});

}  // namespace spcnn
