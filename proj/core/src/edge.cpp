#include "spcnn/edge.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "spcnn/errors.hpp"

namespace spcnn {
namespace {

std::size_t clamp_index(std::ptrdiff_t i, std::size_t n) {
  if (i < 0) return 0;
  if (static_cast<std::size_t>(i) >= n) return n - 1;
  return static_cast<std::size_t>(i);
}

Tensor gaussian_smooth(const Tensor& img, double sigma) {
  const auto radius = static_cast<std::ptrdiff_t>(std::ceil(3.0 * sigma));
  std::vector<double> k(2 * radius + 1);
  double sum = 0.0;
  for (std::ptrdiff_t i = -radius; i <= radius; ++i) {
    k[i + radius] = std::exp(-static_cast<double>(i * i) / (2.0 * sigma * sigma));
    sum += k[i + radius];
  }
  for (double& v : k) v /= sum;

  const std::size_t H = img.height(), W = img.width();
  Tensor tmp = Tensor::image(H, W);
  for (std::size_t i = 0; i < H; ++i) {
    for (std::size_t j = 0; j < W; ++j) {
      double acc = 0.0;
      for (std::ptrdiff_t d = -radius; d <= radius; ++d) {
        acc += k[d + radius] *
               img.at(i, clamp_index(static_cast<std::ptrdiff_t>(j) + d, W));
      }
      tmp.at(i, j) = acc;
    }
  }
  Tensor out = Tensor::image(H, W);
  for (std::size_t i = 0; i < H; ++i) {
    for (std::size_t j = 0; j < W; ++j) {
      double acc = 0.0;
      for (std::ptrdiff_t d = -radius; d <= radius; ++d) {
        acc += k[d + radius] *
               tmp.at(clamp_index(static_cast<std::ptrdiff_t>(i) + d, H), j);
      }
      out.at(i, j) = acc;
    }
  }
  return out;
}

EdgeDirection quantize(double gc, double gr) {
  double deg = std::atan2(gr, gc) * 180.0 / std::numbers::pi;
  if (deg < 0.0) deg += 180.0;
  if (deg < 22.5 || deg >= 157.5) return EdgeDirection::k0;
  if (deg < 67.5) return EdgeDirection::k45;
  if (deg < 112.5) return EdgeDirection::k90;
  return EdgeDirection::k135;
}

}  // namespace

NeighbourOffsets nms_neighbours(EdgeDirection d) noexcept {
  // First neighbour always precedes the pixel in row-major order.
  switch (d) {
    case EdgeDirection::k0:
      return {0, -1, 0, 1};
    case EdgeDirection::k45:
      return {-1, -1, 1, 1};
    case EdgeDirection::k90:
      return {-1, 0, 1, 0};
    case EdgeDirection::k135:
      return {-1, 1, 1, -1};
  }
  return {0, 0, 0, 0};
}

CannyStages canny_stages(const Tensor& image, const CannyParams& params) {
  if (image.shape().n != 1 || image.shape().c != 1) {
    throw InvalidArgument("canny: expected a single-channel image, got " +
                          to_string(image.shape()));
  }
  if (!(params.sigma > 0.0)) {
    throw InvalidArgument("canny: sigma must be positive");
  }
  if (!(params.low > 0.0) || !(params.low < params.high)) {
    throw InvalidArgument("canny: thresholds must satisfy 0 < low < high (low=" +
                          std::to_string(params.low) +
                          ", high=" + std::to_string(params.high) + ")");
  }
  const std::size_t H = image.height(), W = image.width();
  CannyStages st;
  st.smoothed = gaussian_smooth(image, params.sigma);
  st.grad_col = Tensor::image(H, W);
  st.grad_row = Tensor::image(H, W);
  st.magnitude = Tensor::image(H, W);
  st.direction.assign(H * W, EdgeDirection::k0);

  const auto px = [&](std::ptrdiff_t i, std::ptrdiff_t j) {
    return st.smoothed.at(clamp_index(i, H), clamp_index(j, W));
  };
  double max_mag = 0.0;
  for (std::size_t ui = 0; ui < H; ++ui) {
    for (std::size_t uj = 0; uj < W; ++uj) {
      const auto i = static_cast<std::ptrdiff_t>(ui);
      const auto j = static_cast<std::ptrdiff_t>(uj);
      const double gc = (px(i - 1, j + 1) + 2.0 * px(i, j + 1) + px(i + 1, j + 1)) -
                        (px(i - 1, j - 1) + 2.0 * px(i, j - 1) + px(i + 1, j - 1));
      const double gr = (px(i + 1, j - 1) + 2.0 * px(i + 1, j) + px(i + 1, j + 1)) -
                        (px(i - 1, j - 1) + 2.0 * px(i - 1, j) + px(i - 1, j + 1));
      const double m = std::hypot(gc, gr);
      st.grad_col.at(ui, uj) = gc;
      st.grad_row.at(ui, uj) = gr;
      st.magnitude.at(ui, uj) = m;
      st.direction[ui * W + uj] = quantize(gc, gr);
      max_mag = std::max(max_mag, m);
    }
  }

  st.suppressed = Tensor::image(H, W);
  const auto mag_at = [&](std::ptrdiff_t i, std::ptrdiff_t j) {
    if (i < 0 || j < 0 || i >= static_cast<std::ptrdiff_t>(H) ||
        j >= static_cast<std::ptrdiff_t>(W)) {
      return 0.0;
    }
    return st.magnitude.at(static_cast<std::size_t>(i), static_cast<std::size_t>(j));
  };
  for (std::size_t ui = 0; ui < H; ++ui) {
    for (std::size_t uj = 0; uj < W; ++uj) {
      const double m = st.magnitude.at(ui, uj);
      if (m <= 0.0) continue;
      const auto nb = nms_neighbours(st.direction[ui * W + uj]);
      const auto i = static_cast<std::ptrdiff_t>(ui);
      const auto j = static_cast<std::ptrdiff_t>(uj);
      // Strict against the earlier neighbour so plateaus keep one pixel.
      if (m > mag_at(i + nb.drow0, j + nb.dcol0) &&
          m >= mag_at(i + nb.drow1, j + nb.dcol1)) {
        st.suppressed.at(ui, uj) = m;
      }
    }
  }

  const double scale = params.relative_thresholds ? max_mag : 1.0;
  st.low_threshold = params.low * scale;
  st.high_threshold = params.high * scale;
  st.edges = Tensor::image(H, W);
  std::vector<std::size_t> stack;
  for (std::size_t k = 0; k < H * W; ++k) {
    const double m = st.suppressed[k];
    if (m > 0.0 && m >= st.high_threshold) {
      st.edges[k] = 1.0;
      stack.push_back(k);
    }
  }
  while (!stack.empty()) {
    const std::size_t k = stack.back();
    stack.pop_back();
    const auto i = static_cast<std::ptrdiff_t>(k / W);
    const auto j = static_cast<std::ptrdiff_t>(k % W);
    for (std::ptrdiff_t di = -1; di <= 1; ++di) {
      for (std::ptrdiff_t dj = -1; dj <= 1; ++dj) {
        const std::ptrdiff_t a = i + di, b = j + dj;
        if (a < 0 || b < 0 || a >= static_cast<std::ptrdiff_t>(H) ||
            b >= static_cast<std::ptrdiff_t>(W)) {
          continue;
        }
        const std::size_t q = static_cast<std::size_t>(a) * W + static_cast<std::size_t>(b);
        const double m = st.suppressed[q];
        if (st.edges[q] == 0.0 && m > 0.0 && m >= st.low_threshold) {
          st.edges[q] = 1.0;
          stack.push_back(q);
        }
      }
    }
  }
  return st;
}

Tensor canny(const Tensor& image, const CannyParams& params) {
  return canny_stages(image, params).edges;
}

}  // namespace spcnn
