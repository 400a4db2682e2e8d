#include "spcnn/tensor_ops.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <string>

#include "spcnn/errors.hpp"

namespace spcnn {
namespace {

using RowMatrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatrixMap = Eigen::Map<RowMatrix>;
using ConstMatrixMap = Eigen::Map<const RowMatrix>;

void check_kernel(const Tensor& input, const Tensor& kernel) {
  const Shape& ks = kernel.shape();
  if (ks.h == 0 || ks.w == 0) {
    throw InvalidArgument("conv2d_same: kernel spatial extent is zero (kernel " +
                          to_string(ks) + ")");
  }
  if (input.shape().c != ks.c) {
    throw InvalidArgument("conv2d_same: input channels " +
                          std::to_string(input.shape().c) +
                          " != kernel input channels " + std::to_string(ks.c));
  }
}

// Column buffer of one sample: row (c, ki, kj), column (i, j).
void im2col(const Tensor& input, std::size_t n, std::size_t kh, std::size_t kw,
            AlignedBuffer& col) {
  const Shape& s = input.shape();
  const std::ptrdiff_t ph = static_cast<std::ptrdiff_t>(same_pad_before(kh));
  const std::ptrdiff_t pw = static_cast<std::ptrdiff_t>(same_pad_before(kw));
  const std::ptrdiff_t H = static_cast<std::ptrdiff_t>(s.h);
  const std::ptrdiff_t W = static_cast<std::ptrdiff_t>(s.w);
  col.assign(s.c * kh * kw * s.plane(), 0.0);
  double* dst = col.data();
  for (std::size_t c = 0; c < s.c; ++c) {
    const double* src = input.plane(n, c).data();
    for (std::size_t ki = 0; ki < kh; ++ki) {
      for (std::size_t kj = 0; kj < kw; ++kj) {
        const std::ptrdiff_t di = static_cast<std::ptrdiff_t>(ki) - ph;
        const std::ptrdiff_t dj = static_cast<std::ptrdiff_t>(kj) - pw;
        const std::ptrdiff_t j0 = std::max<std::ptrdiff_t>(0, -dj);
        const std::ptrdiff_t j1 = std::min<std::ptrdiff_t>(W, W - dj);
        for (std::ptrdiff_t i = 0; i < H; ++i) {
          const std::ptrdiff_t si = i + di;
          if (si >= 0 && si < H && j0 < j1) {
            std::copy(src + si * W + j0 + dj, src + si * W + j1 + dj,
                      dst + i * W + j0);
          }
        }
        dst += s.plane();
      }
    }
  }
}

// Adjoint of im2col: accumulate a column buffer back onto sample n.
void col2im(const AlignedBuffer& col, std::size_t kh, std::size_t kw,
            std::size_t n, Tensor& out) {
  const Shape& s = out.shape();
  const std::ptrdiff_t ph = static_cast<std::ptrdiff_t>(same_pad_before(kh));
  const std::ptrdiff_t pw = static_cast<std::ptrdiff_t>(same_pad_before(kw));
  const std::ptrdiff_t H = static_cast<std::ptrdiff_t>(s.h);
  const std::ptrdiff_t W = static_cast<std::ptrdiff_t>(s.w);
  const double* src = col.data();
  for (std::size_t c = 0; c < s.c; ++c) {
    double* dst = out.plane(n, c).data();
    for (std::size_t ki = 0; ki < kh; ++ki) {
      for (std::size_t kj = 0; kj < kw; ++kj) {
        const std::ptrdiff_t di = static_cast<std::ptrdiff_t>(ki) - ph;
        const std::ptrdiff_t dj = static_cast<std::ptrdiff_t>(kj) - pw;
        const std::ptrdiff_t j0 = std::max<std::ptrdiff_t>(0, -dj);
        const std::ptrdiff_t j1 = std::min<std::ptrdiff_t>(W, W - dj);
        for (std::ptrdiff_t i = 0; i < H; ++i) {
          const std::ptrdiff_t si = i + di;
          if (si < 0 || si >= H) continue;
          for (std::ptrdiff_t j = j0; j < j1; ++j) {
            dst[si * W + j + dj] += src[i * W + j];
          }
        }
        src += s.plane();
      }
    }
  }
}

}  // namespace

Tensor conv2d_same(const Tensor& input, const Tensor& kernel,
                   std::span<const double> bias) {
  check_kernel(input, kernel);
  const Shape& s = input.shape();
  const Shape& ks = kernel.shape();
  if (bias.size() != ks.n) {
    throw InvalidArgument("conv2d_same: bias length " +
                          std::to_string(bias.size()) +
                          " != kernel output channels " + std::to_string(ks.n));
  }
  const std::size_t K = ks.c * ks.h * ks.w;
  const std::size_t HW = s.plane();
  Tensor out(Shape{s.n, ks.n, s.h, s.w});
  if (HW == 0) return out;
  ConstMatrixMap weights(kernel.data().data(), ks.n, K);
  AlignedBuffer col;
  for (std::size_t n = 0; n < s.n; ++n) {
    im2col(input, n, ks.h, ks.w, col);
    ConstMatrixMap cols(col.data(), K, HW);
    MatrixMap dst(out.plane(n, 0).data(), ks.n, HW);
    dst.noalias() = weights * cols;
    for (std::size_t o = 0; o < ks.n; ++o) dst.row(o).array() += bias[o];
  }
  return out;
}

Conv2dGrads conv2d_same_backward(const Tensor& input, const Tensor& kernel,
                                 const Tensor& upstream) {
  check_kernel(input, kernel);
  const Shape& s = input.shape();
  const Shape& ks = kernel.shape();
  const Shape expected{s.n, ks.n, s.h, s.w};
  if (upstream.shape() != expected) {
    throw InvalidArgument("conv2d_same_backward: upstream shape " +
                          to_string(upstream.shape()) + " != output shape " +
                          to_string(expected));
  }
  const std::size_t K = ks.c * ks.h * ks.w;
  const std::size_t HW = s.plane();
  Conv2dGrads g{Tensor(s), Tensor(ks), std::vector<double>(ks.n, 0.0)};
  if (HW == 0) return g;

  ConstMatrixMap weights(kernel.data().data(), ks.n, K);
  MatrixMap gw(g.kernel.data().data(), ks.n, K);
  AlignedBuffer col;
  AlignedBuffer gcol_buf(K * HW);
  for (std::size_t n = 0; n < s.n; ++n) {
    ConstMatrixMap up(upstream.plane(n, 0).data(), ks.n, HW);
    im2col(input, n, ks.h, ks.w, col);
    ConstMatrixMap cols(col.data(), K, HW);
    gw.noalias() += up * cols.transpose();
    for (std::size_t o = 0; o < ks.n; ++o) g.bias[o] += up.row(o).sum();
    MatrixMap gc(gcol_buf.data(), K, HW);
    gc.noalias() = weights.transpose() * up;
    col2im(gcol_buf, ks.h, ks.w, n, g.input);
  }
  return g;
}

Tensor relu(const Tensor& input) {
  Tensor out(input.shape());
  auto src = input.data();
  auto dst = out.data();
  for (std::size_t i = 0; i < src.size(); ++i) dst[i] = src[i] > 0.0 ? src[i] : 0.0;
  return out;
}

Tensor relu_backward(const Tensor& input, const Tensor& upstream) {
  if (input.shape() != upstream.shape()) {
    throw InvalidArgument("relu_backward: input " + to_string(input.shape()) +
                          " and upstream " + to_string(upstream.shape()) +
                          " differ");
  }
  Tensor out(input.shape());
  auto x = input.data();
  auto up = upstream.data();
  auto dst = out.data();
  for (std::size_t i = 0; i < x.size(); ++i) dst[i] = x[i] > 0.0 ? up[i] : 0.0;
  return out;
}

PoolResult maxpool_same_stride1(const Tensor& input, std::size_t window) {
  if (window == 0 || window % 2 == 0) {
    throw InvalidArgument("maxpool_same_stride1: window " +
                          std::to_string(window) + " must be odd");
  }
  const Shape& s = input.shape();
  const std::size_t r = window / 2;
  PoolResult res{Tensor(s), ArgmaxMap{s, std::vector<std::size_t>(s.size())}};
  auto x = input.data();
  auto y = res.output.data();
  for (std::size_t n = 0; n < s.n; ++n) {
    for (std::size_t c = 0; c < s.c; ++c) {
      const std::size_t base = input.index(n, c, 0, 0);
      for (std::size_t i = 0; i < s.h; ++i) {
        const std::size_t i0 = i >= r ? i - r : 0;
        const std::size_t i1 = std::min(s.h, i + r + 1);
        for (std::size_t j = 0; j < s.w; ++j) {
          const std::size_t j0 = j >= r ? j - r : 0;
          const std::size_t j1 = std::min(s.w, j + r + 1);
          // Row-major scan with strict '>' keeps the smallest flat index on ties.
          std::size_t best = base + i0 * s.w + j0;
          for (std::size_t a = i0; a < i1; ++a) {
            for (std::size_t b = j0; b < j1; ++b) {
              const std::size_t k = base + a * s.w + b;
              if (x[k] > x[best]) best = k;
            }
          }
          const std::size_t o = base + i * s.w + j;
          y[o] = x[best];
          res.argmax.index[o] = best;
        }
      }
    }
  }
  return res;
}

Tensor maxpool_backward(const ArgmaxMap& argmax, const Tensor& upstream) {
  if (upstream.size() != argmax.index.size()) {
    throw InvalidArgument("maxpool_backward: upstream " +
                          to_string(upstream.shape()) +
                          " does not match the argmax map");
  }
  Tensor grad(argmax.input_shape);
  auto g = grad.data();
  auto up = upstream.data();
  for (std::size_t o = 0; o < up.size(); ++o) g[argmax.index[o]] += up[o];
  return grad;
}

Tensor hadamard(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) {
    throw InvalidArgument("hadamard: shapes " + to_string(a.shape()) + " and " +
                          to_string(b.shape()) + " differ");
  }
  Tensor out(a.shape());
  auto x = a.data();
  auto y = b.data();
  auto dst = out.data();
  for (std::size_t i = 0; i < x.size(); ++i) dst[i] = x[i] * y[i];
  return out;
}

double sq_norm(const Tensor& a) {
  double s = 0.0;
  for (double v : a.data()) s += v * v;
  return s;
}

}  // namespace spcnn
