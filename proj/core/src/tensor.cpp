#include "spcnn/tensor.hpp"

#include <algorithm>
#include <cmath>

#include "spcnn/errors.hpp"

namespace spcnn {

std::string to_string(const Shape& s) {
  return "[" + std::to_string(s.n) + "x" + std::to_string(s.c) + "x" +
         std::to_string(s.h) + "x" + std::to_string(s.w) + "]";
}

Tensor::Tensor(Shape shape, double fill)
    : shape_(shape), data_(shape.size(), fill) {}

Tensor::Tensor(Shape shape, std::vector<double> data)
    : shape_(shape), data_(data.begin(), data.end()) {
  if (data_.size() != shape_.size()) {
    throw InvalidArgument("tensor data length " + std::to_string(data_.size()) +
                          " does not match shape " + to_string(shape_));
  }
}

Tensor Tensor::image(std::size_t h, std::size_t w, double fill) {
  return Tensor(Shape{1, 1, h, w}, fill);
}

Tensor Tensor::sample(std::size_t n) const {
  if (n >= shape_.n) {
    throw InvalidArgument("sample index " + std::to_string(n) +
                          " out of range for batch " + std::to_string(shape_.n));
  }
  const std::size_t stride = shape_.c * shape_.plane();
  Shape s = shape_;
  s.n = 1;
  Tensor out(s);
  std::copy(data_.begin() + static_cast<std::ptrdiff_t>(n * stride),
            data_.begin() + static_cast<std::ptrdiff_t>((n + 1) * stride), out.data_.begin());
  return out;
}

Tensor Tensor::crop(std::size_t top, std::size_t left, std::size_t h,
                    std::size_t w) const {
  if (top + h > shape_.h || left + w > shape_.w) {
    throw InvalidArgument("crop window exceeds tensor " + to_string(shape_));
  }
  Tensor out(Shape{shape_.n, shape_.c, h, w});
  for (std::size_t n = 0; n < shape_.n; ++n) {
    for (std::size_t c = 0; c < shape_.c; ++c) {
      for (std::size_t i = 0; i < h; ++i) {
        const double* src = &data_[index(n, c, top + i, left)];
        std::copy(src, src + w, &out(n, c, i, 0));
      }
    }
  }
  return out;
}

void Tensor::fill(double v) noexcept { std::fill(data_.begin(), data_.end(), v); }

bool Tensor::all_finite() const noexcept {
  return std::all_of(data_.begin(), data_.end(),
                     [](double v) { return std::isfinite(v); });
}

Tensor stack(std::span<const Tensor> items) {
  if (items.empty()) throw InvalidArgument("stack: no tensors given");
  Shape s = items.front().shape();
  std::vector<double> data;
  data.reserve(s.size() * items.size());
  for (const auto& t : items) {
    if (t.shape() != s) {
      throw InvalidArgument("stack: shape " + to_string(t.shape()) +
                            " differs from " + to_string(s));
    }
    data.insert(data.end(), t.data().begin(), t.data().end());
  }
  Shape out = s;
  out.n = s.n * items.size();
  return Tensor(out, std::move(data));
}

GradPair::GradPair(Tensor v) : value(std::move(v)), grad(value.shape()) {}

GradPair::GradPair(Tensor v, Tensor g) : value(std::move(v)), grad(std::move(g)) {
  if (value.shape() != grad.shape()) {
    throw InvalidArgument("GradPair: value " + to_string(value.shape()) +
                          " and grad " + to_string(grad.shape()) + " differ");
  }
}

}  // namespace spcnn
