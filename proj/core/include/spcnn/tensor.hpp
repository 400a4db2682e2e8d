#pragma once

#include <array>
#include <cstddef>
#include <initializer_list>
#include <new>
#include <span>
#include <string>
#include <vector>

namespace spcnn {

// Extents of a rank-4 tensor in (batch, channels, height, width) order.
struct Shape {
  std::size_t n = 0;
  std::size_t c = 0;
  std::size_t h = 0;
  std::size_t w = 0;

  std::size_t size() const noexcept { return n * c * h * w; }
  std::size_t plane() const noexcept { return h * w; }
  friend bool operator==(const Shape&, const Shape&) = default;
};

std::string to_string(const Shape& s);

// Cache-line aligned storage. Vectorised kernels peel unaligned heads, so a
// fixed base alignment keeps floating-point summation order reproducible.
template <typename T>
struct AlignedAllocator {
  using value_type = T;
  static constexpr std::align_val_t kAlignment{64};

  AlignedAllocator() = default;
  template <typename U>
  AlignedAllocator(const AlignedAllocator<U>&) noexcept {}

  T* allocate(std::size_t n) {
    return static_cast<T*>(::operator new(n * sizeof(T), kAlignment));
  }
  void deallocate(T* p, std::size_t) noexcept { ::operator delete(p, kAlignment); }

  template <typename U>
  friend bool operator==(const AlignedAllocator&, const AlignedAllocator<U>&) noexcept {
    return true;
  }
};

using AlignedBuffer = std::vector<double, AlignedAllocator<double>>;

// Dense, contiguous, row-major rank-4 array of doubles.
//
// Every image-like value in the library (luminance x, edge map, soft label y,
// network output) is a Tensor with n == c == 1; batches stack along n.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, double fill = 0.0);
  Tensor(Shape shape, std::vector<double> data);

  // 1 x 1 x h x w single-channel image.
  static Tensor image(std::size_t h, std::size_t w, double fill = 0.0);

  const Shape& shape() const noexcept { return shape_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  std::size_t height() const noexcept { return shape_.h; }
  std::size_t width() const noexcept { return shape_.w; }

  std::size_t index(std::size_t n, std::size_t c, std::size_t h,
                    std::size_t w) const noexcept {
    return ((n * shape_.c + c) * shape_.h + h) * shape_.w + w;
  }

  double& operator()(std::size_t n, std::size_t c, std::size_t h,
                     std::size_t w) noexcept {
    return data_[index(n, c, h, w)];
  }
  double operator()(std::size_t n, std::size_t c, std::size_t h,
                    std::size_t w) const noexcept {
    return data_[index(n, c, h, w)];
  }

  // Pixel access for single-channel images.
  double& at(std::size_t h, std::size_t w) noexcept {
    return data_[h * shape_.w + w];
  }
  double at(std::size_t h, std::size_t w) const noexcept {
    return data_[h * shape_.w + w];
  }

  double& operator[](std::size_t i) noexcept { return data_[i]; }
  double operator[](std::size_t i) const noexcept { return data_[i]; }

  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }

  // View of one (n, c) plane.
  std::span<double> plane(std::size_t n, std::size_t c) noexcept {
    return std::span<double>(data_).subspan(index(n, c, 0, 0), shape_.plane());
  }
  std::span<const double> plane(std::size_t n, std::size_t c) const noexcept {
    return std::span<const double>(data_).subspan(index(n, c, 0, 0),
                                                  shape_.plane());
  }

  // Copy of sample n as a 1 x c x h x w tensor.
  Tensor sample(std::size_t n) const;
  // Copy of the h x w window at (top, left) of every (n, c) plane.
  Tensor crop(std::size_t top, std::size_t left, std::size_t h,
              std::size_t w) const;

  void fill(double v) noexcept;
  bool all_finite() const noexcept;

  friend bool operator==(const Tensor&, const Tensor&) = default;

 private:
  Shape shape_;
  AlignedBuffer data_;
};

// Stack equally shaped tensors along the batch axis.
Tensor stack(std::span<const Tensor> items);

// Reverse-mode accumulation slot: a value and the gradient of some scalar
// with respect to it.
struct GradPair {
  Tensor value;
  Tensor grad;

  explicit GradPair(Tensor v);
  GradPair(Tensor v, Tensor g);
};

}  // namespace spcnn
