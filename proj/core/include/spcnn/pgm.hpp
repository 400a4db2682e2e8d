#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "spcnn/tensor.hpp"

namespace spcnn {

// 8-bit greyscale raster as stored in a binary (P5) PGM file.
struct Gray8 {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<std::uint8_t> pixels;

  friend bool operator==(const Gray8&, const Gray8&) = default;
};

Gray8 read_pgm(const std::filesystem::path& path);
void write_pgm(const std::filesystem::path& path, const Gray8& img);

// v / 255 as a 1 x 1 x H x W tensor.
Tensor to_tensor(const Gray8& img);
// round(255 v), clamped to [0, 255].
Gray8 to_gray8(const Tensor& image);

}  // namespace spcnn
