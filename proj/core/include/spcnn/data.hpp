#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "spcnn/edge.hpp"
#include "spcnn/tensor.hpp"

namespace spcnn {

struct Center {
  std::int32_t row = 0;
  std::int32_t col = 0;

  friend bool operator==(const Center&, const Center&) = default;
};

// Analytic nucleus outline: semi-axis `semi_col` lies along the column axis
// before rotation by `theta` (radians).
struct Ellipse {
  double center_row = 0.0;
  double center_col = 0.0;
  double semi_col = 0.0;
  double semi_row = 0.0;
  double theta = 0.0;

  // (u/a)^2 + (v/b)^2 in the ellipse frame; <= 1 inside.
  double level(double row, double col) const noexcept;
};

struct AnnotatedImage {
  Tensor luminance;                // 1 x 1 x H x W, values in [0, 1]
  std::vector<Center> centers;
  std::vector<Ellipse> boundaries;  // synthetic data only
};

struct TrainingTuple {
  Tensor x;      // luminance patch
  Tensor edges;  // binary edge patch
  Tensor y;      // soft label patch
  std::size_t image_index = 0;
  std::size_t top = 0;
  std::size_t left = 0;
};

constexpr std::size_t kLabelKernelSize = 7;
constexpr double kLabelSigma = 2.0;

// Binary centre map smoothed by a peak-normalised 7x7 Gaussian (sigma 2).
// Overlapping stamps combine by max, so labels stay in [0, 1].
Tensor make_soft_labels(std::span<const Center> centers, std::size_t height,
                        std::size_t width);

// Regular grid of patch x patch crops at the given stride; crops whose label
// patch is identically zero are dropped.
std::vector<TrainingTuple> extract_patches(const Tensor& luminance,
                                           const Tensor& edges,
                                           const Tensor& labels,
                                           std::size_t patch = 40,
                                           std::size_t stride = 20,
                                           std::size_t image_index = 0);

// Canny on the whole image, soft labels, then patch extraction.
std::vector<TrainingTuple> build_training_set(
    std::span<const AnnotatedImage> images, const CannyParams& canny = {},
    std::size_t patch = 40, std::size_t stride = 20);

struct SyntheticParams {
  std::uint64_t seed = 0;
  std::size_t count = 10;
  std::size_t image_size = 128;
  std::size_t nuclei_per_image = 15;
  double min_semi_axis = 5.0;
  double max_semi_axis = 9.0;
  double noise_std = 0.05;
};

// Dark elliptical nuclei with darkened rims on a textured bright background,
// plus Gaussian noise. Centres are rejection-sampled at least 1.2 x the
// largest diameter apart; if 1000 draws fail the image keeps fewer nuclei.
// Intensities are quantised to 8 bits so save/load is lossless. Image i
// uses an RNG stream derived from (seed, i).
std::vector<AnnotatedImage> gen_synthetic(const SyntheticParams& params);

// Pixels inside the ellipse with a 4-neighbour outside it.
std::vector<Center> boundary_pixels(const Ellipse& e, std::size_t height,
                                    std::size_t width);

struct DatasetManifest {
  int version = 1;
  std::size_t image_count = 0;
  std::uint64_t seed = 0;
  bool synthetic = false;
};

struct Dataset {
  DatasetManifest manifest;
  std::vector<AnnotatedImage> images;
};

// dir/manifest.json, dir/image_NNNN.pgm and dir/image_NNNN.csv ("row,col").
void save_dataset(const std::filesystem::path& dir, const Dataset& dataset);
Dataset load_dataset(const std::filesystem::path& dir);

void write_centers_csv(const std::filesystem::path& path,
                       std::span<const Center> centers);
std::vector<Center> read_centers_csv(const std::filesystem::path& path);

// First half for training, second half for testing.
struct Split {
  std::vector<AnnotatedImage> train;
  std::vector<AnnotatedImage> test;
};
Split split_half(std::span<const AnnotatedImage> images);

}  // namespace spcnn
