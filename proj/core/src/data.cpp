#include "spcnn/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <nlohmann/json.hpp>
#include <numbers>
#include <random>
#include <sstream>
#include <string>

#include "spcnn/errors.hpp"
#include "spcnn/pgm.hpp"

namespace spcnn {
namespace {

std::mt19937_64 image_rng(std::uint64_t seed, std::size_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed),
                    static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(index),
                    static_cast<std::uint32_t>(static_cast<std::uint64_t>(index) >> 32)};
  return std::mt19937_64(seq);
}

std::string image_stem(std::size_t i) {
  char name[32];
  std::snprintf(name, sizeof(name), "image_%04zu", i);
  return name;
}

}  // namespace

double Ellipse::level(double row, double col) const noexcept {
  const double dr = row - center_row;
  const double dc = col - center_col;
  const double ct = std::cos(theta), st = std::sin(theta);
  const double u = dc * ct + dr * st;
  const double v = -dc * st + dr * ct;
  return (u * u) / (semi_col * semi_col) + (v * v) / (semi_row * semi_row);
}

Tensor make_soft_labels(std::span<const Center> centers, std::size_t height,
                        std::size_t width) {
  Tensor y = Tensor::image(height, width);
  constexpr auto r = static_cast<std::ptrdiff_t>(kLabelKernelSize / 2);
  const auto H = static_cast<std::ptrdiff_t>(height);
  const auto W = static_cast<std::ptrdiff_t>(width);
  for (const Center& c : centers) {
    if (c.row < 0 || c.col < 0 || c.row >= H || c.col >= W) {
      throw InvalidArgument("make_soft_labels: centre (" + std::to_string(c.row) +
                            "," + std::to_string(c.col) +
                            ") outside the image");
    }
    for (std::ptrdiff_t di = -r; di <= r; ++di) {
      for (std::ptrdiff_t dj = -r; dj <= r; ++dj) {
        const std::ptrdiff_t i = c.row + di, j = c.col + dj;
        if (i < 0 || j < 0 || i >= H || j >= W) continue;
        const double g = std::exp(-static_cast<double>(di * di + dj * dj) /
                                  (2.0 * kLabelSigma * kLabelSigma));
        double& dst = y.at(static_cast<std::size_t>(i), static_cast<std::size_t>(j));
        dst = std::max(dst, g);
      }
    }
  }
  return y;
}

std::vector<TrainingTuple> extract_patches(const Tensor& luminance,
                                           const Tensor& edges,
                                           const Tensor& labels,
                                           std::size_t patch,
                                           std::size_t stride,
                                           std::size_t image_index) {
  if (patch == 0 || stride == 0) {
    throw InvalidArgument("extract_patches: patch and stride must be positive");
  }
  if (luminance.shape() != edges.shape() || luminance.shape() != labels.shape()) {
    throw InvalidArgument("extract_patches: luminance " +
                          to_string(luminance.shape()) + ", edges " +
                          to_string(edges.shape()) + " and labels " +
                          to_string(labels.shape()) + " must match");
  }
  const std::size_t H = luminance.height(), W = luminance.width();
  if (H < patch || W < patch) {
    throw InvalidArgument("extract_patches: image " + std::to_string(H) + "x" +
                          std::to_string(W) + " is smaller than the " +
                          std::to_string(patch) + "x" + std::to_string(patch) +
                          " patch");
  }
  std::vector<TrainingTuple> out;
  for (std::size_t top = 0; top + patch <= H; top += stride) {
    for (std::size_t left = 0; left + patch <= W; left += stride) {
      Tensor y = labels.crop(top, left, patch, patch);
      const auto d = y.data();
      if (std::all_of(d.begin(), d.end(), [](double v) { return v == 0.0; })) {
        continue;
      }
      out.push_back(TrainingTuple{luminance.crop(top, left, patch, patch),
                                  edges.crop(top, left, patch, patch),
                                  std::move(y), image_index, top, left});
    }
  }
  return out;
}

std::vector<TrainingTuple> build_training_set(
    std::span<const AnnotatedImage> images, const CannyParams& canny_params,
    std::size_t patch, std::size_t stride) {
  std::vector<TrainingTuple> out;
  for (std::size_t i = 0; i < images.size(); ++i) {
    const auto& img = images[i];
    const Tensor edges = canny(img.luminance, canny_params);
    const Tensor labels =
        make_soft_labels(img.centers, img.luminance.height(), img.luminance.width());
    auto tuples = extract_patches(img.luminance, edges, labels, patch, stride, i);
    std::move(tuples.begin(), tuples.end(), std::back_inserter(out));
  }
  return out;
}

std::vector<Center> boundary_pixels(const Ellipse& e, std::size_t height,
                                    std::size_t width) {
  const auto H = static_cast<std::ptrdiff_t>(height);
  const auto W = static_cast<std::ptrdiff_t>(width);
  const auto inside = [&](std::ptrdiff_t i, std::ptrdiff_t j) {
    return e.level(static_cast<double>(i), static_cast<double>(j)) <= 1.0;
  };
  const double reach = std::max(e.semi_col, e.semi_row) + 1.0;
  const auto r0 = std::max<std::ptrdiff_t>(0, static_cast<std::ptrdiff_t>(std::floor(e.center_row - reach)));
  const auto r1 = std::min<std::ptrdiff_t>(H - 1, static_cast<std::ptrdiff_t>(std::ceil(e.center_row + reach)));
  const auto c0 = std::max<std::ptrdiff_t>(0, static_cast<std::ptrdiff_t>(std::floor(e.center_col - reach)));
  const auto c1 = std::min<std::ptrdiff_t>(W - 1, static_cast<std::ptrdiff_t>(std::ceil(e.center_col + reach)));
  std::vector<Center> out;
  for (std::ptrdiff_t i = r0; i <= r1; ++i) {
    for (std::ptrdiff_t j = c0; j <= c1; ++j) {
      if (inside(i, j) && (!inside(i - 1, j) || !inside(i + 1, j) ||
                           !inside(i, j - 1) || !inside(i, j + 1))) {
        out.push_back({static_cast<std::int32_t>(i), static_cast<std::int32_t>(j)});
      }
    }
  }
  return out;
}

std::vector<AnnotatedImage> gen_synthetic(const SyntheticParams& p) {
  if (!(p.min_semi_axis > 0.0) || p.max_semi_axis < p.min_semi_axis) {
    throw InvalidArgument("gen_synthetic: need 0 < min_semi_axis <= max_semi_axis");
  }
  const auto margin = static_cast<std::int32_t>(std::ceil(p.max_semi_axis)) + 1;
  const auto size = static_cast<std::int32_t>(p.image_size);
  if (p.nuclei_per_image > 0 && size - 1 - margin < margin) {
    throw InvalidArgument("gen_synthetic: image size " +
                          std::to_string(p.image_size) +
                          " too small for the nucleus size range");
  }
  const double min_dist = 1.2 * 2.0 * p.max_semi_axis;
  std::vector<AnnotatedImage> images;
  images.reserve(p.count);
  for (std::size_t idx = 0; idx < p.count; ++idx) {
    auto rng = image_rng(p.seed, idx);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    AnnotatedImage img;
    img.luminance = Tensor::image(p.image_size, p.image_size);

    // Background: bright base with a few low-frequency ripples.
    const double base = 0.72 + 0.08 * unit(rng);
    struct Ripple {
      double fr, fc, phase, amp;
    };
    std::vector<Ripple> ripples;
    for (int k = 0; k < 3; ++k) {
      const double period = 20.0 + 40.0 * unit(rng);
      const double dir = std::numbers::pi * unit(rng);
      ripples.push_back({std::sin(dir) * 2.0 * std::numbers::pi / period,
                         std::cos(dir) * 2.0 * std::numbers::pi / period,
                         2.0 * std::numbers::pi * unit(rng), 0.02 + 0.02 * unit(rng)});
    }
    for (std::size_t i = 0; i < p.image_size; ++i) {
      for (std::size_t j = 0; j < p.image_size; ++j) {
        double v = base;
        for (const auto& r : ripples) {
          v += r.amp * std::sin(r.fr * static_cast<double>(i) +
                                r.fc * static_cast<double>(j) + r.phase);
        }
        img.luminance.at(i, j) = v;
      }
    }

    std::uniform_int_distribution<std::int32_t> pos(margin, std::max(margin, size - 1 - margin));
    std::uniform_real_distribution<double> semi(p.min_semi_axis, p.max_semi_axis);
    std::uniform_real_distribution<double> angle(0.0, std::numbers::pi);
    for (std::size_t k = 0; k < p.nuclei_per_image; ++k) {
      bool placed = false;
      for (int attempt = 0; attempt < 1000 && !placed; ++attempt) {
        const Center c{pos(rng), pos(rng)};
        placed = std::all_of(img.centers.begin(), img.centers.end(), [&](const Center& o) {
          return std::hypot(c.row - o.row, c.col - o.col) >= min_dist;
        });
        if (placed) img.centers.push_back(c);
      }
      if (!placed) {
        std::clog << "gen_synthetic: image " << idx << " keeps " << img.centers.size()
                  << " of " << p.nuclei_per_image
                  << " nuclei (no free position after 1000 draws)\n";
        break;
      }
    }

    for (const Center& c : img.centers) {
      Ellipse e{static_cast<double>(c.row), static_cast<double>(c.col), semi(rng),
                semi(rng), angle(rng)};
      const double interior = 0.30 + 0.15 * unit(rng);
      const double reach = std::max(e.semi_col, e.semi_row) + 1.0;
      for (auto i = static_cast<std::ptrdiff_t>(c.row - reach);
           i <= static_cast<std::ptrdiff_t>(c.row + reach); ++i) {
        for (auto j = static_cast<std::ptrdiff_t>(c.col - reach);
             j <= static_cast<std::ptrdiff_t>(c.col + reach); ++j) {
          if (i < 0 || j < 0 || i >= size || j >= size) continue;
          if (e.level(static_cast<double>(i), static_cast<double>(j)) <= 1.0) {
            img.luminance.at(static_cast<std::size_t>(i), static_cast<std::size_t>(j)) =
                interior;
          }
        }
      }
      for (const Center& b : boundary_pixels(e, p.image_size, p.image_size)) {
        img.luminance.at(static_cast<std::size_t>(b.row), static_cast<std::size_t>(b.col)) =
            std::max(0.05, interior - 0.15);
      }
      img.boundaries.push_back(e);
    }

    std::normal_distribution<double> noise(0.0, p.noise_std);
    for (double& v : img.luminance.data()) {
      v = std::round(255.0 * std::clamp(v + noise(rng), 0.0, 1.0)) / 255.0;
    }
    images.push_back(std::move(img));
  }
  return images;
}

void write_centers_csv(const std::filesystem::path& path,
                       std::span<const Center> centers) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << "row,col\n";
  for (const Center& c : centers) out << c.row << "," << c.col << "\n";
  if (!out) throw IoError("failed writing " + path.string());
}

std::vector<Center> read_centers_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw IoError(path.string() + ": empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "row,col") {
    throw IoError(path.string() + ": expected header 'row,col', got '" + line + "'");
  }
  std::vector<Center> centers;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::istringstream ss(line);
    Center c;
    char comma = 0;
    if (!(ss >> c.row >> comma >> c.col) || comma != ',') {
      throw IoError(path.string() + ":" + std::to_string(lineno) +
                    ": malformed centre '" + line + "'");
    }
    centers.push_back(c);
  }
  return centers;
}

void save_dataset(const std::filesystem::path& dir, const Dataset& dataset) {
  std::filesystem::create_directories(dir);
  for (std::size_t i = 0; i < dataset.images.size(); ++i) {
    const auto& img = dataset.images[i];
    write_pgm(dir / (image_stem(i) + ".pgm"), to_gray8(img.luminance));
    write_centers_csv(dir / (image_stem(i) + ".csv"), img.centers);
  }
  const nlohmann::json manifest = {{"version", dataset.manifest.version},
                                   {"image_count", dataset.images.size()},
                                   {"seed", dataset.manifest.seed},
                                   {"synthetic", dataset.manifest.synthetic}};
  std::ofstream out(dir / "manifest.json");
  if (!out) throw IoError("cannot write " + (dir / "manifest.json").string());
  out << manifest.dump(2) << "\n";
}

Dataset load_dataset(const std::filesystem::path& dir) {
  const auto manifest_path = dir / "manifest.json";
  std::ifstream in(manifest_path);
  if (!in) throw IoError("cannot open " + manifest_path.string());
  Dataset ds;
  try {
    const auto j = nlohmann::json::parse(in);
    ds.manifest.version = j.at("version").get<int>();
    ds.manifest.image_count = j.at("image_count").get<std::size_t>();
    ds.manifest.seed = j.at("seed").get<std::uint64_t>();
    ds.manifest.synthetic = j.at("synthetic").get<bool>();
  } catch (const nlohmann::json::exception& e) {
    throw IoError(manifest_path.string() + ": " + e.what());
  }
  for (std::size_t i = 0; i < ds.manifest.image_count; ++i) {
    AnnotatedImage img;
    img.luminance = to_tensor(read_pgm(dir / (image_stem(i) + ".pgm")));
    const auto csv = dir / (image_stem(i) + ".csv");
    img.centers = read_centers_csv(csv);
    for (const Center& c : img.centers) {
      if (c.row < 0 || c.col < 0 ||
          static_cast<std::size_t>(c.row) >= img.luminance.height() ||
          static_cast<std::size_t>(c.col) >= img.luminance.width()) {
        throw IoError(csv.string() + ": centre (" + std::to_string(c.row) + "," +
                      std::to_string(c.col) + ") outside the image");
      }
    }
    ds.images.push_back(std::move(img));
  }
  return ds;
}

Split split_half(std::span<const AnnotatedImage> images) {
  const std::size_t half = images.size() / 2;
  return Split{{images.begin(), images.begin() + half},
               {images.begin() + half, images.end()}};
}

}  // namespace spcnn
