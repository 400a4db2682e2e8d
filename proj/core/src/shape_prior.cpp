#include "spcnn/shape_prior.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <random>
#include <string>

#include "spcnn/errors.hpp"
#include "spcnn/pgm.hpp"
#include "spcnn/tensor_ops.hpp"

namespace spcnn {
namespace {

struct Tap {
  std::ptrdiff_t drow;  // template row - pad
  std::ptrdiff_t dcol;
  double weight;
};

// Non-zero template entries as offsets relative to the SAME anchor.
std::vector<Tap> template_taps(const Tensor& t) {
  const auto ph = static_cast<std::ptrdiff_t>(same_pad_before(t.height()));
  const auto pw = static_cast<std::ptrdiff_t>(same_pad_before(t.width()));
  std::vector<Tap> taps;
  for (std::size_t a = 0; a < t.height(); ++a) {
    for (std::size_t b = 0; b < t.width(); ++b) {
      const double v = t.at(a, b);
      if (v != 0.0) {
        taps.push_back({static_cast<std::ptrdiff_t>(a) - ph,
                        static_cast<std::ptrdiff_t>(b) - pw, v});
      }
    }
  }
  return taps;
}

void check_inputs(const Tensor& y, const Tensor& edges, const ShapeSet& shapes,
                  const PriorParams& params) {
  if (y.shape() != edges.shape()) {
    throw InvalidArgument("prior_term: output " + to_string(y.shape()) +
                          " and edge map " + to_string(edges.shape()) +
                          " differ");
  }
  if (y.shape().c != 1) {
    throw InvalidArgument("prior_term: expected single-channel maps, got " +
                          to_string(y.shape()));
  }
  if (params.window == 0 || params.window % 2 == 0) {
    throw InvalidArgument("prior_term: pooling window " +
                          std::to_string(params.window) + " must be odd");
  }
  for (const auto& t : shapes.templates) {
    if (t.shape().n != 1 || t.shape().c != 1 || t.empty()) {
      throw InvalidArgument("prior_term: template shape " + to_string(t.shape()) +
                            " is not a single 2-D plane");
    }
  }
}

PriorTermResult evaluate(const Tensor& y, const Tensor& edges,
                         const ShapeSet& shapes, const PriorParams& params,
                         bool with_grad) {
  check_inputs(y, edges, shapes, params);
  const Shape& s = y.shape();
  const auto H = static_cast<std::ptrdiff_t>(s.h);
  const auto W = static_cast<std::ptrdiff_t>(s.w);

  std::vector<std::vector<Tap>> taps;
  taps.reserve(shapes.size());
  for (const auto& t : shapes.templates) taps.push_back(template_taps(t));

  const Tensor thresholded = threshold_mask(y, params.threshold);
  const PoolResult pooled = maxpool_same_stride1(thresholded, params.window);
  const Tensor masked = hadamard(pooled.output, edges);

  PriorTermResult res;
  Tensor grad_pooled(s);
  std::vector<double> z(s.plane());
  std::vector<std::size_t> active;
  for (std::size_t n = 0; n < s.n; ++n) {
    const auto m = masked.plane(n, 0);
    const auto e = edges.plane(n, 0);
    active.clear();
    for (std::size_t k = 0; k < m.size(); ++k) {
      if (m[k] != 0.0) active.push_back(k);
    }
    if (active.empty()) continue;
    auto gp = grad_pooled.plane(n, 0);
    for (const auto& tt : taps) {
      // z[i, j] = sum_taps m[i + drow, j + dcol] * w, scattered from the
      // non-zero entries of m.
      std::fill(z.begin(), z.end(), 0.0);
      for (std::size_t k : active) {
        const auto u = static_cast<std::ptrdiff_t>(k) / W;
        const auto v = static_cast<std::ptrdiff_t>(k) % W;
        for (const Tap& tap : tt) {
          const std::ptrdiff_t i = u - tap.drow;
          const std::ptrdiff_t j = v - tap.dcol;
          if (i >= 0 && i < H && j >= 0 && j < W) {
            z[static_cast<std::size_t>(i * W + j)] += m[k] * tap.weight;
          }
        }
      }
      for (double v : z) res.value += v * v;
      if (!with_grad) continue;
      // d/dm[u, v] = sum_taps 2 z[u - drow, v - dcol] w; only needed where
      // the edge mask is non-zero.
      for (std::size_t k = 0; k < e.size(); ++k) {
        if (e[k] == 0.0) continue;
        const auto u = static_cast<std::ptrdiff_t>(k) / W;
        const auto v = static_cast<std::ptrdiff_t>(k) % W;
        double acc = 0.0;
        for (const Tap& tap : tt) {
          const std::ptrdiff_t i = u - tap.drow;
          const std::ptrdiff_t j = v - tap.dcol;
          if (i >= 0 && i < H && j >= 0 && j < W) {
            acc += z[static_cast<std::size_t>(i * W + j)] * tap.weight;
          }
        }
        gp[k] += 2.0 * acc * e[k];
      }
    }
  }
  if (!with_grad) return res;

  res.grad = maxpool_backward(pooled.argmax, grad_pooled);
  auto g = res.grad.data();
  auto yv = y.data();
  for (std::size_t k = 0; k < g.size(); ++k) {
    if (!(yv[k] >= params.threshold)) g[k] = 0.0;
  }
  return res;
}

}  // namespace

Tensor rasterize_ellipse_boundary(std::size_t s, double a, double b,
                                  double theta) {
  if (s == 0) throw InvalidArgument("rasterize_ellipse_boundary: empty grid");
  if (!(a > 0.0) || !(b > 0.0)) {
    throw InvalidArgument("rasterize_ellipse_boundary: axes must be positive");
  }
  const double centre = (static_cast<double>(s) - 1.0) / 2.0;
  const double ct = std::cos(theta), st = std::sin(theta);
  std::vector<char> inside(s * s, 0);
  for (std::size_t i = 0; i < s; ++i) {
    for (std::size_t j = 0; j < s; ++j) {
      const double dr = static_cast<double>(i) - centre;
      const double dc = static_cast<double>(j) - centre;
      const double u = dc * ct + dr * st;
      const double v = -dc * st + dr * ct;
      inside[i * s + j] = (u * u) / (a * a) + (v * v) / (b * b) <= 1.0;
    }
  }
  Tensor t = Tensor::image(s, s);
  const auto in = [&](std::ptrdiff_t i, std::ptrdiff_t j) {
    if (i < 0 || j < 0 || i >= static_cast<std::ptrdiff_t>(s) ||
        j >= static_cast<std::ptrdiff_t>(s)) {
      return false;
    }
    return inside[static_cast<std::size_t>(i) * s + static_cast<std::size_t>(j)] != 0;
  };
  for (std::size_t ui = 0; ui < s; ++ui) {
    for (std::size_t uj = 0; uj < s; ++uj) {
      const auto i = static_cast<std::ptrdiff_t>(ui);
      const auto j = static_cast<std::ptrdiff_t>(uj);
      if (in(i, j) &&
          (!in(i - 1, j) || !in(i + 1, j) || !in(i, j - 1) || !in(i, j + 1))) {
        t.at(ui, uj) = 1.0;
      }
    }
  }
  return t;
}

bool is_closed_curve(const Tensor& tmpl) {
  const std::size_t H = tmpl.height(), W = tmpl.width();
  std::vector<std::size_t> on;
  for (std::size_t k = 0; k < tmpl.size(); ++k) {
    if (tmpl[k] != 0.0) on.push_back(k);
  }
  if (on.size() < 4) return false;
  const auto neighbours = [&](std::size_t k) {
    std::vector<std::size_t> out;
    const auto i = static_cast<std::ptrdiff_t>(k / W);
    const auto j = static_cast<std::ptrdiff_t>(k % W);
    for (std::ptrdiff_t di = -1; di <= 1; ++di) {
      for (std::ptrdiff_t dj = -1; dj <= 1; ++dj) {
        if (di == 0 && dj == 0) continue;
        const std::ptrdiff_t a = i + di, b = j + dj;
        if (a < 0 || b < 0 || a >= static_cast<std::ptrdiff_t>(H) ||
            b >= static_cast<std::ptrdiff_t>(W)) {
          continue;
        }
        const std::size_t q = static_cast<std::size_t>(a) * W + static_cast<std::size_t>(b);
        if (tmpl[q] != 0.0) out.push_back(q);
      }
    }
    return out;
  };
  for (std::size_t k : on) {
    if (neighbours(k).size() != 2) return false;
  }
  std::vector<char> seen(tmpl.size(), 0);
  std::vector<std::size_t> stack{on.front()};
  seen[on.front()] = 1;
  std::size_t reached = 0;
  while (!stack.empty()) {
    const std::size_t k = stack.back();
    stack.pop_back();
    ++reached;
    for (std::size_t q : neighbours(k)) {
      if (!seen[q]) {
        seen[q] = 1;
        stack.push_back(q);
      }
    }
  }
  return reached == on.size();
}

ShapeSet generate_shape_set(std::uint64_t seed, std::size_t n, std::size_t s) {
  if (s < 8) {
    throw InvalidArgument("generate_shape_set: template size " +
                          std::to_string(s) + " is below 8");
  }
  std::mt19937_64 rng(seed);
  const double sd = static_cast<double>(s);
  std::uniform_real_distribution<double> axis(0.25 * sd, 0.45 * sd);
  std::uniform_real_distribution<double> angle(0.0, std::numbers::pi);
  ShapeSet set;
  set.provenance = ShapeSet::Provenance::kSynthetic;
  while (set.templates.size() < n) {
    const double a = axis(rng);
    const double b = axis(rng);
    const double theta = angle(rng);
    Tensor t = rasterize_ellipse_boundary(s, a, b, theta);
    if (is_closed_curve(t)) set.templates.push_back(std::move(t));
  }
  return set;
}

ShapeSet load_shape_set(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) {
    throw IoError("shape directory " + dir.string() + " does not exist");
  }
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".pgm") {
      files.push_back(entry.path());
    }
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) throw IoError("no .pgm templates in " + dir.string());
  ShapeSet set;
  set.provenance = ShapeSet::Provenance::kLoaded;
  for (const auto& f : files) {
    const Gray8 img = read_pgm(f);
    Tensor t = Tensor::image(img.height, img.width);
    for (std::size_t k = 0; k < img.pixels.size(); ++k) {
      const auto v = img.pixels[k];
      if (v != 0 && v != 255) {
        throw IoError(f.string() + ": template pixel value " + std::to_string(v) +
                      " is not 0 or 255");
      }
      t[k] = v == 255 ? 1.0 : 0.0;
    }
    set.templates.push_back(std::move(t));
  }
  return set;
}

void save_shape_set(const std::filesystem::path& dir, const ShapeSet& shapes) {
  std::filesystem::create_directories(dir);
  for (std::size_t i = 0; i < shapes.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof(name), "shape_%03zu.pgm", i);
    Gray8 img = to_gray8(shapes.templates[i]);
    write_pgm(dir / name, img);
  }
}

Tensor threshold_mask(const Tensor& y, double threshold) {
  Tensor out(y.shape());
  auto src = y.data();
  auto dst = out.data();
  for (std::size_t k = 0; k < src.size(); ++k) {
    dst[k] = src[k] >= threshold ? src[k] : 0.0;
  }
  return out;
}

PriorTermResult prior_term(const Tensor& y, const Tensor& edges,
                           const ShapeSet& shapes, const PriorParams& params) {
  return evaluate(y, edges, shapes, params, true);
}

double prior_value(const Tensor& y, const Tensor& edges, const ShapeSet& shapes,
                   const PriorParams& params) {
  return evaluate(y, edges, shapes, params, false).value;
}

}  // namespace spcnn
