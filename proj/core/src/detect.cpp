#include "spcnn/detect.hpp"

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>

#include "spcnn/errors.hpp"

namespace spcnn {

DetectionSet local_maxima(const Tensor& y, std::size_t nms_radius) {
  if (y.shape().n != 1 || y.shape().c != 1) {
    throw InvalidArgument("detect: expected a single-channel map, got " +
                          to_string(y.shape()));
  }
  if (nms_radius < 1) throw InvalidArgument("detect: nms_radius must be >= 1");
  const std::size_t H = y.height(), W = y.width();
  const std::size_t r = nms_radius;
  DetectionSet out;
  for (std::size_t i = 0; i < H; ++i) {
    const std::size_t i0 = i >= r ? i - r : 0;
    const std::size_t i1 = std::min(H, i + r + 1);
    for (std::size_t j = 0; j < W; ++j) {
      const std::size_t j0 = j >= r ? j - r : 0;
      const std::size_t j1 = std::min(W, j + r + 1);
      const double v = y.at(i, j);
      const std::size_t self = i * W + j;
      bool is_max = true;
      for (std::size_t a = i0; a < i1 && is_max; ++a) {
        for (std::size_t b = j0; b < j1; ++b) {
          const double u = y.at(a, b);
          const std::size_t q = a * W + b;
          if (u > v || (u == v && q < self)) {
            is_max = false;
            break;
          }
        }
      }
      if (is_max) {
        out.push_back({static_cast<std::int32_t>(i), static_cast<std::int32_t>(j), v});
      }
    }
  }
  return out;
}

DetectionSet filter_by_score(std::span<const Detection> candidates, double threshold) {
  DetectionSet out;
  for (const auto& d : candidates) {
    if (d.score >= threshold) out.push_back(d);
  }
  return out;
}

DetectionSet detect(const Tensor& y, double threshold, std::size_t nms_radius) {
  if (!(threshold >= 0.0)) throw InvalidArgument("detect: threshold must be >= 0");
  return filter_by_score(local_maxima(y, nms_radius), threshold);
}

void write_detections_csv(const std::filesystem::path& path,
                          std::span<const Detection> detections) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << "row,col,score\n" << std::setprecision(17);
  for (const auto& d : detections) {
    out << d.row << "," << d.col << "," << d.score << "\n";
  }
  if (!out) throw IoError("failed writing " + path.string());
}

DetectionSet read_detections_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw IoError(path.string() + ": empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "row,col,score") {
    throw IoError(path.string() + ": expected header 'row,col,score', got '" +
                  line + "'");
  }
  DetectionSet out;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::istringstream ss(line);
    Detection d;
    char c1 = 0, c2 = 0;
    if (!(ss >> d.row >> c1 >> d.col >> c2 >> d.score) || c1 != ',' || c2 != ',') {
      throw IoError(path.string() + ":" + std::to_string(lineno) +
                    ": malformed detection '" + line + "'");
    }
    out.push_back(d);
  }
  return out;
}

}  // namespace spcnn
