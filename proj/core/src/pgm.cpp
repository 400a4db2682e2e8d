#include "spcnn/pgm.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <string>

#include "spcnn/errors.hpp"

namespace spcnn {
namespace {

// Next whitespace-delimited header token, skipping '#' comments.
std::string header_token(std::istream& in) {
  std::string tok;
  int ch;
  while ((ch = in.get()) != EOF) {
    if (ch == '#') {
      while ((ch = in.get()) != EOF && ch != '\n') {
      }
      continue;
    }
    if (std::isspace(ch)) {
      if (!tok.empty()) break;
      continue;
    }
    tok.push_back(static_cast<char>(ch));
  }
  return tok;
}

std::size_t parse_size(const std::string& tok, const std::filesystem::path& path) {
  try {
    std::size_t pos = 0;
    const unsigned long v = std::stoul(tok, &pos);
    if (pos != tok.size()) throw std::invalid_argument(tok);
    return v;
  } catch (const std::exception&) {
    throw IoError(path.string() + ": malformed PGM header field '" + tok + "'");
  }
}

}  // namespace

Gray8 read_pgm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  if (header_token(in) != "P5") {
    throw IoError(path.string() + ": not a binary (P5) PGM file");
  }
  Gray8 img;
  img.width = parse_size(header_token(in), path);
  img.height = parse_size(header_token(in), path);
  const std::size_t maxval = parse_size(header_token(in), path);
  if (maxval == 0 || maxval > 255) {
    throw IoError(path.string() + ": only 8-bit PGM is supported (maxval " +
                  std::to_string(maxval) + ")");
  }
  img.pixels.resize(img.width * img.height);
  in.read(reinterpret_cast<char*>(img.pixels.data()),
          static_cast<std::streamsize>(img.pixels.size()));
  if (static_cast<std::size_t>(in.gcount()) != img.pixels.size()) {
    throw IoError(path.string() + ": truncated pixel data");
  }
  if (maxval != 255) {
    for (auto& p : img.pixels) {
      p = static_cast<std::uint8_t>(std::lround(255.0 * p / maxval));
    }
  }
  return img;
}

void write_pgm(const std::filesystem::path& path, const Gray8& img) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << "P5\n" << img.width << " " << img.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(img.pixels.data()),
            static_cast<std::streamsize>(img.pixels.size()));
  if (!out) throw IoError("failed writing " + path.string());
}

Tensor to_tensor(const Gray8& img) {
  Tensor t = Tensor::image(img.height, img.width);
  for (std::size_t k = 0; k < img.pixels.size(); ++k) t[k] = img.pixels[k] / 255.0;
  return t;
}

Gray8 to_gray8(const Tensor& image) {
  if (image.shape().n != 1 || image.shape().c != 1) {
    throw InvalidArgument("to_gray8: expected a single-channel image, got " +
                          to_string(image.shape()));
  }
  Gray8 img{image.height(), image.width(), {}};
  img.pixels.resize(image.size());
  for (std::size_t k = 0; k < image.size(); ++k) {
    const double v = std::clamp(std::round(255.0 * image[k]), 0.0, 255.0);
    img.pixels[k] = static_cast<std::uint8_t>(v);
  }
  return img;
}

}  // namespace spcnn
