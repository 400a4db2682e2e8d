#include "spcnn/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>

#include "spcnn/errors.hpp"

namespace spcnn {
namespace {

using nlohmann::json;

void put_f32(std::string& out, double v) {
  std::uint32_t bits = std::bit_cast<std::uint32_t>(static_cast<float>(v));
  if constexpr (std::endian::native == std::endian::big) {
    bits = __builtin_bswap32(bits);
  }
  char b[4];
  std::memcpy(b, &bits, 4);
  out.append(b, 4);
}

double get_f32(const char* p) {
  std::uint32_t bits;
  std::memcpy(&bits, p, 4);
  if constexpr (std::endian::native == std::endian::big) {
    bits = __builtin_bswap32(bits);
  }
  return static_cast<double>(std::bit_cast<float>(bits));
}

}  // namespace

std::string encode_checkpoint(const Checkpoint& ckpt) {
  json specs = json::array();
  for (const auto& l : ckpt.params.layers) {
    specs.push_back({{"out_channels", l.out_channels},
                     {"in_channels", l.in_channels},
                     {"kernel_h", l.kernel_h},
                     {"kernel_w", l.kernel_w},
                     {"has_relu", l.has_relu}});
  }
  const json header = {{"version", Checkpoint::kVersion},
                       {"layer_specs", specs},
                       {"seed", ckpt.seed},
                       {"epoch", ckpt.epoch},
                       {"param_count", ckpt.params.parameter_count()}};
  std::string out = header.dump();
  out.push_back('\n');
  out.reserve(out.size() + 4 * ckpt.params.parameter_count());
  for (std::size_t i = 0; i < ckpt.params.depth(); ++i) {
    for (double v : ckpt.params.weights[i].data()) put_f32(out, v);
    for (double v : ckpt.params.biases[i]) put_f32(out, v);
  }
  return out;
}

Checkpoint decode_checkpoint(const std::string& bytes) {
  const auto nl = bytes.find('\n');
  if (nl == std::string::npos) throw IoError("checkpoint: missing JSON header");
  json header;
  try {
    header = json::parse(bytes.substr(0, nl));
  } catch (const json::exception& e) {
    throw IoError(std::string("checkpoint: malformed header: ") + e.what());
  }
  Checkpoint ckpt;
  std::vector<LayerSpec> layers;
  try {
    if (header.at("version").get<int>() != Checkpoint::kVersion) {
      throw IoError("checkpoint: unsupported version " +
                    header.at("version").dump());
    }
    for (const auto& s : header.at("layer_specs")) {
      layers.push_back(LayerSpec{s.at("out_channels").get<std::size_t>(),
                                 s.at("in_channels").get<std::size_t>(),
                                 s.at("kernel_h").get<std::size_t>(),
                                 s.at("kernel_w").get<std::size_t>(),
                                 s.at("has_relu").get<bool>()});
    }
    ckpt.seed = header.at("seed").get<std::uint64_t>();
    ckpt.epoch = header.at("epoch").get<int>();
  } catch (const json::exception& e) {
    throw IoError(std::string("checkpoint: bad header field: ") + e.what());
  }
  try {
    ckpt.params = zero_params(layers);
  } catch (const InvalidArgument& e) {
    throw IoError(std::string("checkpoint: invalid layer specs: ") + e.what());
  }
  const std::size_t count = ckpt.params.parameter_count();
  if (bytes.size() - nl - 1 != 4 * count) {
    throw IoError("checkpoint: expected " + std::to_string(count) +
                  " float32 values, payload has " +
                  std::to_string(bytes.size() - nl - 1) + " bytes");
  }
  const char* p = bytes.data() + nl + 1;
  for (std::size_t i = 0; i < ckpt.params.depth(); ++i) {
    for (double& v : ckpt.params.weights[i].data()) {
      v = get_f32(p);
      p += 4;
    }
    for (double& v : ckpt.params.biases[i]) {
      v = get_f32(p);
      p += 4;
    }
  }
  return ckpt;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write checkpoint " + path.string());
  const std::string bytes = encode_checkpoint(ckpt);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("failed writing checkpoint " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  try {
    return decode_checkpoint(ss.str());
  } catch (const IoError& e) {
    throw IoError(path.string() + ": " + e.what());
  }
}

}  // namespace spcnn
