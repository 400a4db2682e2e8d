#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "spcnn/network.hpp"

namespace spcnn {

// On-disk model: one line of JSON
//   {"version":1,"layer_specs":[...],"seed":S,"epoch":E,"param_count":N}
// followed by N little-endian float32 values, layer by layer, weights
// (row-major out x in x kh x kw) before biases.
struct Checkpoint {
  static constexpr int kVersion = 1;

  ModelParams params;
  std::uint64_t seed = 0;
  int epoch = 0;
};

std::string encode_checkpoint(const Checkpoint& ckpt);
Checkpoint decode_checkpoint(const std::string& bytes);

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace spcnn
