#pragma once

#include <filesystem>
#include <nlohmann/json.hpp>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace spcnn::cli {

// Hex SHA-1 of "blob <size>\0<bytes>", as computed by `git hash-object`.
std::string git_blob_sha1(std::string_view bytes);

// Blob hash for a file; git tree hash (mode 100644 / 40000 entries, sorted
// the way git sorts them) for a directory.
std::string git_hash_path(const std::filesystem::path& path);

struct ManifestInput {
  std::string role;  // e.g. "data", "model"
  std::filesystem::path path;
  std::string sha1;
};

// Record of one CLI invocation.
struct RunManifest {
  std::string command;
  std::vector<std::string> argv;
  nlohmann::json config = nlohmann::json::object();
  std::uint64_t seed = 0;
  std::vector<ManifestInput> inputs;
  std::vector<std::filesystem::path> artifacts;
  std::string started_at;
  std::string finished_at;
  std::string status = "ok";

  void add_input(std::string role, const std::filesystem::path& path);
  // SHA-1 over the concatenated input hashes, in the order added.
  std::string input_hash() const;
  nlohmann::json to_json() const;
  void write(const std::filesystem::path& path) const;
};

// UTC, ISO-8601 with second resolution.
std::string utc_timestamp();

}  // namespace spcnn::cli
