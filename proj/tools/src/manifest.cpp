#include "spcnn_cli/manifest.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <array>
#include <chrono>
#include <ctime>
#include <fstream>
#include <iterator>
#include <memory>

#include "spcnn/errors.hpp"

namespace spcnn::cli {
namespace {

using Digest = std::array<unsigned char, 20>;

Digest sha1(std::string_view header, std::string_view body) {
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(),
                                                               &EVP_MD_CTX_free);
  Digest out{};
  unsigned int len = 0;
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha1(), nullptr) != 1 ||
      EVP_DigestUpdate(ctx.get(), header.data(), header.size()) != 1 ||
      EVP_DigestUpdate(ctx.get(), body.data(), body.size()) != 1 ||
      EVP_DigestFinal_ex(ctx.get(), out.data(), &len) != 1 || len != out.size()) {
    throw InvalidState("SHA-1 digest failed");
  }
  return out;
}

std::string hex(const Digest& d) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string s;
  for (unsigned char c : d) {
    s += kDigits[c >> 4];
    s += kDigits[c & 15];
  }
  return s;
}

Digest object_digest(std::string_view type, std::string_view body) {
  std::string header(type);
  header += ' ';
  header += std::to_string(body.size());
  header += '\0';
  return sha1(header, body);
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

Digest hash_entry(const std::filesystem::path& path) {
  if (std::filesystem::is_directory(path)) {
    struct Entry {
      std::string sort_key, name;
      bool dir;
    };
    std::vector<Entry> entries;
    for (const auto& e : std::filesystem::directory_iterator(path)) {
      const std::string name = e.path().filename().string();
      const bool dir = e.is_directory();
      entries.push_back({dir ? name + "/" : name, name, dir});
    }
    std::sort(entries.begin(), entries.end(),
              [](const Entry& a, const Entry& b) { return a.sort_key < b.sort_key; });
    std::string body;
    for (const auto& e : entries) {
      const Digest d = hash_entry(path / e.name);
      body += e.dir ? "40000 " : "100644 ";
      body += e.name;
      body += '\0';
      body.append(reinterpret_cast<const char*>(d.data()), d.size());
    }
    return object_digest("tree", body);
  }
  if (!std::filesystem::exists(path)) throw IoError(path.string() + " does not exist");
  return object_digest("blob", read_file(path));
}

}  // namespace

std::string git_blob_sha1(std::string_view bytes) { return hex(object_digest("blob", bytes)); }

std::string git_hash_path(const std::filesystem::path& path) { return hex(hash_entry(path)); }

void RunManifest::add_input(std::string role, const std::filesystem::path& path) {
  inputs.push_back({std::move(role), path, git_hash_path(path)});
}

std::string RunManifest::input_hash() const {
  std::string all;
  for (const auto& in : inputs) all += in.sha1;
  return git_blob_sha1(all);
}

nlohmann::json RunManifest::to_json() const {
  nlohmann::json in = nlohmann::json::array();
  for (const auto& i : inputs) {
    in.push_back({{"role", i.role}, {"path", i.path.string()}, {"sha1", i.sha1}});
  }
  nlohmann::json art = nlohmann::json::array();
  for (const auto& a : artifacts) art.push_back(a.string());
  return {{"command", command},   {"argv", argv},
          {"config", config},     {"seed", seed},
          {"inputs", in},         {"input_hash", input_hash()},
          {"artifacts", art},     {"started_at", started_at},
          {"finished_at", finished_at}, {"status", status}};
}

void RunManifest::write(const std::filesystem::path& path) const {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << to_json().dump(2) << "\n";
  if (!out) throw IoError("failed writing " + path.string());
}

std::string utc_timestamp() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace spcnn::cli
