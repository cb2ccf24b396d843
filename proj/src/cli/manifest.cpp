#include "densekit/cli/manifest.hpp"

#include <openssl/evp.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "densekit/common.hpp"

namespace densekit::cli {

namespace {
std::string hex(const unsigned char* bytes, std::size_t n) {
  static const char* digits = "0123456789abcdef";
  std::string out;
  out.reserve(n * 2);
  for (std::size_t i = 0; i < n; ++i) {
    out.push_back(digits[bytes[i] >> 4]);
    out.push_back(digits[bytes[i] & 0xF]);
  }
  return out;
}
}  // namespace

std::string sha256_bytes(const std::string& data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  require(ctx != nullptr, "failed to allocate digest context");
  EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
  EVP_DigestUpdate(ctx, data.data(), data.size());
  EVP_DigestFinal_ex(ctx, digest, &len);
  EVP_MD_CTX_free(ctx);
  return hex(digest, len);
}

std::string sha256_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), "cannot hash missing file: " + path);
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  require(ctx != nullptr, "failed to allocate digest context");
  EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
  char buf[1 << 16];
  while (in.good()) {
    in.read(buf, sizeof(buf));
    EVP_DigestUpdate(ctx, buf, static_cast<std::size_t>(in.gcount()));
  }
  EVP_DigestFinal_ex(ctx, digest, &len);
  EVP_MD_CTX_free(ctx);
  return hex(digest, len);
}

Manifest::Manifest(std::string subcommand, nlohmann::json config_echo,
                   std::uint64_t seed)
    : subcommand_(std::move(subcommand)),
      config_(std::move(config_echo)),
      seed_(seed),
      notes_(nlohmann::json::object()) {}

void Manifest::add_input(const std::string& path) {
  inputs_.emplace_back(path, sha256_file(path));
}

void Manifest::add_output(const std::string& path) {
  outputs_.emplace_back(path, sha256_file(path));
}

void Manifest::set_note(const std::string& key, const nlohmann::json& value) {
  notes_[key] = value;
}

std::string Manifest::to_json() const {
  nlohmann::json j;
  j["subcommand"] = subcommand_;
  j["seed"] = seed_;
  j["config"] = config_;
  nlohmann::json in = nlohmann::json::object();
  for (const auto& [path, digest] : inputs_) in[path] = digest;
  nlohmann::json out = nlohmann::json::object();
  for (const auto& [path, digest] : outputs_) out[path] = digest;
  j["inputs"] = std::move(in);
  j["outputs"] = std::move(out);
  if (!notes_.empty()) j["notes"] = notes_;
  return j.dump(2) + "\n";
}

std::string Manifest::write(const std::string& reports_dir) const {
  std::filesystem::create_directories(reports_dir);
  const std::string path =
      (std::filesystem::path(reports_dir) / ("manifest-" + subcommand_ + ".json"))
          .string();
  std::ofstream out(path, std::ios::binary);
  require(out.good(), "cannot write manifest: " + path);
  out << to_json();
  require(out.good(), "failed writing manifest: " + path);
  return path;
}

}  // namespace densekit::cli
