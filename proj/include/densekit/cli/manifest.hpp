#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"

namespace densekit::cli {

std::string sha256_bytes(const std::string& data);
std::string sha256_file(const std::string& path);

/// Audit record written by every subcommand: the effective configuration,
/// the seed, and content hashes of all inputs and outputs. Deliberately free
/// of timestamps so a reproduced run reproduces the manifest byte for byte.
class Manifest {
 public:
  Manifest(std::string subcommand, nlohmann::json config_echo, std::uint64_t seed);

  void add_input(const std::string& path);
  void add_output(const std::string& path);
  void set_note(const std::string& key, const nlohmann::json& value);

  std::string to_json() const;
  /// Writes to <reports_dir>/manifest-<subcommand>.json and returns the path.
  std::string write(const std::string& reports_dir) const;

 private:
  std::string subcommand_;
  nlohmann::json config_;
  std::uint64_t seed_;
  std::vector<std::pair<std::string, std::string>> inputs_;
  std::vector<std::pair<std::string, std::string>> outputs_;
  nlohmann::json notes_;
};

}  // namespace densekit::cli
