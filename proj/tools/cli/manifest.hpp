#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include <json.hpp>

#include "cli/run_config.hpp"

namespace semrel::cli {

inline constexpr std::string_view kToolName = "semrel";
inline constexpr std::string_view kToolVersion = "0.1.0";

std::string sha256_hex(std::string_view bytes);
std::string sha256_file(const std::filesystem::path& path);

// Provenance record written beside every artifact: tool version, the fully
// resolved configuration, and SHA-256 digests of inputs and outputs. It
// carries no timestamps, so identical runs write identical manifests.
class Manifest {
 public:
  Manifest(std::string command, const RunConfig& config);

  void add_input(const std::string& role, const std::filesystem::path& path);
  void add_output(const std::string& role, const std::filesystem::path& path);
  void write(const std::filesystem::path& path) const;
  std::string dump() const;

 private:
  nlohmann::ordered_json data_;
};

// `<file>.manifest.json`
std::filesystem::path manifest_path_for(const std::filesystem::path& artifact);

}  // namespace semrel::cli
