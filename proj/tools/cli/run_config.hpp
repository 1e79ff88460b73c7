#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include <json.hpp>

#include "semrel/regressor.hpp"
#include "semrel/unsupervised.hpp"

namespace semrel::cli {

// Layered key-value configuration: built-in defaults, then a JSON config
// file, then command-line flags. The resolved document is what manifests
// record.
class RunConfig {
 public:
  RunConfig();

  // Deep-merges a JSON object file. Keys absent from the defaults are
  // rejected so typos fail loudly.
  void merge_file(const std::filesystem::path& path);
  void merge(const nlohmann::ordered_json& overrides, const std::string& origin);
  // Dotted path, e.g. set("train.epochs", 200). The key must already exist.
  void set(std::string_view dotted_key, nlohmann::ordered_json value);

  const nlohmann::ordered_json& data() const noexcept { return data_; }
  const nlohmann::ordered_json& at(std::string_view dotted_key) const;

  std::uint64_t seed() const;
  TrainConfig train_config() const;
  ScorerConfig scorer_config() const;
  std::string encoder_name() const;
  std::filesystem::path encoder_path() const;

 private:
  nlohmann::ordered_json data_;
};

}  // namespace semrel::cli
