#include "cli/manifest.hpp"

#include <openssl/evp.h>

#include <array>
#include <memory>

#include "semrel/error.hpp"
#include "semrel/io.hpp"

namespace semrel::cli {

std::string sha256_hex(std::string_view bytes) {
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), &EVP_MD_CTX_free);
  std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
  unsigned int length = 0;
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1 ||
      EVP_DigestUpdate(ctx.get(), bytes.data(), bytes.size()) != 1 ||
      EVP_DigestFinal_ex(ctx.get(), digest.data(), &length) != 1) {
    throw Error("internal_error", "SHA-256 computation failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(2 * length);
  for (unsigned int i = 0; i < length; ++i) {
    out.push_back(kHex[digest[i] >> 4]);
    out.push_back(kHex[digest[i] & 0xF]);
  }
  return out;
}

std::string sha256_file(const std::filesystem::path& path) {
  return sha256_hex(io::read_file(path));
}

Manifest::Manifest(std::string command, const RunConfig& config) {
  data_["tool"] = kToolName;
  data_["version"] = kToolVersion;
  data_["command"] = std::move(command);
  data_["config"] = config.data();
  data_["inputs"] = nlohmann::ordered_json::object();
  data_["outputs"] = nlohmann::ordered_json::object();
}

void Manifest::add_input(const std::string& role, const std::filesystem::path& path) {
  data_["inputs"][role] = {{"path", path.string()}, {"sha256", sha256_file(path)}};
}

void Manifest::add_output(const std::string& role, const std::filesystem::path& path) {
  data_["outputs"][role] = {{"path", path.string()}, {"sha256", sha256_file(path)}};
}

std::string Manifest::dump() const { return data_.dump(2) + "\n"; }

void Manifest::write(const std::filesystem::path& path) const {
  io::write_file_atomic(path, dump());
}

std::filesystem::path manifest_path_for(const std::filesystem::path& artifact) {
  auto p = artifact;
  p += ".manifest.json";
  return p;
}

}  // namespace semrel::cli
