#include <httplib.h>

#include <cstdlib>
#include <thread>

#include <json.hpp>

#include "semrel/augmentation.hpp"
#include "semrel/generator.hpp"
#include "semrel/text.hpp"

namespace semrel {
namespace {

std::uint64_t fnv1a(std::uint64_t seed, std::string_view text) {
  std::uint64_t hash = 1469598103934665603ULL;
  for (int i = 0; i < 8; ++i) {
    hash ^= (seed >> (8 * i)) & 0xFF;
    hash *= 1099511628211ULL;
  }
  for (const unsigned char c : text) {
    hash ^= c;
    hash *= 1099511628211ULL;
  }
  // Final avalanche so nearby prompts spread over the unit interval.
  hash ^= hash >> 33;
  hash *= 0xff51afd7ed558ccdULL;
  hash ^= hash >> 33;
  return hash;
}

}  // namespace

MockGenerator::MockGenerator(MockGeneratorOptions options, std::string prompt_template,
                             std::map<std::string, std::string> script)
    : options_(options), template_(std::move(prompt_template)), script_(std::move(script)) {}

std::string MockGenerator::generate(const std::string& prompt) const {
  if (const auto it = script_.find(prompt); it != script_.end()) return it->second;

  const std::uint64_t hash = fnv1a(options_.seed, prompt);
  const double u = static_cast<double>(hash >> 11) * 0x1.0p-53;
  if (u < options_.refusal_rate) return std::string(kMockRefusalReply);
  if (u < options_.refusal_rate + options_.policy_rate) return std::string(kMockPolicyReply);
  if (u < options_.refusal_rate + options_.policy_rate + options_.failure_rate) {
    throw GenerationError("mock generator: simulated failure");
  }

  std::string sentence = prompt;
  if (!template_.empty()) {
    if (auto extracted = extract_sentence(PromptTemplate{template_, ""}, prompt)) {
      sentence = std::move(*extracted);
    }
  }
  auto words = split_words(sentence);
  if (words.size() < 2) return sentence;
  const auto shift = 1 + (hash >> 7) % (words.size() - 1);
  std::string out;
  for (std::size_t i = 0; i < words.size(); ++i) {
    if (i > 0) out.push_back(' ');
    out += words[(i + shift) % words.size()];
  }
  return out;
}

HttpGenerator::HttpGenerator(HttpGeneratorOptions options) : options_(std::move(options)) {
  const auto scheme_end = options_.endpoint.find("://");
  if (scheme_end == std::string::npos) {
    throw InvalidArgument("generator endpoint must be an http(s) URL: " + options_.endpoint);
  }
  const auto scheme = options_.endpoint.substr(0, scheme_end);
  if (scheme != "http" && scheme != "https") {
    throw InvalidArgument("unsupported generator endpoint scheme '" + scheme + "'");
  }
  const auto path_start = options_.endpoint.find('/', scheme_end + 3);
  scheme_host_port_ = options_.endpoint.substr(0, path_start);
  path_ = path_start == std::string::npos ? "/" : options_.endpoint.substr(path_start);
  if (const char* token = std::getenv(options_.token_env.c_str()); token != nullptr) {
    token_ = token;
  }
  if (token_.empty()) {
    throw InvalidArgument("environment variable " + options_.token_env +
                          " must hold the generator auth token");
  }
  if (options_.retries < 0) throw InvalidArgument("retries must be non-negative");
}

std::string HttpGenerator::generate(const std::string& prompt) const {
  nlohmann::json body{{"prompt", prompt}};
  if (!options_.model.empty()) body["model"] = options_.model;
  const std::string payload = body.dump();
  const httplib::Headers headers{{"Authorization", "Bearer " + token_}};

  std::string last_error;
  for (int attempt = 0; attempt <= options_.retries; ++attempt) {
    if (attempt > 0) std::this_thread::sleep_for(options_.retry_backoff * attempt);
    httplib::Client client(scheme_host_port_);
    const auto secs = std::chrono::duration_cast<std::chrono::seconds>(options_.timeout);
    const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(options_.timeout - secs);
    client.set_connection_timeout(secs.count(), usecs.count());
    client.set_read_timeout(secs.count(), usecs.count());
    client.set_write_timeout(secs.count(), usecs.count());
    auto res = client.Post(path_, headers, payload, "application/json");
    if (!res) {
      last_error = "transport error: " + httplib::to_string(res.error());
      continue;
    }
    if (res->status < 200 || res->status >= 300) {
      last_error = "HTTP " + std::to_string(res->status);
      // Client errors other than throttling will not change on retry.
      if (res->status >= 400 && res->status < 500 && res->status != 429) break;
      continue;
    }
    try {
      const auto reply = nlohmann::json::parse(res->body);
      for (const char* key : {"text", "reply"}) {
        if (reply.contains(key) && reply[key].is_string()) return reply[key].get<std::string>();
      }
      last_error = "response has no string 'text' field";
    } catch (const nlohmann::json::exception& e) {
      last_error = std::string("response is not JSON: ") + e.what();
    }
    break;
  }
  throw GenerationError("generator request failed: " + last_error);
}

}  // namespace semrel
