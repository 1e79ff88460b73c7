#pragma once

#include <chrono>
#include <cstdint>
#include <map>
#include <string>
#include <string_view>

#include "semrel/error.hpp"

namespace semrel {

class GenerationError : public Error {
 public:
  explicit GenerationError(const std::string& detail) : Error("generation_error", detail) {}
};

// A generative text service. generate() must be safe to call concurrently and
// throws GenerationError on failure.
class GeneratorClient {
 public:
  virtual ~GeneratorClient() = default;
  virtual std::string generate(const std::string& prompt) const = 0;
};

inline constexpr std::string_view kMockRefusalReply =
    "As a language model, I cannot fulfill this request.";
inline constexpr std::string_view kMockPolicyReply =
    "I can't help with that. This request violates our content policy.";

struct MockGeneratorOptions {
  std::uint64_t seed = 42;
  double refusal_rate = 0.0;
  double policy_rate = 0.0;
  double failure_rate = 0.0;
};

// Deterministic offline generator. A scripted reply wins when the prompt has
// one; otherwise a hash of (seed, prompt) picks a refusal, a policy refusal,
// a failure, or a paraphrase that rotates the words of the prompt's sentence
// (the text after the template prefix, when the template is known).
class MockGenerator final : public GeneratorClient {
 public:
  explicit MockGenerator(MockGeneratorOptions options = {}, std::string prompt_template = {},
                         std::map<std::string, std::string> script = {});

  std::string generate(const std::string& prompt) const override;

 private:
  MockGeneratorOptions options_;
  std::string template_;
  std::map<std::string, std::string> script_;
};

struct HttpGeneratorOptions {
  std::string endpoint;  // http(s)://host[:port]/path
  std::string token_env = "SEMREL_GEN_TOKEN";
  std::string model;
  std::chrono::milliseconds timeout{30000};
  int retries = 2;
  std::chrono::milliseconds retry_backoff{500};
};

// POSTs {"prompt": ..., "model": ...} as JSON with `Authorization: Bearer
// $SEMREL_GEN_TOKEN` and reads the reply from the response's "text"
// (or "reply") string field. Non-2xx responses and transport errors are
// retried `retries` times before GenerationError.
class HttpGenerator final : public GeneratorClient {
 public:
  explicit HttpGenerator(HttpGeneratorOptions options);

  std::string generate(const std::string& prompt) const override;

 private:
  HttpGeneratorOptions options_;
  std::string scheme_host_port_;
  std::string path_;
  std::string token_;
};

}  // namespace semrel
