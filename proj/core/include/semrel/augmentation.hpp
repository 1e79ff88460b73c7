#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "semrel/corpus.hpp"
#include "semrel/generator.hpp"

namespace semrel {

enum class CandidateStatus {
  kPending,
  kAutoRejectedRefusal,
  kAutoRejectedPolicy,
  kAccepted,
  kRejected,
  kFailed,  // the generator call itself failed; filter_reason holds the error
};

std::string_view to_string(CandidateStatus status);
CandidateStatus parse_candidate_status(std::string_view name);
bool is_terminal(CandidateStatus status);

// A generated paraphrase of one sentence of a scored pair, paired with the
// untouched partner sentence under the pair's score.
struct AugmentationCandidate {
  std::string candidate_id;
  std::string source_pair_id;
  int replaced_slot = 1;  // 1 or 2
  std::string original_sentence;
  std::string generated_text;
  std::string partner_sentence;
  double inherited_score = 0.0;
  CandidateStatus status = CandidateStatus::kPending;
  std::optional<std::string> filter_reason;
  std::optional<std::string> note;
  std::optional<std::string> reviewer;
  std::optional<std::string> decided_at;  // ISO-8601 UTC

  bool operator==(const AugmentationCandidate&) const = default;
};

// Single-line JSON with snake_case keys in declaration order.
std::string to_json_line(const AugmentationCandidate& candidate);
// Throws InvalidArgument on malformed JSON or a violated invariant.
AugmentationCandidate candidate_from_json(std::string_view json_text);

std::string format_candidates(std::span<const AugmentationCandidate> candidates);
std::vector<AugmentationCandidate> parse_candidates(std::string_view content);
std::vector<AugmentationCandidate> load_candidates(const std::filesystem::path& path);
void save_candidates(std::span<const AugmentationCandidate> candidates,
                     const std::filesystem::path& path);

// Throws InvalidArgument when the candidate's fields disagree with its status.
void validate_candidate(const AugmentationCandidate& candidate);

enum class Verdict { kAccept, kReject };
std::string_view to_string(Verdict verdict);
Verdict parse_verdict(std::string_view name);

// Moves a pending candidate to accepted/rejected, recording reviewer, note
// and timestamp. A terminal candidate may only be changed with `force`;
// otherwise Conflict.
void record_decision(AugmentationCandidate& candidate, Verdict verdict, std::string reviewer,
                     std::optional<std::string> note, std::string decided_at, bool force = false);

struct PromptTemplate {
  std::string text;
  std::string language_tag;
};

inline constexpr std::string_view kPromptPlaceholder = "{sentence}";
inline constexpr std::string_view kDefaultPromptTemplate =
    "Paraphrase the following sentence in the same dialect, preserving its meaning and style: "
    "{sentence}";

// Throws InvalidArgument unless the template holds exactly one placeholder.
void validate_template(const PromptTemplate& prompt_template);
std::string build_prompt(const PromptTemplate& prompt_template, std::string_view sentence);
// Inverse of build_prompt; std::nullopt when `prompt` does not fit the template.
std::optional<std::string> extract_sentence(const PromptTemplate& prompt_template,
                                            std::string_view prompt);

struct GenerateOptions {
  std::size_t max_concurrency = 1;
};

// Prompts both sentences of every pair. Each reply becomes a pending
// candidate `<pair_id>-aug<slot>`; a failing call yields a kFailed candidate
// instead of aborting. A reply identical to the pair's other reply is
// dropped. Output order is pair order, slot 1 before slot 2, regardless of
// concurrency.
std::vector<AugmentationCandidate> generate_candidates(const Dataset& train,
                                                       const PromptTemplate& prompt_template,
                                                       const GeneratorClient& client,
                                                       const GenerateOptions& options = {});

// Case-insensitive substring match of each pending reply against the refusal
// patterns, then the policy patterns; matched candidates are auto-rejected
// with the pattern as filter_reason. Non-pending candidates pass through.
std::vector<AugmentationCandidate> apply_auto_filters(
    std::vector<AugmentationCandidate> candidates, std::span<const std::string> refusal_patterns,
    std::span<const std::string> policy_patterns);

// Default pattern lists written by `augment filter` when none are given.
std::vector<std::string> default_refusal_patterns();
std::vector<std::string> default_policy_patterns();
// One pattern per line; blank lines and lines starting with '#' skipped.
std::vector<std::string> load_patterns(const std::filesystem::path& path);

// Original pairs followed by one pair per accepted candidate, in candidate
// order. Throws InvalidArgument when any candidate is still pending, and
// Conflict on an id collision.
Dataset merge_accepted(const Dataset& train, std::span<const AugmentationCandidate> candidates);

using StatusCounts = std::map<CandidateStatus, std::size_t>;
// Every status appears, with zero where absent.
StatusCounts count_statuses(std::span<const AugmentationCandidate> candidates);

}  // namespace semrel
