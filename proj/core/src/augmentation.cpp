#include "semrel/augmentation.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <thread>
#include <unordered_set>
#include <variant>

#include <json.hpp>

#include "semrel/error.hpp"
#include "semrel/io.hpp"
#include "semrel/text.hpp"

namespace semrel {
namespace {

using nlohmann::ordered_json;

std::string lower_ascii(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

std::optional<std::string> optional_string(const ordered_json& j, const char* key) {
  if (!j.contains(key) || j[key].is_null()) return std::nullopt;
  return j[key].get<std::string>();
}

ordered_json optional_json(const std::optional<std::string>& v) {
  return v ? ordered_json(*v) : ordered_json(nullptr);
}

std::size_t count_placeholders(std::string_view text) {
  std::size_t count = 0;
  for (auto pos = text.find(kPromptPlaceholder); pos != std::string_view::npos;
       pos = text.find(kPromptPlaceholder, pos + kPromptPlaceholder.size())) {
    ++count;
  }
  return count;
}

}  // namespace

std::string_view to_string(CandidateStatus status) {
  switch (status) {
    case CandidateStatus::kPending:
      return "pending";
    case CandidateStatus::kAutoRejectedRefusal:
      return "auto_rejected_refusal";
    case CandidateStatus::kAutoRejectedPolicy:
      return "auto_rejected_policy";
    case CandidateStatus::kAccepted:
      return "accepted";
    case CandidateStatus::kRejected:
      return "rejected";
    case CandidateStatus::kFailed:
      return "failed";
  }
  return "pending";
}

CandidateStatus parse_candidate_status(std::string_view name) {
  for (const auto s : {CandidateStatus::kPending, CandidateStatus::kAutoRejectedRefusal,
                       CandidateStatus::kAutoRejectedPolicy, CandidateStatus::kAccepted,
                       CandidateStatus::kRejected, CandidateStatus::kFailed}) {
    if (to_string(s) == name) return s;
  }
  throw InvalidArgument("unknown candidate status '" + std::string(name) + "'");
}

bool is_terminal(CandidateStatus status) { return status != CandidateStatus::kPending; }

std::string_view to_string(Verdict verdict) {
  return verdict == Verdict::kAccept ? "accept" : "reject";
}

Verdict parse_verdict(std::string_view name) {
  if (name == "accept") return Verdict::kAccept;
  if (name == "reject") return Verdict::kReject;
  throw InvalidArgument("verdict must be 'accept' or 'reject', got '" + std::string(name) + "'");
}

void validate_candidate(const AugmentationCandidate& c) {
  auto fail = [&](const std::string& why) {
    throw InvalidArgument("candidate '" + c.candidate_id + "': " + why);
  };
  if (c.candidate_id.empty()) fail("empty candidate_id");
  if (c.replaced_slot != 1 && c.replaced_slot != 2) fail("replaced_slot must be 1 or 2");
  if (!(c.inherited_score >= 0.0 && c.inherited_score <= 1.0)) fail("inherited_score outside [0,1]");
  switch (c.status) {
    case CandidateStatus::kAccepted:
    case CandidateStatus::kRejected:
      if (!c.reviewer || !c.decided_at) fail("decided candidates need reviewer and decided_at");
      break;
    case CandidateStatus::kAutoRejectedRefusal:
    case CandidateStatus::kAutoRejectedPolicy:
    case CandidateStatus::kFailed:
      if (!c.filter_reason) fail("auto-rejected and failed candidates need filter_reason");
      break;
    case CandidateStatus::kPending:
      break;
  }
}

std::string to_json_line(const AugmentationCandidate& c) {
  ordered_json j;
  j["candidate_id"] = c.candidate_id;
  j["source_pair_id"] = c.source_pair_id;
  j["replaced_slot"] = c.replaced_slot;
  j["original_sentence"] = c.original_sentence;
  j["generated_text"] = c.generated_text;
  j["partner_sentence"] = c.partner_sentence;
  j["inherited_score"] = c.inherited_score;
  j["status"] = std::string(to_string(c.status));
  j["filter_reason"] = optional_json(c.filter_reason);
  j["note"] = optional_json(c.note);
  j["reviewer"] = optional_json(c.reviewer);
  j["decided_at"] = optional_json(c.decided_at);
  return j.dump();
}

AugmentationCandidate candidate_from_json(std::string_view text) {
  try {
    const auto j = ordered_json::parse(text);
    AugmentationCandidate c;
    c.candidate_id = j.at("candidate_id").get<std::string>();
    c.source_pair_id = j.at("source_pair_id").get<std::string>();
    c.replaced_slot = j.at("replaced_slot").get<int>();
    c.original_sentence = j.at("original_sentence").get<std::string>();
    c.generated_text = j.at("generated_text").get<std::string>();
    c.partner_sentence = j.at("partner_sentence").get<std::string>();
    c.inherited_score = j.at("inherited_score").get<double>();
    c.status = parse_candidate_status(j.at("status").get<std::string>());
    c.filter_reason = optional_string(j, "filter_reason");
    c.note = optional_string(j, "note");
    c.reviewer = optional_string(j, "reviewer");
    c.decided_at = optional_string(j, "decided_at");
    validate_candidate(c);
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument(std::string("malformed candidate record: ") + e.what());
  }
}

std::string format_candidates(std::span<const AugmentationCandidate> candidates) {
  std::string out;
  for (const auto& c : candidates) {
    out += to_json_line(c);
    out.push_back('\n');
  }
  return out;
}

std::vector<AugmentationCandidate> parse_candidates(std::string_view content) {
  std::vector<AugmentationCandidate> out;
  std::unordered_set<std::string> ids;
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start < content.size()) {
    auto end = content.find('\n', start);
    if (end == std::string_view::npos) end = content.size();
    const auto line = content.substr(start, end - start);
    start = end + 1;
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
    try {
      out.push_back(candidate_from_json(line));
    } catch (const InvalidArgument& e) {
      throw FormatError(line_no, e.what());
    }
    if (!ids.insert(out.back().candidate_id).second) {
      throw FormatError(line_no, "duplicate candidate_id '" + out.back().candidate_id + "'");
    }
  }
  return out;
}

std::vector<AugmentationCandidate> load_candidates(const std::filesystem::path& path) {
  return parse_candidates(io::read_file(path));
}

void save_candidates(std::span<const AugmentationCandidate> candidates,
                     const std::filesystem::path& path) {
  io::write_file_atomic(path, format_candidates(candidates));
}

void record_decision(AugmentationCandidate& candidate, Verdict verdict, std::string reviewer,
                     std::optional<std::string> note, std::string decided_at, bool force) {
  if (reviewer.empty()) throw InvalidArgument("a decision needs a reviewer");
  if (is_terminal(candidate.status) && !force) {
    throw Conflict("candidate '" + candidate.candidate_id + "' is already " +
                   std::string(to_string(candidate.status)));
  }
  candidate.status = verdict == Verdict::kAccept ? CandidateStatus::kAccepted
                                                 : CandidateStatus::kRejected;
  candidate.reviewer = std::move(reviewer);
  candidate.note = std::move(note);
  candidate.decided_at = std::move(decided_at);
}

void validate_template(const PromptTemplate& t) {
  const auto n = count_placeholders(t.text);
  if (n != 1) {
    throw InvalidArgument("prompt template must contain exactly one " +
                          std::string(kPromptPlaceholder) + " placeholder, found " +
                          std::to_string(n));
  }
}

std::string build_prompt(const PromptTemplate& t, std::string_view sentence) {
  validate_template(t);
  const auto pos = t.text.find(kPromptPlaceholder);
  std::string out = t.text.substr(0, pos);
  out += sentence;
  out += t.text.substr(pos + kPromptPlaceholder.size());
  return out;
}

std::optional<std::string> extract_sentence(const PromptTemplate& t, std::string_view prompt) {
  validate_template(t);
  const auto pos = t.text.find(kPromptPlaceholder);
  const std::string_view prefix = std::string_view(t.text).substr(0, pos);
  const std::string_view suffix = std::string_view(t.text).substr(pos + kPromptPlaceholder.size());
  if (prompt.size() < prefix.size() + suffix.size() || !prompt.starts_with(prefix) ||
      !prompt.ends_with(suffix)) {
    return std::nullopt;
  }
  return std::string(prompt.substr(prefix.size(), prompt.size() - prefix.size() - suffix.size()));
}

std::vector<AugmentationCandidate> generate_candidates(const Dataset& train,
                                                       const PromptTemplate& prompt_template,
                                                       const GeneratorClient& client,
                                                       const GenerateOptions& options) {
  validate_template(prompt_template);
  if (!train.fully_labeled()) {
    throw InvalidArgument("augmentation needs a fully labeled training set");
  }
  const auto& pairs = train.pairs();
  const std::size_t jobs = pairs.size() * 2;
  // Index 2i is slot 1 of pair i, 2i+1 is slot 2.
  std::vector<std::variant<std::monostate, std::string, GenerationError>> replies(jobs);
  auto run = [&](std::size_t job) {
    const auto& pair = pairs[job / 2];
    const auto& sentence = job % 2 == 0 ? pair.sentence1 : pair.sentence2;
    try {
      replies[job] = client.generate(build_prompt(prompt_template, sentence));
    } catch (const GenerationError& e) {
      replies[job] = e;
    } catch (const std::exception& e) {
      replies[job] = GenerationError(e.what());
    }
  };

  const std::size_t workers = std::clamp<std::size_t>(options.max_concurrency, 1, std::max<std::size_t>(jobs, 1));
  if (workers == 1) {
    for (std::size_t j = 0; j < jobs; ++j) run(j);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t j = next++; j < jobs; j = next++) run(j);
      });
    }
  }

  std::vector<AugmentationCandidate> out;
  out.reserve(jobs);
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const auto& pair = pairs[i];
    for (int slot = 1; slot <= 2; ++slot) {
      const auto& reply = replies[2 * i + static_cast<std::size_t>(slot - 1)];
      if (slot == 2 && std::holds_alternative<std::string>(reply) &&
          std::holds_alternative<std::string>(replies[2 * i]) &&
          std::get<std::string>(reply) == std::get<std::string>(replies[2 * i])) {
        continue;
      }
      AugmentationCandidate c;
      c.candidate_id = pair.pair_id + "-aug" + std::to_string(slot);
      c.source_pair_id = pair.pair_id;
      c.replaced_slot = slot;
      c.original_sentence = slot == 1 ? pair.sentence1 : pair.sentence2;
      c.partner_sentence = slot == 1 ? pair.sentence2 : pair.sentence1;
      c.inherited_score = *pair.score;
      if (const auto* text = std::get_if<std::string>(&reply)) {
        c.generated_text = *text;
      } else {
        c.status = CandidateStatus::kFailed;
        c.filter_reason = std::get<GenerationError>(reply).what();
      }
      out.push_back(std::move(c));
    }
  }
  return out;
}

std::vector<AugmentationCandidate> apply_auto_filters(
    std::vector<AugmentationCandidate> candidates, std::span<const std::string> refusal_patterns,
    std::span<const std::string> policy_patterns) {
  auto lowered = [](std::span<const std::string> patterns) {
    std::vector<std::pair<std::string, std::string>> out;
    for (const auto& p : patterns) {
      if (!p.empty()) out.emplace_back(p, lower_ascii(p));
    }
    return out;
  };
  const auto refusal = lowered(refusal_patterns);
  const auto policy = lowered(policy_patterns);
  for (auto& c : candidates) {
    if (c.status != CandidateStatus::kPending) continue;
    const auto reply = lower_ascii(c.generated_text);
    auto match = [&](const auto& patterns) -> const std::string* {
      for (const auto& [original, lower] : patterns) {
        if (reply.find(lower) != std::string::npos) return &original;
      }
      return nullptr;
    };
    if (const auto* p = match(refusal)) {
      c.status = CandidateStatus::kAutoRejectedRefusal;
      c.filter_reason = *p;
    } else if (const auto* q = match(policy)) {
      c.status = CandidateStatus::kAutoRejectedPolicy;
      c.filter_reason = *q;
    }
  }
  return candidates;
}

std::vector<std::string> default_refusal_patterns() {
  return {"as a language model", "as an ai language model", "i am just a language model",
          "i'm just a language model", "i cannot fulfill", "i can't fulfill",
          "i am unable to fulfill", "i'm unable to fulfill"};
}

std::vector<std::string> default_policy_patterns() {
  return {"content policy", "violates our policy", "against my policy",
          "public figure", "sensitive topic"};
}

std::vector<std::string> load_patterns(const std::filesystem::path& path) {
  const auto content = io::read_file(path);
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= content.size()) {
    auto end = content.find('\n', start);
    if (end == std::string::npos) end = content.size();
    std::string line = content.substr(start, end - start);
    start = end + 1;
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ' || line.back() == '\t')) {
      line.pop_back();
    }
    const auto first = line.find_first_not_of(" \t");
    if (first == std::string::npos || line[first] == '#') continue;
    out.push_back(line.substr(first));
  }
  return out;
}

Dataset merge_accepted(const Dataset& train, std::span<const AugmentationCandidate> candidates) {
  std::vector<std::string> pending;
  for (const auto& c : candidates) {
    if (c.status == CandidateStatus::kPending) pending.push_back(c.candidate_id);
  }
  if (!pending.empty()) {
    throw InvalidArgument(std::to_string(pending.size()) +
                          " candidate(s) still pending review, first: " + pending.front());
  }
  std::vector<SentencePair> pairs = train.pairs();
  std::unordered_set<std::string> ids;
  for (const auto& p : pairs) ids.insert(p.pair_id);
  for (const auto& c : candidates) {
    if (c.status != CandidateStatus::kAccepted) continue;
    const auto* source = train.find(c.source_pair_id);
    if (source == nullptr) {
      throw NotFound("candidate '" + c.candidate_id + "' refers to unknown pair '" +
                     c.source_pair_id + "'");
    }
    SentencePair pair;
    pair.pair_id = c.source_pair_id + "-aug" + std::to_string(c.replaced_slot);
    if (!ids.insert(pair.pair_id).second) {
      throw Conflict("augmented pair id '" + pair.pair_id + "' collides with an existing pair");
    }
    if (c.inherited_score != *source->score) {
      throw Conflict("candidate '" + c.candidate_id + "' score differs from its source pair");
    }
    // The paraphrase takes the slot of the sentence it replaces.
    auto generated = normalize_text(c.generated_text);
    pair.sentence1 = c.replaced_slot == 1 ? std::move(generated) : c.partner_sentence;
    pair.sentence2 = c.replaced_slot == 1 ? c.partner_sentence : std::move(generated);
    pair.score = source->score;
    pairs.push_back(std::move(pair));
  }
  return Dataset(train.split(), train.language_tag(), std::move(pairs));
}

StatusCounts count_statuses(std::span<const AugmentationCandidate> candidates) {
  StatusCounts counts;
  for (const auto s : {CandidateStatus::kPending, CandidateStatus::kAutoRejectedRefusal,
                       CandidateStatus::kAutoRejectedPolicy, CandidateStatus::kAccepted,
                       CandidateStatus::kRejected, CandidateStatus::kFailed}) {
    counts[s] = 0;
  }
  for (const auto& c : candidates) ++counts[c.status];
  return counts;
}

}  // namespace semrel
