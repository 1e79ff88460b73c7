#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

#include "semrel/augmentation.hpp"

namespace semrel {

struct Decision {
  std::string candidate_id;
  Verdict verdict = Verdict::kAccept;
  std::optional<std::string> note;
  std::string reviewer;
};

struct CandidatePage {
  std::vector<AugmentationCandidate> items;
  std::size_t total = 0;  // matching candidates before pagination
};

// The JSONL candidate file plus an in-memory copy. Reads are concurrent;
// mutations are serialized and rewrite the file atomically before they
// return, so the file always matches every acknowledged decision.
class CandidateStore {
 public:
  // Throws NotFound / FormatError when the file is missing or malformed.
  explicit CandidateStore(std::filesystem::path path);

  const std::filesystem::path& path() const noexcept { return path_; }

  // Candidates with `status` (all when nullopt) ordered by candidate_id.
  CandidatePage list(std::optional<CandidateStatus> status, std::size_t limit,
                     std::size_t offset) const;
  std::optional<AugmentationCandidate> get(const std::string& candidate_id) const;
  StatusCounts stats() const;
  std::size_t size() const;
  std::vector<AugmentationCandidate> snapshot() const;

  // Pending -> accepted/rejected, persisted before returning. Resubmitting
  // the verdict a candidate already carries returns it unchanged; any other
  // decision on a non-pending candidate throws Conflict. Unknown id throws
  // NotFound; an empty reviewer throws InvalidArgument.
  AugmentationCandidate decide(const Decision& decision, const std::string& decided_at);

 private:
  std::filesystem::path path_;
  mutable std::shared_mutex mutex_;
  std::vector<AugmentationCandidate> candidates_;   // file order
  std::map<std::string, std::size_t> by_id_;         // sorted view
};

}  // namespace semrel
