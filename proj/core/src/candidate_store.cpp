#include "semrel/candidate_store.hpp"

#include <mutex>

#include "semrel/error.hpp"

namespace semrel {

CandidateStore::CandidateStore(std::filesystem::path path)
    : path_(std::move(path)), candidates_(load_candidates(path_)) {
  for (std::size_t i = 0; i < candidates_.size(); ++i) {
    by_id_.emplace(candidates_[i].candidate_id, i);
  }
}

CandidatePage CandidateStore::list(std::optional<CandidateStatus> status, std::size_t limit,
                                   std::size_t offset) const {
  std::shared_lock lock(mutex_);
  CandidatePage page;
  for (const auto& [id, index] : by_id_) {
    const auto& c = candidates_[index];
    if (status && c.status != *status) continue;
    if (page.total >= offset && page.items.size() < limit) page.items.push_back(c);
    ++page.total;
  }
  return page;
}

std::optional<AugmentationCandidate> CandidateStore::get(const std::string& candidate_id) const {
  std::shared_lock lock(mutex_);
  const auto it = by_id_.find(candidate_id);
  if (it == by_id_.end()) return std::nullopt;
  return candidates_[it->second];
}

StatusCounts CandidateStore::stats() const {
  std::shared_lock lock(mutex_);
  return count_statuses(candidates_);
}

std::size_t CandidateStore::size() const {
  std::shared_lock lock(mutex_);
  return candidates_.size();
}

std::vector<AugmentationCandidate> CandidateStore::snapshot() const {
  std::shared_lock lock(mutex_);
  return candidates_;
}

AugmentationCandidate CandidateStore::decide(const Decision& decision,
                                             const std::string& decided_at) {
  if (decision.reviewer.empty()) throw InvalidArgument("reviewer is required");
  std::unique_lock lock(mutex_);
  const auto it = by_id_.find(decision.candidate_id);
  if (it == by_id_.end()) throw NotFound("no candidate '" + decision.candidate_id + "'");
  const auto& current = candidates_[it->second];

  if (current.status != CandidateStatus::kPending) {
    const auto requested = decision.verdict == Verdict::kAccept ? CandidateStatus::kAccepted
                                                                : CandidateStatus::kRejected;
    if (current.status == requested) return current;
    throw Conflict("candidate '" + current.candidate_id + "' is already " +
                   std::string(to_string(current.status)));
  }

  auto updated = candidates_;
  record_decision(updated[it->second], decision.verdict, decision.reviewer, decision.note,
                  decided_at);
  save_candidates(updated, path_);
  candidates_ = std::move(updated);
  return candidates_[it->second];
}

}  // namespace semrel
