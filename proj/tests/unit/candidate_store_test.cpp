#include "semrel/candidate_store.hpp"

#include <gtest/gtest.h>

#include <thread>

#include "semrel/error.hpp"
#include "store_fixture.hpp"

namespace semrel {
namespace {

constexpr const char* kWhen = "2024-05-01T10:00:00Z";

class CandidateStoreTest : public ::testing::Test {
 protected:
  testing::TempDir dir;
  std::filesystem::path path = dir / "candidates.jsonl";
};

TEST_F(CandidateStoreTest, LoadsAndPaginatesById) {
  auto all = testing::write_pending_store(path, 12);
  std::reverse(all.begin(), all.end());
  save_candidates(all, path);  // file order differs from id order
  const CandidateStore store(path);
  const auto page = store.list(CandidateStatus::kPending, 5, 10);
  EXPECT_EQ(page.total, 12u);
  ASSERT_EQ(page.items.size(), 2u);
  EXPECT_EQ(page.items[0].candidate_id, "c-010");
  EXPECT_EQ(page.items[1].candidate_id, "c-011");
  EXPECT_TRUE(store.list(CandidateStatus::kPending, 5, 50).items.empty());
}

TEST_F(CandidateStoreTest, MissingOrCorruptFileFails) {
  EXPECT_THROW(CandidateStore(dir / "none.jsonl"), NotFound);
  testing::write_text(path, "{not json\n");
  EXPECT_THROW(CandidateStore{path}, FormatError);
}

TEST_F(CandidateStoreTest, DecisionIsDurableBeforeReturn) {
  testing::write_pending_store(path, 3);
  CandidateStore store(path);
  const auto updated = store.decide({"c-001", Verdict::kAccept, "looks right", "alice"}, kWhen);
  EXPECT_EQ(updated.status, CandidateStatus::kAccepted);
  EXPECT_EQ(updated.decided_at, kWhen);
  // A second store reading the file sees the decision.
  const CandidateStore reread(path);
  EXPECT_EQ(reread.get("c-001"), updated);
  EXPECT_EQ(reread.get("c-001")->note, "looks right");
  EXPECT_EQ(reread.stats().at(CandidateStatus::kPending), 2u);
}

TEST_F(CandidateStoreTest, SameVerdictIsIdempotent) {
  testing::write_pending_store(path, 2);
  CandidateStore store(path);
  const auto first = store.decide({"c-000", Verdict::kReject, std::nullopt, "alice"}, kWhen);
  const auto before = testing::read_text(path);
  const auto again =
      store.decide({"c-000", Verdict::kReject, std::nullopt, "bob"}, "2030-01-01T00:00:00Z");
  EXPECT_EQ(again, first);
  EXPECT_EQ(testing::read_text(path), before);
}

TEST_F(CandidateStoreTest, ConflictingVerdictLeavesStateUnchanged) {
  testing::write_pending_store(path, 2);
  CandidateStore store(path);
  store.decide({"c-000", Verdict::kAccept, std::nullopt, "alice"}, kWhen);
  const auto before = testing::read_text(path);
  EXPECT_THROW(store.decide({"c-000", Verdict::kReject, std::nullopt, "alice"}, kWhen), Conflict);
  EXPECT_EQ(store.get("c-000")->status, CandidateStatus::kAccepted);
  EXPECT_EQ(testing::read_text(path), before);
}

TEST_F(CandidateStoreTest, AutoRejectedCannotBeDecided) {
  auto all = testing::write_pending_store(path, 1);
  all[0] = apply_auto_filters(all, std::vector<std::string>{"generated"}, {})[0];
  save_candidates(all, path);
  CandidateStore store(path);
  EXPECT_THROW(store.decide({"c-000", Verdict::kAccept, std::nullopt, "a"}, kWhen), Conflict);
}

TEST_F(CandidateStoreTest, UnknownIdAndEmptyReviewer) {
  testing::write_pending_store(path, 1);
  CandidateStore store(path);
  EXPECT_THROW(store.decide({"nope", Verdict::kAccept, std::nullopt, "a"}, kWhen), NotFound);
  EXPECT_THROW(store.decide({"c-000", Verdict::kAccept, std::nullopt, ""}, kWhen),
               InvalidArgument);
  EXPECT_FALSE(store.get("nope").has_value());
}

TEST_F(CandidateStoreTest, NeverTouchesTextOrScores) {
  const auto original = testing::write_pending_store(path, 4);
  CandidateStore store(path);
  store.decide({"c-002", Verdict::kAccept, "n", "r"}, kWhen);
  const auto after = store.snapshot();
  for (std::size_t i = 0; i < original.size(); ++i) {
    EXPECT_EQ(after[i].generated_text, original[i].generated_text);
    EXPECT_EQ(after[i].original_sentence, original[i].original_sentence);
    EXPECT_EQ(after[i].partner_sentence, original[i].partner_sentence);
    EXPECT_EQ(after[i].inherited_score, original[i].inherited_score);
  }
}

TEST_F(CandidateStoreTest, ConcurrentDecisionsAreNeverLost) {
  testing::write_pending_store(path, 120);
  CandidateStore store(path);
  std::vector<std::jthread> workers;
  for (int w = 0; w < 4; ++w) {
    workers.emplace_back([&store, w] {
      for (int k = 0; k < 25; ++k) {
        char id[16];
        std::snprintf(id, sizeof id, "c-%03d", k * 4 + w);
        store.decide({id, k % 2 ? Verdict::kAccept : Verdict::kReject, std::nullopt,
                      "worker" + std::to_string(w)},
                     kWhen);
      }
    });
  }
  workers.clear();
  const auto counts = CandidateStore(path).stats();
  EXPECT_EQ(counts.at(CandidateStatus::kAccepted) + counts.at(CandidateStatus::kRejected), 100u);
  EXPECT_EQ(counts.at(CandidateStatus::kPending), 20u);
}

}  // namespace
}  // namespace semrel
