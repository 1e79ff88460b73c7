#include "semrel/augmentation.hpp"

#include <gtest/gtest.h>

#include <set>

#include "semrel/error.hpp"
#include "semrel/generator.hpp"
#include "test_support.hpp"

namespace semrel {
namespace {

const PromptTemplate kTemplate{"Paraphrase in the same dialect, keep the meaning: {sentence}", "ary"};

// Pairs whose sentences are unique across the whole set, so paraphrases never
// collide by accident.
Dataset distinct_pairs(std::size_t n, const std::string& prefix = "ary-train") {
  std::vector<SentencePair> pairs;
  for (std::size_t i = 0; i < n; ++i) {
    const auto k = std::to_string(i);
    pairs.push_back({prefix + "-" + k, "alpha" + k + " beta gamma", "delta" + k + " epsilon",
                     static_cast<double>(i % 11) / 10.0});
  }
  return Dataset(Split::kTrain, "ary", std::move(pairs));
}

TEST(PromptTest, SubstitutesVerbatim) {
  EXPECT_EQ(build_prompt(kTemplate, "hi"), "Paraphrase in the same dialect, keep the meaning: hi");
  EXPECT_EQ(build_prompt(kTemplate, "{a} }{ {sentence}"),
            "Paraphrase in the same dialect, keep the meaning: {a} }{ {sentence}");
}

TEST(PromptTest, TemplateNeedsExactlyOnePlaceholder) {
  EXPECT_THROW(validate_template({"no placeholder", "x"}), InvalidArgument);
  EXPECT_THROW(validate_template({"{sentence} and {sentence}", "x"}), InvalidArgument);
  EXPECT_THROW(build_prompt({"nothing", "x"}, "s"), InvalidArgument);
  EXPECT_NO_THROW(validate_template({std::string(kDefaultPromptTemplate), "x"}));
}

TEST(PromptTest, InversionRecoversRandomSentences) {
  Rng rng(50);
  const std::string alphabet = "ab {}:sentence \n\"\\";
  const PromptTemplate wrapped{"<<{sentence}>> end", "x"};
  for (int i = 0; i < 100; ++i) {
    std::string s;
    for (std::size_t k = rng.index(20); k > 0; --k) s += alphabet[rng.index(alphabet.size())];
    EXPECT_EQ(extract_sentence(kTemplate, build_prompt(kTemplate, s)), s);
    EXPECT_EQ(extract_sentence(wrapped, build_prompt(wrapped, s)), s);
  }
  EXPECT_FALSE(extract_sentence(wrapped, "unrelated").has_value());
}

TEST(GenerateTest, TwoPendingCandidatesPerPair) {
  const auto train = distinct_pairs(924);
  const MockGenerator mock({}, kTemplate.text);
  const auto candidates = generate_candidates(train, kTemplate, mock);
  ASSERT_EQ(candidates.size(), 1848u);
  for (const auto& c : candidates) EXPECT_EQ(c.status, CandidateStatus::kPending);
  EXPECT_EQ(candidates[0].candidate_id, "ary-train-0-aug1");
  EXPECT_EQ(candidates[1].candidate_id, "ary-train-0-aug2");
}

TEST(GenerateTest, CandidateInheritsScoreAndPartner) {
  const Dataset train(Split::kTrain, "ary", {{"p1", "S1", "S2", 0.6}});
  const MockGenerator mock({}, kTemplate.text,
                           {{build_prompt(kTemplate, "S1"), "S1 prime"},
                            {build_prompt(kTemplate, "S2"), "S2 prime"}});
  const auto c = generate_candidates(train, kTemplate, mock);
  ASSERT_EQ(c.size(), 2u);
  EXPECT_EQ(c[0].replaced_slot, 1);
  EXPECT_EQ(c[0].original_sentence, "S1");
  EXPECT_EQ(c[0].generated_text, "S1 prime");
  EXPECT_EQ(c[0].partner_sentence, "S2");
  EXPECT_EQ(c[0].inherited_score, 0.6);
  EXPECT_EQ(c[1].replaced_slot, 2);
  EXPECT_EQ(c[1].partner_sentence, "S1");
  EXPECT_EQ(c[1].inherited_score, 0.6);
}

TEST(GenerateTest, EmptyTrainGivesNothing) {
  const MockGenerator mock;
  EXPECT_TRUE(generate_candidates(Dataset(Split::kTrain, "x", {}), kTemplate, mock).empty());
}

TEST(GenerateTest, UnlabeledTrainRejected) {
  const MockGenerator mock;
  const Dataset train(Split::kTrain, "x", {{"a", "s", "t", std::nullopt}});
  EXPECT_THROW(generate_candidates(train, kTemplate, mock), InvalidArgument);
}

TEST(GenerateTest, FailuresAreRecordedNotFatal) {
  MockGeneratorOptions opts;
  opts.failure_rate = 1.0;
  const MockGenerator mock(opts, kTemplate.text);
  const auto c = generate_candidates(distinct_pairs(5), kTemplate, mock);
  ASSERT_EQ(c.size(), 10u);
  for (const auto& x : c) {
    EXPECT_EQ(x.status, CandidateStatus::kFailed);
    ASSERT_TRUE(x.filter_reason.has_value());
    EXPECT_TRUE(x.generated_text.empty());
  }
}

TEST(GenerateTest, DuplicateReplyWithinPairIsDropped) {
  const Dataset train(Split::kTrain, "x", {{"p", "one", "two", 0.3}});
  const MockGenerator mock({}, kTemplate.text,
                           {{build_prompt(kTemplate, "one"), "same"},
                            {build_prompt(kTemplate, "two"), "same"}});
  const auto c = generate_candidates(train, kTemplate, mock);
  ASSERT_EQ(c.size(), 1u);
  EXPECT_EQ(c[0].replaced_slot, 1);
}

TEST(GenerateTest, ConcurrencyDoesNotChangeOutput) {
  MockGeneratorOptions opts;
  opts.refusal_rate = 0.2;
  opts.failure_rate = 0.1;
  const MockGenerator mock(opts, kTemplate.text);
  const auto train = distinct_pairs(60);
  const auto serial = generate_candidates(train, kTemplate, mock, {1});
  const auto parallel = generate_candidates(train, kTemplate, mock, {4});
  EXPECT_EQ(format_candidates(serial), format_candidates(parallel));
  // Replay with the same seed is byte-identical.
  EXPECT_EQ(format_candidates(serial),
            format_candidates(generate_candidates(train, kTemplate, MockGenerator(opts, kTemplate.text))));
}

AugmentationCandidate pending(const std::string& id, const std::string& reply, double score = 0.5,
                              int slot = 1) {
  AugmentationCandidate c;
  c.candidate_id = id + "-aug" + std::to_string(slot);
  c.source_pair_id = id;
  c.replaced_slot = slot;
  c.original_sentence = "orig " + id;
  c.generated_text = reply;
  c.partner_sentence = "partner " + id;
  c.inherited_score = score;
  return c;
}

TEST(FilterTest, RefusalAndPolicyExamples) {
  const auto out = apply_auto_filters(
      {pending("a", "As a language model, I cannot fulfill this request."),
       pending("b", "This request violates our content policy."), pending("c", "fine words")},
      default_refusal_patterns(), default_policy_patterns());
  EXPECT_EQ(out[0].status, CandidateStatus::kAutoRejectedRefusal);
  EXPECT_EQ(out[1].status, CandidateStatus::kAutoRejectedPolicy);
  EXPECT_EQ(out[2].status, CandidateStatus::kPending);
  EXPECT_FALSE(out[2].filter_reason.has_value());
}

TEST(FilterTest, CaseInsensitiveRefusalFirstReasonIsPattern) {
  const std::vector<std::string> refusal = {"cannot fulfill"};
  const std::vector<std::string> policy = {"policy"};
  const auto out = apply_auto_filters({pending("a", "I CANNOT FULFILL this; POLICY says no")},
                                      refusal, policy);
  EXPECT_EQ(out[0].status, CandidateStatus::kAutoRejectedRefusal);
  EXPECT_EQ(out[0].filter_reason, "cannot fulfill");
}

TEST(FilterTest, EmptyPatternListsAreNoOps) {
  const std::vector<std::string> none;
  const auto out = apply_auto_filters({pending("a", "As a language model")}, none, none);
  EXPECT_EQ(out[0].status, CandidateStatus::kPending);
}

TEST(FilterTest, NonPendingPassThrough) {
  auto c = pending("a", "As a language model, I cannot fulfill this request.");
  record_decision(c, Verdict::kAccept, "r", std::nullopt, "2024-01-01T00:00:00Z");
  const auto out = apply_auto_filters({c}, default_refusal_patterns(), default_policy_patterns());
  EXPECT_EQ(out[0], c);
}

TEST(FilterTest, MockFixtureYieldsFiveThreeTwelve) {
  std::vector<AugmentationCandidate> batch;
  for (int i = 0; i < 20; ++i) {
    std::string reply;
    if (i < 5) {
      reply = std::string(kMockRefusalReply);
    } else if (i < 8) {
      reply = std::string(kMockPolicyReply);
    } else {
      reply = "clean paraphrase number " + std::to_string(i);
    }
    batch.push_back(pending("p" + std::to_string(i), reply));
  }
  const auto out = apply_auto_filters(batch, default_refusal_patterns(), default_policy_patterns());
  const auto counts = count_statuses(out);
  EXPECT_EQ(counts.at(CandidateStatus::kAutoRejectedRefusal), 5u);
  EXPECT_EQ(counts.at(CandidateStatus::kAutoRejectedPolicy), 3u);
  EXPECT_EQ(counts.at(CandidateStatus::kPending), 12u);
  // Deterministic.
  EXPECT_EQ(apply_auto_filters(batch, default_refusal_patterns(), default_policy_patterns()), out);
}

TEST(FilterTest, LoadPatternsSkipsCommentsAndBlanks) {
  testing::TempDir dir;
  testing::write_text(dir / "p.txt", "# refusals\nas an ai\n\n  cannot help  \n");
  EXPECT_EQ(load_patterns(dir / "p.txt"), (std::vector<std::string>{"as an ai", "cannot help"}));
}

// Both slots of every pair, decided in order: the first `accept` accepted,
// the rest rejected.
std::vector<AugmentationCandidate> decided(const Dataset& train, std::size_t accept) {
  std::vector<AugmentationCandidate> out;
  for (std::size_t i = 0; i < train.size(); ++i) {
    const auto& p = train.pairs()[i];
    for (int slot = 1; slot <= 2; ++slot) {
      auto c = pending(p.pair_id, "para " + p.pair_id + " " + std::to_string(slot), *p.score, slot);
      c.original_sentence = slot == 1 ? p.sentence1 : p.sentence2;
      c.partner_sentence = slot == 1 ? p.sentence2 : p.sentence1;
      out.push_back(std::move(c));
    }
  }
  std::size_t accepted = 0;
  for (auto& c : out) {
    const bool yes = accepted < accept;
    record_decision(c, yes ? Verdict::kAccept : Verdict::kReject, "rev", std::nullopt,
                    "2024-01-01T00:00:00Z");
    if (yes) ++accepted;
  }
  return out;
}

TEST(MergeTest, TableArithmetic) {
  const auto train = distinct_pairs(924);
  const auto candidates = decided(train, 757);
  const auto merged = merge_accepted(train, candidates);
  EXPECT_EQ(merged.size(), 1681u);
  for (std::size_t i = 924; i < merged.size(); ++i) {
    const auto& m = merged.pairs()[i];
    const auto* source = train.find(m.pair_id.substr(0, m.pair_id.rfind("-aug")));
    ASSERT_NE(source, nullptr) << m.pair_id;
    EXPECT_EQ(m.score, source->score);
  }
}

TEST(MergeTest, ZeroAcceptedIsIdentity) {
  const auto train = distinct_pairs(10);
  EXPECT_EQ(merge_accepted(train, decided(train, 0)), train);
  EXPECT_EQ(merge_accepted(train, {}), train);
}

TEST(MergeTest, TenPlusThreeDistinctIds) {
  const auto train = distinct_pairs(10, "p");
  const auto merged = merge_accepted(train, decided(train, 3));
  ASSERT_EQ(merged.size(), 13u);
  std::set<std::string> ids;
  for (const auto& p : merged.pairs()) ids.insert(p.pair_id);
  EXPECT_EQ(ids.size(), 13u);
  EXPECT_TRUE(ids.count("p-0-aug1"));
  EXPECT_TRUE(ids.count("p-0-aug2"));
  EXPECT_TRUE(ids.count("p-1-aug1"));
}

TEST(MergeTest, ParaphraseKeepsItsSlot) {
  const Dataset train(Split::kTrain, "x", {{"p", "first", "second", 0.4}});
  auto c = pending("p", "second again", 0.4, 2);
  c.original_sentence = "second";
  c.partner_sentence = "first";
  record_decision(c, Verdict::kAccept, "r", std::nullopt, "2024-01-01T00:00:00Z");
  const auto merged = merge_accepted(train, std::vector{c});
  EXPECT_EQ(merged.pairs()[1], (SentencePair{"p-aug2", "first", "second again", 0.4}));
}

TEST(MergeTest, Errors) {
  const auto train = distinct_pairs(2, "p");
  EXPECT_THROW(merge_accepted(train, std::vector{pending("p-0", "x")}), InvalidArgument);
  // An id that already exists in the training data.
  const Dataset clash(Split::kTrain, "x", {{"p", "a", "b", 0.5}, {"p-aug1", "c", "d", 0.5}});
  auto c = pending("p", "new", 0.5);
  record_decision(c, Verdict::kAccept, "r", std::nullopt, "2024-01-01T00:00:00Z");
  EXPECT_THROW(merge_accepted(clash, std::vector{c}), Conflict);
  // A candidate whose score drifted from its source.
  auto drifted = pending("p", "new", 0.9);
  record_decision(drifted, Verdict::kAccept, "r", std::nullopt, "2024-01-01T00:00:00Z");
  const Dataset source(Split::kTrain, "x", {{"p", "a", "b", 0.5}});
  EXPECT_THROW(merge_accepted(source, std::vector{drifted}), Conflict);
}

TEST(CandidateTest, JsonLineRoundTrip) {
  auto c = pending("p", "text with \"quotes\" and \n newline", 0.25, 2);
  record_decision(c, Verdict::kReject, "alice", "drifted", "2024-02-03T04:05:06Z");
  const auto line = to_json_line(c);
  EXPECT_EQ(line.find('\n'), std::string::npos);
  EXPECT_EQ(line.rfind("{\"candidate_id\":", 0), 0u);
  EXPECT_EQ(candidate_from_json(line), c);
  const std::vector<AugmentationCandidate> all = {c, pending("q", "x")};
  EXPECT_EQ(parse_candidates(format_candidates(all)), all);
}

TEST(CandidateTest, InvariantsEnforced) {
  auto c = pending("p", "x");
  c.status = CandidateStatus::kAccepted;
  EXPECT_THROW(validate_candidate(c), InvalidArgument);
  c = pending("p", "x");
  c.status = CandidateStatus::kAutoRejectedPolicy;
  EXPECT_THROW(validate_candidate(c), InvalidArgument);
  c = pending("p", "x");
  c.replaced_slot = 3;
  EXPECT_THROW(validate_candidate(c), InvalidArgument);
  c = pending("p", "x");
  c.inherited_score = 1.5;
  EXPECT_THROW(validate_candidate(c), InvalidArgument);
  EXPECT_THROW(parse_candidates("{\"candidate_id\": 3}\n"), FormatError);
  EXPECT_THROW(parse_candidates(to_json_line(pending("p", "x")) + "\n" +
                                to_json_line(pending("p", "y")) + "\n"),
               FormatError);
}

TEST(CandidateTest, TerminalStateNeedsForce) {
  auto c = pending("p", "x");
  record_decision(c, Verdict::kAccept, "alice", std::nullopt, "2024-01-01T00:00:00Z");
  EXPECT_EQ(c.status, CandidateStatus::kAccepted);
  EXPECT_EQ(c.reviewer, "alice");
  EXPECT_THROW(record_decision(c, Verdict::kReject, "bob", std::nullopt, "2024-01-02T00:00:00Z"),
               Conflict);
  EXPECT_EQ(c.status, CandidateStatus::kAccepted);
  record_decision(c, Verdict::kReject, "bob", "changed mind", "2024-01-02T00:00:00Z", true);
  EXPECT_EQ(c.status, CandidateStatus::kRejected);
  EXPECT_EQ(c.note, "changed mind");
}

TEST(CountTest, EveryStatusPresentAndConserved) {
  const auto counts = count_statuses(std::vector{pending("a", "x"), pending("b", "y")});
  EXPECT_EQ(counts.size(), 6u);
  std::size_t total = 0;
  for (const auto& [status, n] : counts) total += n;
  EXPECT_EQ(total, 2u);
  for (auto s : {CandidateStatus::kPending, CandidateStatus::kAutoRejectedRefusal,
                 CandidateStatus::kAutoRejectedPolicy, CandidateStatus::kAccepted,
                 CandidateStatus::kRejected, CandidateStatus::kFailed}) {
    EXPECT_EQ(parse_candidate_status(to_string(s)), s);
  }
}

}  // namespace
}  // namespace semrel
