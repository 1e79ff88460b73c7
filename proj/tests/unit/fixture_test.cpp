#include <gtest/gtest.h>

#include <cmath>

#include "semrel/corpus.hpp"
#include "test_support.hpp"

namespace semrel {
namespace {

// The toy fixtures are labeled with word Jaccard similarity rounded to four
// decimals, so a model that learns lexical overlap can fit them.
void expect_jaccard_labels(const std::string& file, std::size_t rows) {
  const Dataset d = load_dataset(testing::source_path(file), Split::kTrain, "en");
  ASSERT_EQ(d.size(), rows);
  for (const auto& p : d.pairs()) {
    const double expected =
        std::round(testing::word_jaccard(p.sentence1, p.sentence2) * 10000.0) / 10000.0;
    ASSERT_TRUE(p.score.has_value());
    EXPECT_NEAR(*p.score, expected, 1e-12) << p.pair_id;
  }
}

TEST(ToyFixtureTest, TrainLabelsAreWordJaccard) { expect_jaccard_labels("data/toy/train.csv", 64); }

TEST(ToyFixtureTest, DevLabelsAreWordJaccard) { expect_jaccard_labels("data/toy/dev.csv", 16); }

}  // namespace
}  // namespace semrel
