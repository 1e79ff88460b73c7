#include "semrel/regressor.hpp"

#include <gtest/gtest.h>

#include <algorithm>

#include "semrel/error.hpp"
#include "semrel/evaluation.hpp"
#include "semrel/random.hpp"
#include "test_support.hpp"
#include "toy_oracle.hpp"

namespace semrel {
namespace {

std::unique_ptr<Encoder> toy(std::uint64_t seed = 42) {
  return std::make_unique<ToyTransformerEncoder>(ToyEncoderConfig{}, seed);
}

TEST(RegressorForwardTest, ZeroHeadGivesZero) {
  RegressionModel model(toy(), 1);
  model.head_weight().value.setZero();
  model.head_bias().value.setZero();
  const auto data = testing::synthetic_dataset(5, 1);
  for (const auto& p : data.pairs()) {
    EXPECT_EQ(forward(model, p, 64), 0.0);
  }
}

TEST(RegressorForwardTest, ClampsAtInferenceOnly) {
  RegressionModel model(toy(), 1);
  model.head_weight().value.setZero();
  model.head_bias().value(0, 0) = 1.7;
  const SentencePair p{"a", "x", "y", 0.5};
  EXPECT_DOUBLE_EQ(model.raw_score("x", "y", 64), 1.7);
  EXPECT_EQ(forward(model, p, 64), 1.0);
  model.head_bias().value(0, 0) = -0.4;
  EXPECT_EQ(forward(model, p, 64), 0.0);
}

TEST(RegressorForwardTest, MatchesScalarOracle) {
  RegressionModel model(toy(7), 7, 0.1, 0.5);
  const auto& enc = dynamic_cast<const ToyTransformerEncoder&>(model.encoder());
  const auto in = enc.tokenize_pair("good morning", "hello there", 64).trimmed();
  const auto h = testing::oracle_toy_forward(enc, in.token_ids, in.validity_mask);
  double raw = model.head_bias().value(0, 0);
  for (std::size_t j = 0; j < h[0].size(); ++j) {
    raw += h[0][j] * model.head_weight().value(static_cast<Eigen::Index>(j), 0);
  }
  EXPECT_NEAR(model.raw_score("good morning", "hello there", 64), raw, 1e-6);
  EXPECT_NEAR(forward(model, {"p", "good morning", "hello there", std::nullopt}, 64),
              std::clamp(raw, 0.0, 1.0), 1e-6);
}

TEST(MseLossTest, Examples) {
  const std::vector<double> a = {0, 1}, b = {1, 0};
  EXPECT_EQ(mse_loss(a, a), 0.0);
  EXPECT_EQ(mse_loss(a, b), 1.0);
  EXPECT_THROW(mse_loss(a, std::vector<double>{1}), InvalidArgument);
}

TEST(MseLossTest, MatchesLoopOracle) {
  Rng rng(3);
  std::vector<double> a(20), b(20);
  for (auto& x : a) x = rng.normal();
  for (auto& x : b) x = rng.normal();
  double sum = 0;
  for (int i = 0; i < 20; ++i) sum += (a[i] - b[i]) * (a[i] - b[i]);
  EXPECT_NEAR(mse_loss(a, b), sum / 20, 1e-12);
}

TEST(GradientTest, HeadWeightsMatchCentralDifferences) {
  RegressionModel model(toy(5), 5, 0.2, 0.3);
  const auto data = testing::synthetic_dataset(6, 9);
  const std::span<const SentencePair> batch(data.pairs());
  accumulate_gradients(model, batch, 64);
  const autograd::Matrix analytic_w = model.head_weight().grad;
  const double analytic_b = model.head_bias().grad(0, 0);

  auto loss = [&] {
    std::vector<double> raw, gold;
    for (const auto& p : batch) {
      raw.push_back(model.raw_score(p.sentence1, p.sentence2, 64));
      gold.push_back(*p.score);
    }
    return mse_loss(raw, gold);
  };
  const double h = 1e-4;
  auto& w = model.head_weight().value;
  for (Eigen::Index i = 0; i < w.rows(); ++i) {
    const double saved = w(i, 0);
    w(i, 0) = saved + h;
    const double up = loss();
    w(i, 0) = saved - h;
    const double down = loss();
    w(i, 0) = saved;
    const double numeric = (up - down) / (2 * h);
    EXPECT_NEAR(analytic_w(i, 0), numeric, 1e-3 * std::max(std::abs(numeric), 1e-6)) << i;
  }
  auto& b = model.head_bias().value(0, 0);
  const double saved = b;
  b = saved + h;
  const double up = loss();
  b = saved - h;
  const double down = loss();
  b = saved;
  EXPECT_NEAR(analytic_b, (up - down) / (2 * h), 1e-6);
}

TEST(GradientTest, EncoderGradientsArePopulated) {
  RegressionModel model(toy(5), 5, 0.2, 0.3);
  ASSERT_TRUE(model.encoder_trainable());
  const auto data = testing::synthetic_dataset(2, 9);
  accumulate_gradients(model, data.pairs(), 64);
  double norm = 0;
  for (auto* p : model.trainable_parameters()) norm += p->grad.squaredNorm();
  EXPECT_GT(norm, 0.0);
}

TEST(GradientTest, UnlabeledBatchRejected) {
  RegressionModel model(toy(), 1);
  const std::vector<SentencePair> batch = {{"a", "x", "y", std::nullopt}};
  EXPECT_THROW(accumulate_gradients(model, batch, 64), InvalidArgument);
}

TEST(TrainConfigTest, Validation) {
  TrainConfig c;
  EXPECT_NO_THROW(c.validate());
  c.early_stop_patience_epochs = 11;
  EXPECT_THROW(c.validate(), InvalidArgument);
  c = TrainConfig{};
  c.batch_size = 0;
  EXPECT_THROW(c.validate(), InvalidArgument);
  c = TrainConfig{};
  c.max_seq_len = 4;
  EXPECT_THROW(c.validate(), InvalidArgument);
}

TEST(TrainTest, RejectsEmptyOrUnlabeledTrainData) {
  EXPECT_THROW(train(Dataset(Split::kTrain, "x", {}), nullptr, TrainConfig{}, toy()),
               InvalidArgument);
  const Dataset unlabeled(Split::kTrain, "x", {{"a", "s", "t", std::nullopt}});
  EXPECT_THROW(train(unlabeled, nullptr, TrainConfig{}, toy()), InvalidArgument);
}

TEST(TrainTest, StopsEarlyWhenDevNeverImproves) {
  // A zero learning rate freezes the weights, so dev Spearman repeats
  // exactly: the first epoch sets the best and four stale epochs follow.
  const auto train_data = testing::synthetic_dataset(16, 1);
  const auto dev = testing::synthetic_dataset(8, 2, "d", Split::kDev);
  TrainConfig c;
  c.learning_rate = 0.0;
  c.max_seq_len = 64;
  const auto result = train(train_data, &dev, c, toy());
  EXPECT_TRUE(result.log.early_stopped);
  EXPECT_LT(result.log.epochs_run, 10);
  EXPECT_EQ(result.log.epochs_run, 1 + c.early_stop_patience_epochs);
}

TEST(TrainTest, ReturnsBestDevCheckpoint) {
  const auto train_data = testing::synthetic_dataset(24, 1);
  const auto dev = testing::synthetic_dataset(12, 2, "d", Split::kDev);
  TrainConfig c;
  c.epochs = 6;
  c.learning_rate = 1e-3;
  c.eval_every_steps = 1;
  c.max_seq_len = 64;
  const auto result = train(train_data, &dev, c, toy());
  ASSERT_TRUE(result.log.best_dev_spearman.has_value());
  const auto preds = predict(result.model, dev, 16, 64);
  std::vector<double> p, g;
  for (const auto& pair : dev.pairs()) {
    p.push_back(*preds.find(pair.pair_id));
    g.push_back(*pair.score);
  }
  EXPECT_NEAR(spearman(p, g), *result.log.best_dev_spearman, 1e-9);
  double max_logged = -2;
  for (const auto& e : result.log.evaluations) max_logged = std::max(max_logged, *e.dev_spearman);
  EXPECT_EQ(max_logged, *result.log.best_dev_spearman);
}

TEST(TrainTest, ReproducibleLogs) {
  const auto train_data = testing::synthetic_dataset(20, 4);
  const auto dev = testing::synthetic_dataset(8, 5, "d", Split::kDev);
  TrainConfig c;
  c.epochs = 4;
  c.early_stop_patience_epochs = 4;
  c.eval_every_steps = 1;
  c.max_seq_len = 64;
  const auto a = train(train_data, &dev, c, toy());
  const auto b = train(train_data, &dev, c, toy());
  EXPECT_EQ(a.log, b.log);
  EXPECT_EQ(a.log.to_json(), b.log.to_json());
  EXPECT_EQ(a.model.head_weight().value, b.model.head_weight().value);
}

TEST(TrainTest, LossFallsOnOverlapFixture) {
  const auto data = load_dataset(testing::source_path("data/toy/train.csv"), Split::kTrain, "toy");
  const auto result = train(data, nullptr, TrainConfig{}, toy());
  ASSERT_EQ(result.log.epoch_train_loss.size(), 10u);
  EXPECT_LT(result.log.epoch_train_loss[9], result.log.epoch_train_loss[0]);
  EXPECT_EQ(result.log.total_steps, 10 * 4);
  EXPECT_FALSE(result.log.early_stopped);
}

TEST(TrainTest, FrozenEncoderTrainsHeadOnly) {
  const auto data = testing::synthetic_dataset(16, 4);
  TrainConfig c;
  c.epochs = 4;
  c.learning_rate = 1e-2;
  c.max_seq_len = 64;
  auto result = train(data, nullptr, c, make_encoder("char-ngram", "", 1));
  EXPECT_FALSE(result.model.encoder_trainable());
  EXPECT_LT(result.log.epoch_train_loss.back(), result.log.epoch_train_loss.front());
}

TEST(PredictTest, OneScorePerPairInUnitInterval) {
  RegressionModel model(toy(), 3, 1.0, 0.5);
  const auto data = testing::synthetic_dataset(40, 8);
  const auto preds = predict(model, data, 16, 64);
  ASSERT_EQ(preds.size(), 40u);
  for (std::size_t i = 0; i < data.size(); ++i) {
    EXPECT_EQ(preds.entries()[i].pair_id, data.pairs()[i].pair_id);
    EXPECT_GE(preds.entries()[i].score, 0.0);
    EXPECT_LE(preds.entries()[i].score, 1.0);
  }
}

TEST(PredictTest, BatchingDoesNotChangeScores) {
  RegressionModel model(toy(), 3, 0.1, 0.5);
  const auto data = testing::synthetic_dataset(23, 8);
  const auto one = predict(model, data, 1, 64);
  const auto many = predict(model, data, 16, 64);
  for (std::size_t i = 0; i < one.size(); ++i) {
    EXPECT_NEAR(one.entries()[i].score, many.entries()[i].score, 1e-6);
  }
}

TEST(PredictTest, TestShapedFixtureSerializesEveryRow) {
  testing::TempDir dir;
  RegressionModel model(toy(), 3, 0.1, 0.5);
  std::vector<SentencePair> pairs;
  const auto labeled = testing::synthetic_dataset(425, 6, "ary-test");
  for (const auto& p : labeled.pairs()) {
    pairs.push_back({p.pair_id, p.sentence1, p.sentence2, std::nullopt});
  }
  const Dataset test(Split::kTest, "ary", std::move(pairs));
  save_predictions(predict(model, test, 16, 64), dir / "pred.csv");
  const auto text = testing::read_text(dir / "pred.csv");
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 426);
  EXPECT_EQ(load_predictions(dir / "pred.csv").size(), 425u);
}

TEST(RegressionModelTest, SaveLoadRoundTrip) {
  testing::TempDir dir;
  RegressionModel model(toy(), 3, 0.3, 0.4);
  model.save(dir / "model");
  const auto loaded = RegressionModel::load(dir / "model");
  const auto data = testing::synthetic_dataset(5, 2);
  EXPECT_EQ(predict(model, data, 4, 64), predict(loaded, data, 4, 64));
  EXPECT_THROW(RegressionModel::load(dir / "missing"), NotFound);
}

TEST(RegressionModelTest, CopyIsDeep) {
  RegressionModel a(toy(), 3);
  RegressionModel b = a;
  b.head_bias().value(0, 0) = 9;
  dynamic_cast<ToyTransformerEncoder&>(b.encoder()).parameter("embeddings.token").value.setZero();
  EXPECT_NE(a.head_bias().value(0, 0), 9);
  EXPECT_NE(a.encoder().serialize(), b.encoder().serialize());
}

}  // namespace
}  // namespace semrel
