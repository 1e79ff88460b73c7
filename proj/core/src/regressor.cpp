#include "semrel/regressor.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <json.hpp>

#include "semrel/error.hpp"
#include "semrel/io.hpp"
#include "semrel/random.hpp"

namespace semrel {
namespace {

using autograd::Matrix;
using autograd::Parameter;
using autograd::Tape;
using autograd::Var;
using nlohmann::json;

constexpr double kAdamBeta1 = 0.9;
constexpr double kAdamBeta2 = 0.999;
constexpr double kAdamEps = 1e-8;

class Adam {
 public:
  Adam(std::vector<Parameter*> params, double learning_rate)
      : params_(std::move(params)), learning_rate_(learning_rate) {
    for (const auto* p : params_) {
      m_.push_back(Matrix::Zero(p->value.rows(), p->value.cols()));
      v_.push_back(Matrix::Zero(p->value.rows(), p->value.cols()));
    }
  }

  void step() {
    ++t_;
    const double c1 = 1.0 - std::pow(kAdamBeta1, t_);
    const double c2 = 1.0 - std::pow(kAdamBeta2, t_);
    for (std::size_t i = 0; i < params_.size(); ++i) {
      const Matrix& g = params_[i]->grad;
      m_[i] = kAdamBeta1 * m_[i] + (1.0 - kAdamBeta1) * g;
      v_[i] = kAdamBeta2 * v_[i] + (1.0 - kAdamBeta2) * g.cwiseProduct(g);
      params_[i]->value.array() -=
          learning_rate_ * (m_[i].array() / c1) / ((v_[i].array() / c2).sqrt() + kAdamEps);
    }
  }

 private:
  std::vector<Parameter*> params_;
  std::vector<Matrix> m_;
  std::vector<Matrix> v_;
  double learning_rate_;
  int t_ = 0;
};

std::vector<Matrix> snapshot(const std::vector<Parameter*>& params) {
  std::vector<Matrix> out;
  out.reserve(params.size());
  for (const auto* p : params) out.push_back(p->value);
  return out;
}

void restore(const std::vector<Parameter*>& params, const std::vector<Matrix>& values) {
  for (std::size_t i = 0; i < params.size(); ++i) params[i]->value = values[i];
}

template <typename F>
std::optional<double> metric_or_nullopt(F&& f) {
  try {
    return f();
  } catch (const DegenerateInput&) {
    return std::nullopt;
  }
}

json optional_to_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

}  // namespace

void TrainConfig::validate() const {
  if (epochs <= 0 || early_stop_patience_epochs <= 0 || batch_size <= 0 || max_seq_len <= 0 ||
      !(learning_rate >= 0.0) || eval_every_steps <= 0) {
    throw InvalidArgument("train config values must be positive");
  }
  if (early_stop_patience_epochs > epochs) {
    throw InvalidArgument("early_stop_patience_epochs must not exceed epochs");
  }
  if (max_seq_len < 8) throw InvalidArgument("max_seq_len must be at least 8");
}

RegressionModel::RegressionModel(std::unique_ptr<Encoder> encoder, std::uint64_t seed,
                                 double head_init_stddev, double initial_bias)
    : encoder_(std::move(encoder)) {
  if (!encoder_) throw InvalidArgument("regression model needs an encoder");
  Rng rng(seed);
  Matrix w(static_cast<Eigen::Index>(encoder_->hidden_size()), 1);
  for (Eigen::Index i = 0; i < w.rows(); ++i) w(i, 0) = rng.normal(0.0, head_init_stddev);
  head_weight_ = Parameter("head.weight", std::move(w));
  head_bias_ = Parameter("head.bias", Matrix::Constant(1, 1, initial_bias));
}

RegressionModel::RegressionModel(const RegressionModel& other)
    : encoder_(other.encoder_->clone()),
      head_weight_(other.head_weight_),
      head_bias_(other.head_bias_) {}

RegressionModel& RegressionModel::operator=(const RegressionModel& other) {
  if (this != &other) {
    encoder_ = other.encoder_->clone();
    head_weight_ = other.head_weight_;
    head_bias_ = other.head_bias_;
  }
  return *this;
}

bool RegressionModel::encoder_trainable() const {
  return dynamic_cast<const DifferentiableEncoder*>(encoder_.get()) != nullptr;
}

std::vector<Parameter*> RegressionModel::trainable_parameters() {
  std::vector<Parameter*> params;
  if (auto* diff = dynamic_cast<DifferentiableEncoder*>(encoder_.get())) {
    params = diff->parameters();
  }
  params.push_back(&head_weight_);
  params.push_back(&head_bias_);
  return params;
}

double RegressionModel::raw_score(std::string_view s1, std::string_view s2,
                                  std::size_t max_len) const {
  const auto input = encoder_->tokenize_pair(s1, s2, max_len).trimmed();
  const auto embeddings = encoder_->encode(input);
  const Eigen::VectorXd cls = pool(embeddings, Pooling::kCls);
  return cls.dot(head_weight_.value.col(0)) + head_bias_.value(0, 0);
}

void RegressionModel::save(const std::filesystem::path& dir) const {
  std::filesystem::create_directories(dir);
  io::write_file_atomic(dir / "encoder.json", encoder_->serialize());
  std::vector<double> weight(head_weight_.value.data(),
                             head_weight_.value.data() + head_weight_.value.size());
  const json head{{"encoder", encoder_->name()},
                  {"weight", std::move(weight)},
                  {"bias", head_bias_.value(0, 0)}};
  io::write_file_atomic(dir / "head.json", head.dump());
}

RegressionModel RegressionModel::load(const std::filesystem::path& dir) {
  json head;
  try {
    head = json::parse(io::read_file(dir / "head.json"));
  } catch (const json::exception& e) {
    throw InvalidArgument(std::string("corrupt head.json: ") + e.what());
  }
  auto encoder = make_encoder(head.at("encoder").get<std::string>(), dir / "encoder.json", 0);
  RegressionModel model(std::move(encoder), 0);
  const auto weight = head.at("weight").get<std::vector<double>>();
  if (weight.size() != static_cast<std::size_t>(model.head_weight_.value.rows())) {
    throw InvalidArgument("head weight size does not match encoder hidden size");
  }
  for (std::size_t i = 0; i < weight.size(); ++i) {
    model.head_weight_.value(static_cast<Eigen::Index>(i), 0) = weight[i];
  }
  model.head_bias_.value(0, 0) = head.at("bias").get<double>();
  return model;
}

double forward(const RegressionModel& model, const SentencePair& pair, std::size_t max_len) {
  return std::clamp(model.raw_score(pair.sentence1, pair.sentence2, max_len), 0.0, 1.0);
}

double mse_loss(std::span<const double> predicted, std::span<const double> gold) {
  return mean_squared_error(predicted, gold);
}

double accumulate_gradients(RegressionModel& model, std::span<const SentencePair> batch,
                            std::size_t max_len) {
  if (batch.empty()) throw InvalidArgument("empty batch");
  const auto params = model.trainable_parameters();
  for (auto* p : params) p->zero_grad();
  auto* diff = dynamic_cast<DifferentiableEncoder*>(&model.encoder());
  const double weight = 1.0 / static_cast<double>(batch.size());
  double loss = 0.0;
  for (const auto& pair : batch) {
    if (!pair.score) throw InvalidArgument("training pair '" + pair.pair_id + "' has no score");
    const auto input = model.encoder().tokenize_pair(pair.sentence1, pair.sentence2, max_len).trimmed();
    Tape tape;
    const Var hidden = diff != nullptr ? diff->forward(tape, input)
                                       : tape.constant(model.encoder().encode(input).vectors);
    const Var cls = tape.slice_rows(hidden, 0, 1);
    const Var raw = tape.add(tape.matmul(cls, tape.parameter(model.head_weight())),
                             tape.parameter(model.head_bias()));
    const Var residual = tape.subtract(raw, tape.constant(Matrix::Constant(1, 1, *pair.score)));
    const Var example_loss = tape.scale(tape.sum_squares(residual), weight);
    loss += tape.value(example_loss)(0, 0);
    tape.backward(example_loss);
  }
  return loss;
}

std::string TrainLog::to_json() const {
  json evals = json::array();
  for (const auto& e : evaluations) {
    evals.push_back(json{{"step", e.step},
                         {"epoch", e.epoch},
                         {"train_loss", e.train_loss},
                         {"dev_spearman", optional_to_json(e.dev_spearman)},
                         {"dev_r_squared", optional_to_json(e.dev_r_squared)},
                         {"dev_mse", optional_to_json(e.dev_mse)}});
  }
  json j{{"evaluations", std::move(evals)},
         {"epoch_train_loss", epoch_train_loss},
         {"epochs_run", epochs_run},
         {"total_steps", total_steps},
         {"early_stopped", early_stopped},
         {"best_step", best_step ? json(*best_step) : json(nullptr)},
         {"best_dev_spearman", optional_to_json(best_dev_spearman)}};
  return j.dump(2);
}

TrainResult train(const Dataset& train_data, const Dataset* dev_data, const TrainConfig& config,
                  std::unique_ptr<Encoder> encoder) {
  config.validate();
  if (train_data.empty()) throw InvalidArgument("training set is empty");
  if (!train_data.fully_labeled()) throw InvalidArgument("training set has unlabeled pairs");
  if (dev_data != nullptr && (dev_data->empty() || !dev_data->fully_labeled())) {
    throw InvalidArgument("dev set must be non-empty and fully labeled");
  }

  double label_mean = 0.0;
  for (const auto& p : train_data.pairs()) label_mean += *p.score;
  label_mean /= static_cast<double>(train_data.size());

  // Head scaled to the CLS width so its initial output varies on the order of
  // the labels; starting at the label mean removes the constant offset.
  const double head_stddev = 1.0 / std::sqrt(static_cast<double>(encoder->hidden_size()));
  RegressionModel model(std::move(encoder), config.seed, head_stddev, label_mean);
  model.encoder().set_mode(EncoderMode::kFineTune);
  const auto params = model.trainable_parameters();
  Adam optimizer(params, config.learning_rate);
  Rng rng(config.seed);
  const auto max_len = static_cast<std::size_t>(config.max_seq_len);
  const auto batch_size = static_cast<std::size_t>(config.batch_size);

  std::vector<double> dev_gold;
  if (dev_data != nullptr) {
    for (const auto& p : dev_data->pairs()) dev_gold.push_back(*p.score);
  }

  TrainLog log;
  std::optional<std::vector<Matrix>> best_weights;
  double best = -std::numeric_limits<double>::infinity();
  double loss_since_log = 0.0;
  int batches_since_log = 0;
  int last_logged_step = 0;
  int stale_epochs = 0;

  auto log_evaluation = [&](int epoch) -> bool {
    TrainLogEntry entry;
    entry.step = log.total_steps;
    entry.epoch = epoch;
    entry.train_loss = batches_since_log > 0 ? loss_since_log / batches_since_log : 0.0;
    loss_since_log = 0.0;
    batches_since_log = 0;
    last_logged_step = log.total_steps;
    bool improved = false;
    if (dev_data != nullptr) {
      model.encoder().set_mode(EncoderMode::kInference);
      const auto preds = predict(model, *dev_data, batch_size, max_len);
      model.encoder().set_mode(EncoderMode::kFineTune);
      std::vector<double> dev_pred;
      for (const auto& p : dev_data->pairs()) dev_pred.push_back(*preds.find(p.pair_id));
      entry.dev_spearman = metric_or_nullopt([&] { return spearman(dev_pred, dev_gold); });
      entry.dev_r_squared = metric_or_nullopt([&] { return r_squared(dev_pred, dev_gold); });
      entry.dev_mse = mean_squared_error(dev_pred, dev_gold);
      if (entry.dev_spearman && *entry.dev_spearman > best) {
        best = *entry.dev_spearman;
        best_weights = snapshot(params);
        log.best_step = log.total_steps;
        log.best_dev_spearman = best;
        improved = true;
      }
    }
    log.evaluations.push_back(entry);
    return improved;
  };

  std::vector<std::size_t> order(train_data.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<SentencePair> batch;
  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    rng.shuffle(order);
    double epoch_loss = 0.0;
    int epoch_batches = 0;
    bool improved = false;
    for (std::size_t start = 0; start < order.size(); start += batch_size) {
      batch.clear();
      for (std::size_t i = start; i < std::min(order.size(), start + batch_size); ++i) {
        batch.push_back(train_data.pairs()[order[i]]);
      }
      const double loss = accumulate_gradients(model, batch, max_len);
      optimizer.step();
      ++log.total_steps;
      epoch_loss += loss;
      ++epoch_batches;
      loss_since_log += loss;
      ++batches_since_log;
      if (log.total_steps % config.eval_every_steps == 0) improved |= log_evaluation(epoch);
    }
    if (dev_data != nullptr && last_logged_step != log.total_steps) improved |= log_evaluation(epoch);
    log.epoch_train_loss.push_back(epoch_loss / epoch_batches);
    log.epochs_run = epoch;
    if (dev_data != nullptr) {
      stale_epochs = improved ? 0 : stale_epochs + 1;
      if (stale_epochs >= config.early_stop_patience_epochs) {
        log.early_stopped = epoch < config.epochs;
        break;
      }
    }
  }
  if (best_weights) restore(params, *best_weights);
  model.encoder().set_mode(EncoderMode::kInference);
  return TrainResult{std::move(model), std::move(log)};
}

PredictionSet predict(const RegressionModel& model, const Dataset& data, std::size_t batch_size,
                      std::size_t max_len) {
  if (batch_size == 0) throw InvalidArgument("batch_size must be positive");
  PredictionSet out;
  const auto& pairs = data.pairs();
  for (std::size_t start = 0; start < pairs.size(); start += batch_size) {
    const auto end = std::min(pairs.size(), start + batch_size);
    for (std::size_t i = start; i < end; ++i) {
      out.add(pairs[i].pair_id, forward(model, pairs[i], max_len));
    }
  }
  return out;
}

}  // namespace semrel
