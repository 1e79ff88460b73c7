#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "semrel/autograd.hpp"
#include "semrel/corpus.hpp"
#include "semrel/encoder.hpp"
#include "semrel/evaluation.hpp"

namespace semrel {

struct TrainConfig {
  int epochs = 10;
  int early_stop_patience_epochs = 4;
  int batch_size = 16;
  int max_seq_len = 512;
  double learning_rate = 2e-5;
  int eval_every_steps = 50;
  std::uint64_t seed = 42;

  // Throws InvalidArgument unless every field is positive and
  // patience <= epochs.
  void validate() const;

  bool operator==(const TrainConfig&) const = default;
};

// Cross-encoder: the pair is encoded jointly as [CLS] s1 [SEP] s2 [SEP] and a
// single linear neuron reads the CLS row of the final layer.
class RegressionModel {
 public:
  // Head weights drawn from N(0, head_init_stddev) with `seed`; bias set to
  // `initial_bias`.
  RegressionModel(std::unique_ptr<Encoder> encoder, std::uint64_t seed,
                  double head_init_stddev = 0.02, double initial_bias = 0.0);

  RegressionModel(const RegressionModel& other);
  RegressionModel& operator=(const RegressionModel& other);
  RegressionModel(RegressionModel&&) noexcept = default;
  RegressionModel& operator=(RegressionModel&&) noexcept = default;

  const Encoder& encoder() const { return *encoder_; }
  Encoder& encoder() { return *encoder_; }
  bool encoder_trainable() const;

  autograd::Parameter& head_weight() { return head_weight_; }  // d x 1
  const autograd::Parameter& head_weight() const { return head_weight_; }
  autograd::Parameter& head_bias() { return head_bias_; }  // 1 x 1
  const autograd::Parameter& head_bias() const { return head_bias_; }

  // Encoder parameters (when trainable) followed by the head.
  std::vector<autograd::Parameter*> trainable_parameters();

  // Unclamped linear output, as seen by the loss.
  double raw_score(std::string_view s1, std::string_view s2, std::size_t max_len) const;

  // Saves encoder.json and head.json into `dir` (created if missing).
  void save(const std::filesystem::path& dir) const;
  static RegressionModel load(const std::filesystem::path& dir);

 private:
  std::unique_ptr<Encoder> encoder_;
  autograd::Parameter head_weight_;
  autograd::Parameter head_bias_;
};

// Inference score: raw head output clamped to [0, 1].
double forward(const RegressionModel& model, const SentencePair& pair, std::size_t max_len);

// Mean of squared differences; throws InvalidArgument on length mismatch or
// empty input.
double mse_loss(std::span<const double> predicted, std::span<const double> gold);

// Zeroes the trainable gradients, runs forward/backward of the batch MSE on
// raw outputs, leaves d(loss)/d(param) in each Parameter::grad and returns
// the loss. Every pair must be labeled.
double accumulate_gradients(RegressionModel& model, std::span<const SentencePair> batch,
                            std::size_t max_len);

struct TrainLogEntry {
  int step = 0;
  int epoch = 0;
  double train_loss = 0.0;  // mean batch loss since the previous entry
  std::optional<double> dev_spearman;
  std::optional<double> dev_r_squared;
  std::optional<double> dev_mse;

  bool operator==(const TrainLogEntry&) const = default;
};

struct TrainLog {
  std::vector<TrainLogEntry> evaluations;
  std::vector<double> epoch_train_loss;  // mean batch loss per epoch
  int epochs_run = 0;
  int total_steps = 0;
  bool early_stopped = false;
  std::optional<int> best_step;
  std::optional<double> best_dev_spearman;

  std::string to_json() const;
  bool operator==(const TrainLog&) const = default;
};

struct TrainResult {
  RegressionModel model;
  TrainLog log;
};

// Fine-tunes with Adam on batch MSE, reshuffling the training pairs every
// epoch from `config.seed`. With a dev set, evaluates every
// eval_every_steps steps and at every epoch end, stops after
// early_stop_patience_epochs consecutive epochs without a new best dev
// Spearman and returns the best-scoring weights; without one, returns the
// final weights.
TrainResult train(const Dataset& train_data, const Dataset* dev_data, const TrainConfig& config,
                  std::unique_ptr<Encoder> encoder);

// One clamped score per pair, processed `batch_size` pairs at a time.
PredictionSet predict(const RegressionModel& model, const Dataset& data, std::size_t batch_size,
                      std::size_t max_len);

}  // namespace semrel
