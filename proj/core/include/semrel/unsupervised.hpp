#pragma once

#include <Eigen/Core>

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "semrel/corpus.hpp"
#include "semrel/encoder.hpp"
#include "semrel/evaluation.hpp"

namespace semrel {

struct ScorerConfig {
  Pooling pooling = Pooling::kAverage;
  bool rescale_to_unit_interval = true;
  std::size_t max_seq_len = 512;
};

// A pair without its label. The unsupervised scorer only accepts these, so
// gold scores cannot reach it.
struct TextPair {
  std::string pair_id;
  std::string sentence1;
  std::string sentence2;
};

std::vector<TextPair> strip_labels(const Dataset& data);

// Throws InvalidArgument on dimension mismatch or a zero-norm argument.
double cosine_similarity(const Eigen::VectorXd& u, const Eigen::VectorXd& v);

// [CLS] s [SEP] through the encoder, pooled per config. The encoder must be
// in inference mode.
Eigen::VectorXd embed_sentence(std::string_view sentence, const Encoder& encoder,
                               const ScorerConfig& config);

// Cosine of the two independently embedded sentences, mapped through
// (1 + cos) / 2 when config.rescale_to_unit_interval.
double score_pair(std::string_view s1, std::string_view s2, const Encoder& encoder,
                  const ScorerConfig& config);

// score_pair over every pair, `batch_size` pairs per chunk, in input order.
PredictionSet score_dataset(std::span<const TextPair> pairs, const Encoder& encoder,
                            const ScorerConfig& config, std::size_t batch_size = 32);

// Mean pairwise cosine over all C(n, 2) pooled embeddings. n >= 2.
double anisotropy_estimate(std::span<const std::string> sentences, const Encoder& encoder,
                           const ScorerConfig& config);

}  // namespace semrel
