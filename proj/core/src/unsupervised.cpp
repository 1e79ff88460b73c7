#include "semrel/unsupervised.hpp"

#include <algorithm>
#include <cmath>

#include "semrel/error.hpp"

namespace semrel {

std::vector<TextPair> strip_labels(const Dataset& data) {
  std::vector<TextPair> out;
  out.reserve(data.size());
  for (const auto& p : data.pairs()) out.push_back(TextPair{p.pair_id, p.sentence1, p.sentence2});
  return out;
}

double cosine_similarity(const Eigen::VectorXd& u, const Eigen::VectorXd& v) {
  if (u.size() != v.size()) {
    throw InvalidArgument("cosine of vectors with different dimensions");
  }
  const double nu = u.norm();
  const double nv = v.norm();
  if (nu == 0.0 || nv == 0.0) throw InvalidArgument("cosine undefined for a zero-norm vector");
  return std::clamp(u.dot(v) / (nu * nv), -1.0, 1.0);
}

Eigen::VectorXd embed_sentence(std::string_view sentence, const Encoder& encoder,
                               const ScorerConfig& config) {
  if (encoder.mode() != EncoderMode::kInference) {
    throw InvalidArgument("unsupervised scoring needs an encoder in inference mode");
  }
  if (sentence.empty()) throw InvalidArgument("cannot embed an empty sentence");
  const auto input = encoder.tokenize_single(sentence, config.max_seq_len).trimmed();
  return pool(encoder.encode(input), config.pooling);
}

double score_pair(std::string_view s1, std::string_view s2, const Encoder& encoder,
                  const ScorerConfig& config) {
  const double cos = cosine_similarity(embed_sentence(s1, encoder, config),
                                       embed_sentence(s2, encoder, config));
  return config.rescale_to_unit_interval ? 0.5 * (1.0 + cos) : cos;
}

PredictionSet score_dataset(std::span<const TextPair> pairs, const Encoder& encoder,
                            const ScorerConfig& config, std::size_t batch_size) {
  if (batch_size == 0) throw InvalidArgument("batch_size must be positive");
  PredictionSet out;
  for (std::size_t start = 0; start < pairs.size(); start += batch_size) {
    const auto end = std::min(pairs.size(), start + batch_size);
    for (std::size_t i = start; i < end; ++i) {
      out.add(pairs[i].pair_id, score_pair(pairs[i].sentence1, pairs[i].sentence2, encoder, config));
    }
  }
  return out;
}

double anisotropy_estimate(std::span<const std::string> sentences, const Encoder& encoder,
                           const ScorerConfig& config) {
  if (sentences.size() < 2) throw InvalidArgument("anisotropy needs at least two sentences");
  std::vector<Eigen::VectorXd> unit;
  unit.reserve(sentences.size());
  for (const auto& s : sentences) {
    Eigen::VectorXd e = embed_sentence(s, encoder, config);
    const double n = e.norm();
    if (n == 0.0) throw InvalidArgument("zero-norm embedding for '" + s + "'");
    unit.push_back(e / n);
  }
  // Sum of pairwise dots = (|sum|^2 - n) / 2 for unit vectors.
  Eigen::VectorXd total = Eigen::VectorXd::Zero(unit.front().size());
  for (const auto& e : unit) total += e;
  const double n = static_cast<double>(unit.size());
  const double pair_sum = 0.5 * (total.squaredNorm() - n);
  return pair_sum / (0.5 * n * (n - 1.0));
}

}  // namespace semrel
