#pragma once

#include <Eigen/Core>

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "semrel/autograd.hpp"
#include "semrel/tokenizer.hpp"

namespace semrel {

// Final-layer token vectors (one row per input position) and the input's
// validity mask.
struct EmbeddingMatrix {
  Eigen::MatrixXd vectors;
  std::vector<bool> validity_mask;

  std::size_t rows() const noexcept { return static_cast<std::size_t>(vectors.rows()); }
  std::size_t dim() const noexcept { return static_cast<std::size_t>(vectors.cols()); }
};

enum class Pooling { kCls, kAverage, kMax, kMin };

std::string_view to_string(Pooling pooling);
// Accepts cls, avg/average/mean, max, min (any case).
Pooling parse_pooling(std::string_view name);

// CLS takes row 0; the others reduce over mask-valid rows only. Throws
// InvalidArgument when no row is valid.
Eigen::VectorXd pool(const EmbeddingMatrix& embeddings, Pooling pooling);

enum class EncoderMode { kInference, kFineTune };

// A text encoder with its own tokenizer. encode() is const and safe to call
// concurrently; switching mode or mutating parameters is not.
class Encoder {
 public:
  virtual ~Encoder() = default;

  virtual std::string name() const = 0;
  virtual std::size_t hidden_size() const = 0;
  virtual std::size_t max_positions() const = 0;

  virtual TokenizedInput tokenize_pair(std::string_view s1, std::string_view s2,
                                       std::size_t max_len) const = 0;
  virtual TokenizedInput tokenize_single(std::string_view s, std::size_t max_len) const = 0;

  // Throws InvalidArgument when the input exceeds max_positions().
  virtual EmbeddingMatrix encode(const TokenizedInput& input) const = 0;

  // JSON checkpoint understood by make_encoder(name, path).
  virtual std::string serialize() const = 0;
  virtual std::unique_ptr<Encoder> clone() const = 0;

  EncoderMode mode() const noexcept { return mode_; }
  void set_mode(EncoderMode mode) noexcept { mode_ = mode; }

 private:
  EncoderMode mode_ = EncoderMode::kInference;
};

// Encoders whose weights can be fine-tuned through an autograd tape.
class DifferentiableEncoder : public Encoder {
 public:
  // L x hidden_size() node on `tape`, numerically identical to encode().
  virtual autograd::Var forward(autograd::Tape& tape, const TokenizedInput& input) = 0;
  virtual std::vector<autograd::Parameter*> parameters() = 0;
};

struct ToyEncoderConfig {
  std::size_t vocab_size = 1024;
  std::size_t hidden_size = 32;
  std::size_t num_layers = 2;
  std::size_t num_heads = 2;
  std::size_t ffn_size = 128;
  std::size_t max_positions = 512;
  double init_stddev = 0.3;
  double layer_norm_eps = 1e-12;
};

// Post-norm transformer encoder over the character tokenizer:
//   h0 = LN(tok[id] + pos[i])
//   a  = LN(h + MHA(h) W_o + b_o)        keys restricted to valid positions
//   h' = LN(a + GELU(a W_1 + b_1) W_2 + b_2)
// Randomly initialized from a seed; used for tests and as the default
// fine-tunable backbone.
class ToyTransformerEncoder final : public DifferentiableEncoder {
 public:
  ToyTransformerEncoder(ToyEncoderConfig config, std::uint64_t seed);

  static std::unique_ptr<ToyTransformerEncoder> deserialize(std::string_view json);

  std::string name() const override { return "toy"; }
  std::size_t hidden_size() const override { return config_.hidden_size; }
  std::size_t max_positions() const override { return config_.max_positions; }
  const ToyEncoderConfig& config() const noexcept { return config_; }

  TokenizedInput tokenize_pair(std::string_view s1, std::string_view s2,
                               std::size_t max_len) const override;
  TokenizedInput tokenize_single(std::string_view s, std::size_t max_len) const override;
  EmbeddingMatrix encode(const TokenizedInput& input) const override;
  std::string serialize() const override;
  std::unique_ptr<Encoder> clone() const override;

  autograd::Var forward(autograd::Tape& tape, const TokenizedInput& input) override;
  std::vector<autograd::Parameter*> parameters() override;

  // Named access for tests and checkpoint code; throws NotFound.
  autograd::Parameter& parameter(std::string_view name);
  const autograd::Parameter& parameter(std::string_view name) const;

 private:
  // With track_gradients the tape links to params_ so backward() fills
  // their grads; otherwise parameter values enter as constants.
  autograd::Var forward_impl(autograd::Tape& tape, const TokenizedInput& input,
                             bool track_gradients) const;
  std::size_t index_of(std::string_view name) const;

  ToyEncoderConfig config_;
  CharTokenizer tokenizer_;
  std::vector<autograd::Parameter> params_;
};

// Bag-of-character-n-gram mock: row i is the one-hot hash bucket of the
// n-gram of token ids ending at position i. Average pooling therefore yields
// an n-gram histogram. Not trainable.
class CharNgramEncoder final : public Encoder {
 public:
  explicit CharNgramEncoder(std::size_t dim = 512, std::size_t n = 3,
                            std::size_t max_positions = 512);

  std::string name() const override { return "char-ngram"; }
  std::size_t hidden_size() const override { return dim_; }
  std::size_t max_positions() const override { return max_positions_; }

  TokenizedInput tokenize_pair(std::string_view s1, std::string_view s2,
                               std::size_t max_len) const override;
  TokenizedInput tokenize_single(std::string_view s, std::size_t max_len) const override;
  EmbeddingMatrix encode(const TokenizedInput& input) const override;
  std::string serialize() const override;
  std::unique_ptr<Encoder> clone() const override;

 private:
  std::size_t dim_;
  std::size_t n_;
  std::size_t max_positions_;
  CharTokenizer tokenizer_;
};

// `toy` (random init from seed, or the checkpoint at `path` when non-empty)
// and `char-ngram`. Throws InvalidArgument for unknown names.
std::unique_ptr<Encoder> make_encoder(std::string_view name, const std::filesystem::path& path,
                                      std::uint64_t seed);

}  // namespace semrel
