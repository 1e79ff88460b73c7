#include <cmath>
#include <numeric>

#include <json.hpp>

#include "semrel/encoder.hpp"
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

constexpr std::string_view kCheckpointFormat = "semrel-encoder/1";

Matrix random_matrix(Rng& rng, std::size_t rows, std::size_t cols, double stddev) {
  Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = rng.normal(0.0, stddev);
  }
  return m;
}

Matrix zeros(std::size_t rows, std::size_t cols) {
  return Matrix::Zero(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
}

Matrix ones(std::size_t rows, std::size_t cols) {
  return Matrix::Ones(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
}

std::string layer_prefix(std::size_t layer) { return "layer" + std::to_string(layer) + "."; }

void check_length(const TokenizedInput& input, std::size_t capacity) {
  if (input.token_ids.empty()) throw InvalidArgument("cannot encode an empty token sequence");
  if (input.token_ids.size() != input.validity_mask.size()) {
    throw InvalidArgument("token ids and validity mask differ in length");
  }
  if (input.token_ids.size() > capacity) {
    throw InvalidArgument("sequence of " + std::to_string(input.token_ids.size()) +
                          " tokens exceeds encoder capacity " + std::to_string(capacity));
  }
}

json config_to_json(const ToyEncoderConfig& c) {
  return json{{"vocab_size", c.vocab_size},     {"hidden_size", c.hidden_size},
              {"num_layers", c.num_layers},     {"num_heads", c.num_heads},
              {"ffn_size", c.ffn_size},         {"max_positions", c.max_positions},
              {"init_stddev", c.init_stddev},   {"layer_norm_eps", c.layer_norm_eps}};
}

ToyEncoderConfig config_from_json(const json& j) {
  ToyEncoderConfig c;
  c.vocab_size = j.value("vocab_size", c.vocab_size);
  c.hidden_size = j.value("hidden_size", c.hidden_size);
  c.num_layers = j.value("num_layers", c.num_layers);
  c.num_heads = j.value("num_heads", c.num_heads);
  c.ffn_size = j.value("ffn_size", c.ffn_size);
  c.max_positions = j.value("max_positions", c.max_positions);
  c.init_stddev = j.value("init_stddev", c.init_stddev);
  c.layer_norm_eps = j.value("layer_norm_eps", c.layer_norm_eps);
  return c;
}

}  // namespace

ToyTransformerEncoder::ToyTransformerEncoder(ToyEncoderConfig config, std::uint64_t seed)
    : config_(config), tokenizer_(config.vocab_size) {
  if (config_.hidden_size == 0 || config_.num_heads == 0 ||
      config_.hidden_size % config_.num_heads != 0) {
    throw InvalidArgument("hidden_size must be a positive multiple of num_heads");
  }
  if (config_.num_layers == 0 || config_.ffn_size == 0 || config_.max_positions < 2) {
    throw InvalidArgument("toy encoder needs at least one layer, ffn_size > 0, max_positions >= 2");
  }
  Rng rng(seed);
  const auto d = config_.hidden_size;
  const auto sd = config_.init_stddev;
  params_.emplace_back("embeddings.token", random_matrix(rng, config_.vocab_size, d, sd));
  params_.emplace_back("embeddings.position", random_matrix(rng, config_.max_positions, d, sd));
  params_.emplace_back("embeddings.ln.gain", ones(1, d));
  params_.emplace_back("embeddings.ln.bias", zeros(1, d));
  for (std::size_t l = 0; l < config_.num_layers; ++l) {
    const auto p = layer_prefix(l);
    for (const char* proj : {"query", "key", "value", "output"}) {
      params_.emplace_back(p + "attention." + proj + ".weight", random_matrix(rng, d, d, sd));
      params_.emplace_back(p + "attention." + proj + ".bias", zeros(1, d));
    }
    params_.emplace_back(p + "attention.ln.gain", ones(1, d));
    params_.emplace_back(p + "attention.ln.bias", zeros(1, d));
    params_.emplace_back(p + "ffn.in.weight", random_matrix(rng, d, config_.ffn_size, sd));
    params_.emplace_back(p + "ffn.in.bias", zeros(1, config_.ffn_size));
    params_.emplace_back(p + "ffn.out.weight", random_matrix(rng, config_.ffn_size, d, sd));
    params_.emplace_back(p + "ffn.out.bias", zeros(1, d));
    params_.emplace_back(p + "ffn.ln.gain", ones(1, d));
    params_.emplace_back(p + "ffn.ln.bias", zeros(1, d));
  }
}

std::size_t ToyTransformerEncoder::index_of(std::string_view name) const {
  for (std::size_t i = 0; i < params_.size(); ++i) {
    if (params_[i].name == name) return i;
  }
  throw NotFound("no parameter named '" + std::string(name) + "'");
}

autograd::Parameter& ToyTransformerEncoder::parameter(std::string_view name) {
  return params_[index_of(name)];
}

const autograd::Parameter& ToyTransformerEncoder::parameter(std::string_view name) const {
  return params_[index_of(name)];
}

std::vector<autograd::Parameter*> ToyTransformerEncoder::parameters() {
  std::vector<autograd::Parameter*> out;
  out.reserve(params_.size());
  for (auto& p : params_) out.push_back(&p);
  return out;
}

TokenizedInput ToyTransformerEncoder::tokenize_pair(std::string_view s1, std::string_view s2,
                                                    std::size_t max_len) const {
  return tokenizer_.encode_pair(s1, s2, max_len);
}

TokenizedInput ToyTransformerEncoder::tokenize_single(std::string_view s,
                                                      std::size_t max_len) const {
  return tokenizer_.encode_single(s, max_len);
}

Var ToyTransformerEncoder::forward_impl(Tape& tape, const TokenizedInput& input,
                                        bool track_gradients) const {
  check_length(input, config_.max_positions);
  auto bind = [&](std::string_view name) {
    const auto i = index_of(name);
    // Only the non-const forward() asks for tracking, so the object is
    // mutable whenever the cast is taken.
    return track_gradients ? tape.parameter(const_cast<Parameter&>(params_[i]))
                           : tape.constant(params_[i].value);
  };
  const double eps = config_.layer_norm_eps;
  const auto length = input.token_ids.size();
  const auto d = static_cast<Eigen::Index>(config_.hidden_size);
  const auto head_dim = d / static_cast<Eigen::Index>(config_.num_heads);
  const double score_scale = 1.0 / std::sqrt(static_cast<double>(head_dim));

  std::vector<TokenId> positions(length);
  std::iota(positions.begin(), positions.end(), 0);
  Var h = tape.add(tape.gather_rows(bind("embeddings.token"), input.token_ids),
                   tape.gather_rows(bind("embeddings.position"), positions));
  h = tape.layer_norm(h, bind("embeddings.ln.gain"), bind("embeddings.ln.bias"), eps);

  for (std::size_t l = 0; l < config_.num_layers; ++l) {
    const auto p = layer_prefix(l);
    auto project = [&](Var x, const std::string& what) {
      return tape.add_row(tape.matmul(x, bind(p + what + ".weight")), bind(p + what + ".bias"));
    };
    const Var q = project(h, "attention.query");
    const Var k = project(h, "attention.key");
    const Var v = project(h, "attention.value");
    std::vector<Var> heads;
    for (Eigen::Index head = 0; head < static_cast<Eigen::Index>(config_.num_heads); ++head) {
      const Var qh = tape.slice_cols(q, head * head_dim, head_dim);
      const Var kh = tape.slice_cols(k, head * head_dim, head_dim);
      const Var vh = tape.slice_cols(v, head * head_dim, head_dim);
      const Var scores = tape.scale(tape.matmul_transposed(qh, kh), score_scale);
      const Var weights = tape.masked_softmax_rows(scores, input.validity_mask);
      heads.push_back(tape.matmul(weights, vh));
    }
    const Var context = tape.concat_cols(heads);
    const Var attended = project(context, "attention.output");
    const Var a = tape.layer_norm(tape.add(h, attended), bind(p + "attention.ln.gain"),
                                  bind(p + "attention.ln.bias"), eps);
    const Var inner = tape.gelu(project(a, "ffn.in"));
    const Var ffn = project(inner, "ffn.out");
    h = tape.layer_norm(tape.add(a, ffn), bind(p + "ffn.ln.gain"), bind(p + "ffn.ln.bias"), eps);
  }
  return h;
}

Var ToyTransformerEncoder::forward(Tape& tape, const TokenizedInput& input) {
  return forward_impl(tape, input, true);
}

EmbeddingMatrix ToyTransformerEncoder::encode(const TokenizedInput& input) const {
  Tape tape;
  const Var out = forward_impl(tape, input, false);
  return EmbeddingMatrix{tape.value(out), input.validity_mask};
}

std::string ToyTransformerEncoder::serialize() const {
  json params = json::array();
  for (const auto& p : params_) {
    std::vector<double> data;
    data.reserve(static_cast<std::size_t>(p.value.size()));
    for (Eigen::Index r = 0; r < p.value.rows(); ++r) {
      for (Eigen::Index c = 0; c < p.value.cols(); ++c) data.push_back(p.value(r, c));
    }
    params.push_back(json{{"name", p.name}, {"rows", p.value.rows()}, {"cols", p.value.cols()},
                          {"data", std::move(data)}});
  }
  json j{{"format", kCheckpointFormat}, {"name", name()}, {"config", config_to_json(config_)},
         {"parameters", std::move(params)}};
  return j.dump();
}

std::unique_ptr<ToyTransformerEncoder> ToyTransformerEncoder::deserialize(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw InvalidArgument(std::string("encoder checkpoint is not valid JSON: ") + e.what());
  }
  if (j.value("format", "") != kCheckpointFormat || j.value("name", "") != "toy") {
    throw InvalidArgument("not a toy encoder checkpoint");
  }
  auto encoder = std::make_unique<ToyTransformerEncoder>(config_from_json(j.at("config")), 0);
  for (const auto& entry : j.at("parameters")) {
    auto& param = encoder->parameter(entry.at("name").get<std::string>());
    const auto rows = entry.at("rows").get<Eigen::Index>();
    const auto cols = entry.at("cols").get<Eigen::Index>();
    const auto data = entry.at("data").get<std::vector<double>>();
    if (rows != param.value.rows() || cols != param.value.cols() ||
        data.size() != static_cast<std::size_t>(rows * cols)) {
      throw InvalidArgument("checkpoint shape mismatch for " + param.name);
    }
    for (Eigen::Index r = 0; r < rows; ++r) {
      for (Eigen::Index c = 0; c < cols; ++c) {
        param.value(r, c) = data[static_cast<std::size_t>(r * cols + c)];
      }
    }
  }
  return encoder;
}

std::unique_ptr<Encoder> ToyTransformerEncoder::clone() const {
  auto copy = std::make_unique<ToyTransformerEncoder>(*this);
  copy->set_mode(mode());
  return copy;
}

CharNgramEncoder::CharNgramEncoder(std::size_t dim, std::size_t n, std::size_t max_positions)
    : dim_(dim), n_(n), max_positions_(max_positions) {
  if (dim_ == 0 || n_ == 0) throw InvalidArgument("char-ngram encoder needs dim > 0 and n > 0");
}

TokenizedInput CharNgramEncoder::tokenize_pair(std::string_view s1, std::string_view s2,
                                               std::size_t max_len) const {
  return tokenizer_.encode_pair(s1, s2, max_len);
}

TokenizedInput CharNgramEncoder::tokenize_single(std::string_view s, std::size_t max_len) const {
  return tokenizer_.encode_single(s, max_len);
}

EmbeddingMatrix CharNgramEncoder::encode(const TokenizedInput& input) const {
  check_length(input, max_positions_);
  const auto length = input.token_ids.size();
  Eigen::MatrixXd vectors = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(length),
                                                  static_cast<Eigen::Index>(dim_));
  for (std::size_t i = 0; i < length; ++i) {
    if (!input.validity_mask[i]) continue;
    std::uint64_t hash = 1469598103934665603ULL;
    const std::size_t start = i + 1 >= n_ ? i + 1 - n_ : 0;
    for (std::size_t k = start; k <= i; ++k) {
      hash ^= static_cast<std::uint64_t>(input.token_ids[k]) + 0x9E3779B97F4A7C15ULL;
      hash *= 1099511628211ULL;
    }
    vectors(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(hash % dim_)) = 1.0;
  }
  return EmbeddingMatrix{std::move(vectors), input.validity_mask};
}

std::string CharNgramEncoder::serialize() const {
  return json{{"format", kCheckpointFormat},
              {"name", name()},
              {"config", {{"dim", dim_}, {"n", n_}, {"max_positions", max_positions_}}}}
      .dump();
}

std::unique_ptr<Encoder> CharNgramEncoder::clone() const {
  return std::make_unique<CharNgramEncoder>(*this);
}

std::unique_ptr<Encoder> make_encoder(std::string_view name, const std::filesystem::path& path,
                                      std::uint64_t seed) {
  if (name == "toy") {
    if (path.empty()) return std::make_unique<ToyTransformerEncoder>(ToyEncoderConfig{}, seed);
    return ToyTransformerEncoder::deserialize(io::read_file(path));
  }
  if (name == "char-ngram") {
    if (path.empty()) return std::make_unique<CharNgramEncoder>();
    const auto j = json::parse(io::read_file(path));
    const auto& c = j.at("config");
    return std::make_unique<CharNgramEncoder>(c.value("dim", std::size_t{512}),
                                              c.value("n", std::size_t{3}),
                                              c.value("max_positions", std::size_t{512}));
  }
  throw InvalidArgument("unknown encoder '" + std::string(name) + "' (expected toy or char-ngram)");
}

}  // namespace semrel
