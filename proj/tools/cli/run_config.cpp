#include "cli/run_config.hpp"

#include "semrel/augmentation.hpp"
#include "semrel/error.hpp"
#include "semrel/io.hpp"

namespace semrel::cli {
namespace {

using nlohmann::ordered_json;

void deep_merge(ordered_json& base, const ordered_json& overrides, const std::string& prefix,
                const std::string& origin) {
  for (const auto& [key, value] : overrides.items()) {
    const std::string path = prefix.empty() ? key : prefix + "." + key;
    if (!base.contains(key)) {
      throw InvalidArgument(origin + ": unknown configuration key '" + path + "'");
    }
    auto& target = base[key];
    if (target.is_object()) {
      if (!value.is_object()) throw InvalidArgument(origin + ": '" + path + "' must be an object");
      deep_merge(target, value, path, origin);
    } else if (target.is_object() != value.is_object()) {
      throw InvalidArgument(origin + ": '" + path + "' must not be an object");
    } else {
      target = value;
    }
  }
}

template <typename T>
T get(const ordered_json& j, const char* key, const std::string& section) {
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw InvalidArgument("configuration '" + section + "." + key + "' has the wrong type");
  }
}

}  // namespace

RunConfig::RunConfig() {
  const TrainConfig train;
  const ScorerConfig scorer;
  data_ = ordered_json::parse(R"({
    "seed": 42,
    "encoder": {"name": "toy", "path": ""},
    "train": {},
    "scorer": {},
    "predict": {"batch_size": 16},
    "augment": {
      "client": "mock",
      "concurrency": 1,
      "template": "",
      "mock": {"seed": 42, "refusal_rate": 0.0, "policy_rate": 0.0, "failure_rate": 0.0},
      "remote": {"endpoint": "", "model": "", "timeout_ms": 30000, "retries": 2}
    },
    "review": {"host": "127.0.0.1", "port": 8080, "static_dir": ""},
    "paths": {}
  })");
  data_["train"] = ordered_json{{"epochs", train.epochs},
                                {"early_stop_patience_epochs", train.early_stop_patience_epochs},
                                {"batch_size", train.batch_size},
                                {"max_seq_len", train.max_seq_len},
                                {"learning_rate", train.learning_rate},
                                {"eval_every_steps", train.eval_every_steps}};
  data_["scorer"] = ordered_json{{"pooling", std::string(to_string(scorer.pooling))},
                                 {"rescale_to_unit_interval", scorer.rescale_to_unit_interval},
                                 {"max_seq_len", scorer.max_seq_len}};
  data_["augment"]["template"] = std::string(kDefaultPromptTemplate);
}

void RunConfig::merge_file(const std::filesystem::path& path) {
  ordered_json overrides;
  try {
    overrides = ordered_json::parse(io::read_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument("config " + path.string() + " is not valid JSON: " + e.what());
  }
  if (!overrides.is_object()) throw InvalidArgument("config " + path.string() + " must be an object");
  merge(overrides, path.string());
}

void RunConfig::merge(const ordered_json& overrides, const std::string& origin) {
  deep_merge(data_, overrides, "", origin);
}

void RunConfig::set(std::string_view dotted_key, ordered_json value) {
  ordered_json* node = &data_;
  std::string_view rest = dotted_key;
  while (true) {
    const auto dot = rest.find('.');
    const std::string key(rest.substr(0, dot));
    if (!node->is_object() || !node->contains(key)) {
      throw InvalidArgument("unknown configuration key '" + std::string(dotted_key) + "'");
    }
    if (dot == std::string_view::npos) {
      (*node)[key] = std::move(value);
      return;
    }
    node = &(*node)[key];
    rest.remove_prefix(dot + 1);
  }
}

const ordered_json& RunConfig::at(std::string_view dotted_key) const {
  const ordered_json* node = &data_;
  std::string_view rest = dotted_key;
  while (true) {
    const auto dot = rest.find('.');
    const std::string key(rest.substr(0, dot));
    if (!node->contains(key)) throw InvalidArgument("missing configuration '" + std::string(dotted_key) + "'");
    node = &node->at(key);
    if (dot == std::string_view::npos) return *node;
    rest.remove_prefix(dot + 1);
  }
}

std::uint64_t RunConfig::seed() const { return get<std::uint64_t>(data_, "seed", "root"); }

TrainConfig RunConfig::train_config() const {
  const auto& t = data_.at("train");
  TrainConfig c;
  c.epochs = get<int>(t, "epochs", "train");
  c.early_stop_patience_epochs = get<int>(t, "early_stop_patience_epochs", "train");
  c.batch_size = get<int>(t, "batch_size", "train");
  c.max_seq_len = get<int>(t, "max_seq_len", "train");
  c.learning_rate = get<double>(t, "learning_rate", "train");
  c.eval_every_steps = get<int>(t, "eval_every_steps", "train");
  c.seed = seed();
  c.validate();
  return c;
}

ScorerConfig RunConfig::scorer_config() const {
  const auto& s = data_.at("scorer");
  ScorerConfig c;
  c.pooling = parse_pooling(get<std::string>(s, "pooling", "scorer"));
  c.rescale_to_unit_interval = get<bool>(s, "rescale_to_unit_interval", "scorer");
  c.max_seq_len = get<std::size_t>(s, "max_seq_len", "scorer");
  if (c.max_seq_len < 2) throw InvalidArgument("scorer.max_seq_len must be at least 2");
  return c;
}

std::string RunConfig::encoder_name() const {
  return get<std::string>(data_.at("encoder"), "name", "encoder");
}

std::filesystem::path RunConfig::encoder_path() const {
  return get<std::string>(data_.at("encoder"), "path", "encoder");
}

}  // namespace semrel::cli
