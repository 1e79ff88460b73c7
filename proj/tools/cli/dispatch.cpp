#include "cli/dispatch.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <filesystem>
#include <optional>
#include <sstream>

#include "cli/manifest.hpp"
#include "cli/run_config.hpp"
#include "semrel/augmentation.hpp"
#include "semrel/candidate_store.hpp"
#include "semrel/corpus.hpp"
#include "semrel/error.hpp"
#include "semrel/evaluation.hpp"
#include "semrel/generator.hpp"
#include "semrel/io.hpp"
#include "semrel/regressor.hpp"
#include "semrel/review_service.hpp"
#include "semrel/text.hpp"
#include "semrel/unsupervised.hpp"

namespace semrel::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

struct GlobalOptions {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::vector<std::string> overrides;
  bool quiet = false;
};

struct Context {
  GlobalOptions global;
  std::ostream& out;
  std::ostream& err;

  void note(const std::string& message) const {
    if (!global.quiet) err << message << '\n';
  }
};

// `key=value`; the value is parsed as JSON when possible, else taken as text.
void apply_override(RunConfig& config, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw InvalidArgument("--set expects key=value, got '" + assignment + "'");
  }
  const auto key = assignment.substr(0, eq);
  const auto text = assignment.substr(eq + 1);
  ordered_json value = ordered_json::parse(text, nullptr, false);
  if (value.is_discarded()) value = text;
  ordered_json patch = value;
  std::string_view rest = key;
  std::vector<std::string> parts;
  for (auto dot = rest.find('.'); dot != std::string_view::npos; dot = rest.find('.')) {
    parts.emplace_back(rest.substr(0, dot));
    rest.remove_prefix(dot + 1);
  }
  parts.emplace_back(rest);
  for (auto it = parts.rbegin(); it != parts.rend(); ++it) patch = ordered_json{{*it, patch}};
  config.merge(patch, "--set " + key);
}

RunConfig resolve_config(const GlobalOptions& global) {
  RunConfig config;
  if (!global.config.empty()) config.merge_file(global.config);
  for (const auto& o : global.overrides) apply_override(config, o);
  if (global.seed) {
    config.set("seed", *global.seed);
    config.set("augment.mock.seed", *global.seed);
  }
  return config;
}

std::string trim_trailing_newlines(std::string s) {
  while (!s.empty() && (s.back() == '\n' || s.back() == '\r')) s.pop_back();
  return s;
}

std::string counts_json(const StatusCounts& counts) {
  ordered_json j;
  std::size_t total = 0;
  for (const auto& [status, n] : counts) {
    j[std::string(to_string(status))] = n;
    total += n;
  }
  j["total"] = total;
  return j.dump();
}

Dataset concat(const Dataset& a, const Dataset& b) {
  auto pairs = a.pairs();
  pairs.insert(pairs.end(), b.pairs().begin(), b.pairs().end());
  return Dataset(a.split(), a.language_tag(), std::move(pairs));
}

// ---- train -----------------------------------------------------------------

struct TrainArgs {
  std::string train, dev, augments, out, lang = "unk";
};

void run_train(const Context& ctx, const TrainArgs& a) {
  RunConfig config = resolve_config(ctx.global);
  config.set("paths", ordered_json{{"train", a.train}, {"dev", a.dev}, {"augments", a.augments},
                                   {"out", a.out}, {"lang", a.lang}});
  const auto train_config = config.train_config();

  Dataset train_data = load_dataset(a.train, Split::kTrain, a.lang);
  if (!a.augments.empty()) {
    train_data = concat(train_data, load_dataset(a.augments, Split::kTrain, a.lang));
  }
  std::optional<Dataset> dev;
  if (!a.dev.empty()) dev = load_dataset(a.dev, Split::kDev, a.lang);

  ctx.note("training on " + std::to_string(train_data.size()) + " pairs" +
           (dev ? " with " + std::to_string(dev->size()) + " dev pairs" : std::string()));
  auto encoder = make_encoder(config.encoder_name(), config.encoder_path(), config.seed());
  auto result = train(train_data, dev ? &*dev : nullptr, train_config, std::move(encoder));

  const fs::path out_dir = a.out;
  result.model.save(out_dir);
  io::write_file_atomic(out_dir / "train_log.json", result.log.to_json() + "\n");

  Manifest manifest("train", config);
  manifest.add_input("train", a.train);
  if (!a.dev.empty()) manifest.add_input("dev", a.dev);
  if (!a.augments.empty()) manifest.add_input("augments", a.augments);
  if (!config.encoder_path().empty()) manifest.add_input("encoder", config.encoder_path());
  manifest.add_output("encoder", out_dir / "encoder.json");
  manifest.add_output("head", out_dir / "head.json");
  manifest.add_output("train_log", out_dir / "train_log.json");
  manifest.write(out_dir / "manifest.json");
  ctx.note("epochs run " + std::to_string(result.log.epochs_run) + ", final epoch loss " +
           io::format_double(result.log.epoch_train_loss.back()));
}

// ---- predict ---------------------------------------------------------------

struct PredictArgs {
  std::string model, input, out, lang = "unk";
};

void run_predict(const Context& ctx, const PredictArgs& a) {
  RunConfig config = resolve_config(ctx.global);
  config.set("paths", ordered_json{{"model", a.model}, {"input", a.input}, {"out", a.out},
                                   {"lang", a.lang}});
  // The sequence length the model was trained with wins over the defaults.
  const fs::path model_manifest = fs::path(a.model) / "manifest.json";
  std::size_t max_len = static_cast<std::size_t>(config.train_config().max_seq_len);
  if (fs::exists(model_manifest)) {
    const auto m = ordered_json::parse(io::read_file(model_manifest));
    max_len = m.at("config").at("train").at("max_seq_len").get<std::size_t>();
  }
  const auto model = RegressionModel::load(a.model);
  const auto data = load_dataset(a.input, Split::kTest, a.lang, ScoreColumn::kIgnore);
  const auto batch = config.at("predict.batch_size").get<std::size_t>();
  const auto predictions = predict(model, data, batch, max_len);
  save_predictions(predictions, a.out);

  Manifest manifest("predict", config);
  manifest.add_input("encoder", fs::path(a.model) / "encoder.json");
  manifest.add_input("head", fs::path(a.model) / "head.json");
  manifest.add_input("input", a.input);
  manifest.add_output("predictions", a.out);
  manifest.write(manifest_path_for(a.out));
  ctx.note("wrote " + std::to_string(predictions.size()) + " predictions to " + a.out);
}

// ---- score-unsupervised / anisotropy ----------------------------------------

struct UnsupervisedArgs {
  std::string input, out, pooling, encoder, encoder_path, lang = "unk";
};

void apply_encoder_flags(RunConfig& config, const UnsupervisedArgs& a) {
  if (!a.pooling.empty()) config.set("scorer.pooling", std::string(to_string(parse_pooling(a.pooling))));
  if (!a.encoder.empty()) config.set("encoder.name", a.encoder);
  if (!a.encoder_path.empty()) config.set("encoder.path", a.encoder_path);
}

void run_score_unsupervised(const Context& ctx, const UnsupervisedArgs& a) {
  RunConfig config = resolve_config(ctx.global);
  apply_encoder_flags(config, a);
  config.set("paths", ordered_json{{"input", a.input}, {"out", a.out}, {"lang", a.lang}});
  const auto scorer = config.scorer_config();
  const auto encoder = make_encoder(config.encoder_name(), config.encoder_path(), config.seed());
  // Labels never reach this path: the Score column is not parsed.
  const auto data = load_dataset(a.input, Split::kTest, a.lang, ScoreColumn::kIgnore);
  const auto pairs = strip_labels(data);
  const auto predictions = score_dataset(pairs, *encoder, scorer);
  save_predictions(predictions, a.out);

  Manifest manifest("score-unsupervised", config);
  manifest.add_input("input", a.input);
  if (!config.encoder_path().empty()) manifest.add_input("encoder", config.encoder_path());
  manifest.add_output("predictions", a.out);
  manifest.write(manifest_path_for(a.out));
  ctx.note("scored " + std::to_string(predictions.size()) + " pairs with " +
           std::string(to_string(scorer.pooling)) + " pooling");
}

void run_anisotropy(const Context& ctx, const UnsupervisedArgs& a) {
  RunConfig config = resolve_config(ctx.global);
  apply_encoder_flags(config, a);
  const auto scorer = config.scorer_config();
  const auto encoder = make_encoder(config.encoder_name(), config.encoder_path(), config.seed());
  std::vector<std::string> sentences;
  std::istringstream lines(io::read_file(a.input));
  for (std::string line; std::getline(lines, line);) {
    auto s = normalize_text(line);
    if (!s.empty()) sentences.push_back(std::move(s));
  }
  ctx.out << io::format_double(anisotropy_estimate(sentences, *encoder, scorer)) << '\n';
}

// ---- eval ------------------------------------------------------------------

struct EvalArgs {
  std::string pred, gold, out;
};

void run_eval(const Context& ctx, const EvalArgs& a) {
  RunConfig config = resolve_config(ctx.global);
  config.set("paths", ordered_json{{"pred", a.pred}, {"gold", a.gold}, {"out", a.out}});
  const auto predictions = load_predictions(a.pred);
  const auto gold = load_dataset(a.gold, Split::kTest, "unk");
  const auto report = evaluate(predictions, gold);
  ctx.out << report.to_json() << '\n';
  if (!a.out.empty()) {
    io::write_file_atomic(a.out, report.to_json() + "\n");
    Manifest manifest("eval", config);
    manifest.add_input("pred", a.pred);
    manifest.add_input("gold", a.gold);
    manifest.add_output("report", a.out);
    manifest.write(manifest_path_for(a.out));
  }
}

// ---- augment ---------------------------------------------------------------

struct AugmentArgs {
  std::string train, template_file, client, out, candidates, refusal, policy, mock_script;
  std::string lang = "unk";
  std::optional<std::size_t> concurrency;
};

std::unique_ptr<GeneratorClient> make_client(const RunConfig& config, const std::string& kind,
                                             const std::string& prompt_template,
                                             const std::string& script_path) {
  if (kind == "mock") {
    const auto& m = config.at("augment.mock");
    MockGeneratorOptions opts;
    opts.seed = m.at("seed").get<std::uint64_t>();
    opts.refusal_rate = m.at("refusal_rate").get<double>();
    opts.policy_rate = m.at("policy_rate").get<double>();
    opts.failure_rate = m.at("failure_rate").get<double>();
    std::map<std::string, std::string> script;
    if (!script_path.empty()) {
      script = nlohmann::json::parse(io::read_file(script_path)).get<std::map<std::string, std::string>>();
    }
    return std::make_unique<MockGenerator>(opts, prompt_template, std::move(script));
  }
  if (kind == "remote") {
    const auto& r = config.at("augment.remote");
    HttpGeneratorOptions opts;
    opts.endpoint = r.at("endpoint").get<std::string>();
    opts.model = r.at("model").get<std::string>();
    opts.timeout = std::chrono::milliseconds(r.at("timeout_ms").get<long>());
    opts.retries = r.at("retries").get<int>();
    return std::make_unique<HttpGenerator>(opts);
  }
  throw InvalidArgument("unknown generator client '" + kind + "' (expected mock or remote)");
}

void run_augment_generate(const Context& ctx, const AugmentArgs& a) {
  RunConfig config = resolve_config(ctx.global);
  if (!a.client.empty()) config.set("augment.client", a.client);
  if (a.concurrency) config.set("augment.concurrency", *a.concurrency);
  if (!a.template_file.empty()) {
    config.set("augment.template", trim_trailing_newlines(io::read_file(a.template_file)));
  }
  config.set("paths", ordered_json{{"train", a.train}, {"template", a.template_file},
                                   {"mock_script", a.mock_script}, {"out", a.out},
                                   {"lang", a.lang}});
  const PromptTemplate prompt_template{config.at("augment.template").get<std::string>(), a.lang};
  validate_template(prompt_template);
  const auto train_data = load_dataset(a.train, Split::kTrain, a.lang);
  const auto client = make_client(config, config.at("augment.client").get<std::string>(),
                                  prompt_template.text, a.mock_script);
  GenerateOptions options;
  options.max_concurrency = config.at("augment.concurrency").get<std::size_t>();
  const auto candidates = generate_candidates(train_data, prompt_template, *client, options);
  save_candidates(candidates, a.out);

  Manifest manifest("augment generate", config);
  manifest.add_input("train", a.train);
  if (!a.template_file.empty()) manifest.add_input("template", a.template_file);
  if (!a.mock_script.empty()) manifest.add_input("mock_script", a.mock_script);
  manifest.add_output("candidates", a.out);
  manifest.write(manifest_path_for(a.out));
  ctx.out << counts_json(count_statuses(candidates)) << '\n';
}

void run_augment_filter(const Context& ctx, const AugmentArgs& a) {
  RunConfig config = resolve_config(ctx.global);
  const std::string out = a.out.empty() ? a.candidates : a.out;
  config.set("paths", ordered_json{{"candidates", a.candidates},
                                   {"refusal_patterns", a.refusal},
                                   {"policy_patterns", a.policy},
                                   {"out", out}});
  Manifest manifest("augment filter", config);
  manifest.add_input("candidates", a.candidates);
  const auto refusal = a.refusal.empty() ? default_refusal_patterns() : load_patterns(a.refusal);
  const auto policy = a.policy.empty() ? default_policy_patterns() : load_patterns(a.policy);
  if (!a.refusal.empty()) manifest.add_input("refusal_patterns", a.refusal);
  if (!a.policy.empty()) manifest.add_input("policy_patterns", a.policy);

  const auto filtered = apply_auto_filters(load_candidates(a.candidates), refusal, policy);
  save_candidates(filtered, out);
  manifest.add_output("candidates", out);
  manifest.write(manifest_path_for(out));
  ctx.out << counts_json(count_statuses(filtered)) << '\n';
}

void run_augment_merge(const Context& ctx, const AugmentArgs& a) {
  RunConfig config = resolve_config(ctx.global);
  config.set("paths", ordered_json{{"train", a.train}, {"candidates", a.candidates},
                                   {"out", a.out}, {"lang", a.lang}});
  const auto train_data = load_dataset(a.train, Split::kTrain, a.lang);
  const auto candidates = load_candidates(a.candidates);
  const auto merged = merge_accepted(train_data, candidates);
  save_dataset(merged, a.out);

  Manifest manifest("augment merge", config);
  manifest.add_input("train", a.train);
  manifest.add_input("candidates", a.candidates);
  manifest.add_output("merged", a.out);
  manifest.write(manifest_path_for(a.out));
  ctx.note("merged " + std::to_string(merged.size() - train_data.size()) +
           " accepted candidates: " + std::to_string(train_data.size()) + " + " +
           std::to_string(merged.size() - train_data.size()) + " = " +
           std::to_string(merged.size()) + " pairs");
}

// ---- review ----------------------------------------------------------------

struct ReviewArgs {
  std::string candidates, host, static_dir, verdict, reviewer, note;
  std::optional<int> port;
  std::vector<std::string> ids;
  bool all_pending = false;
};

void run_review_serve(const Context& ctx, const ReviewArgs& a) {
  RunConfig config = resolve_config(ctx.global);
  ReviewServerOptions options;
  options.host = a.host.empty() ? config.at("review.host").get<std::string>() : a.host;
  options.port = a.port ? *a.port : config.at("review.port").get<int>();
  options.static_dir =
      a.static_dir.empty() ? config.at("review.static_dir").get<std::string>() : a.static_dir;
  CandidateStore store(a.candidates);
  ReviewServer server(store, options);
  const int port = server.bind();
  ctx.note("review service on http://" + options.host + ":" + std::to_string(port) + " (" +
           std::to_string(store.size()) + " candidates)");
  server.listen();
}

void run_review_decide(const Context& ctx, const ReviewArgs& a) {
  if (a.ids.empty() == !a.all_pending) {
    throw InvalidArgument("give either --id (repeatable) or --all-pending");
  }
  CandidateStore store(a.candidates);
  std::vector<std::string> ids = a.ids;
  if (a.all_pending) {
    for (const auto& c : store.list(CandidateStatus::kPending, store.size(), 0).items) {
      ids.push_back(c.candidate_id);
    }
  }
  Decision d;
  d.verdict = parse_verdict(a.verdict);
  d.reviewer = a.reviewer;
  if (!a.note.empty()) d.note = a.note;
  for (const auto& id : ids) {
    d.candidate_id = id;
    store.decide(d, io::utc_timestamp_now());
  }
  ctx.out << counts_json(store.stats()) << '\n';
}

void print_error(std::ostream& err, std::string_view kind, std::string_view detail) {
  ordered_json j;
  j["error"] = kind;
  j["detail"] = detail;
  err << j.dump() << '\n';
}

}  // namespace

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Semantic textual relatedness toolkit", std::string(kToolName)};
  app.set_version_flag("--version", std::string(kToolVersion));
  app.require_subcommand(1);
  app.fallthrough();

  GlobalOptions global;
  app.add_option("--config", global.config, "JSON configuration file")->check(CLI::ExistingFile);
  app.add_option("--seed", global.seed, "Seed for every random choice");
  app.add_option("--set", global.overrides, "Configuration override key=value (repeatable)");
  app.add_flag("--quiet", global.quiet, "Suppress progress messages");

  TrainArgs train_args;
  auto* train_cmd = app.add_subcommand("train", "Fine-tune the cross-encoder regressor");
  train_cmd->add_option("--train", train_args.train, "Training CSV")->required();
  train_cmd->add_option("--dev", train_args.dev, "Dev CSV for evaluation and early stopping");
  train_cmd->add_option("--augments", train_args.augments, "Extra training CSV (merged augments)");
  train_cmd->add_option("--out", train_args.out, "Model directory")->required();
  train_cmd->add_option("--lang", train_args.lang, "Language tag");

  PredictArgs predict_args;
  auto* predict_cmd = app.add_subcommand("predict", "Score pairs with a trained model");
  predict_cmd->add_option("--model", predict_args.model, "Model directory")->required();
  predict_cmd->add_option("--input", predict_args.input, "Pairs CSV")->required();
  predict_cmd->add_option("--out", predict_args.out, "Predictions CSV")->required();
  predict_cmd->add_option("--lang", predict_args.lang, "Language tag");

  UnsupervisedArgs unsup_args;
  auto* score_cmd = app.add_subcommand("score-unsupervised", "Pooled-embedding cosine scores");
  score_cmd->add_option("--input", unsup_args.input, "Pairs CSV (Score column ignored)")->required();
  score_cmd->add_option("--out", unsup_args.out, "Predictions CSV")->required();
  score_cmd->add_option("--pooling", unsup_args.pooling, "cls, avg, max or min");
  score_cmd->add_option("--encoder", unsup_args.encoder, "Encoder name (toy, char-ngram)");
  score_cmd->add_option("--encoder-path", unsup_args.encoder_path, "Encoder checkpoint");
  score_cmd->add_option("--lang", unsup_args.lang, "Language tag");

  auto* aniso_cmd = app.add_subcommand("anisotropy", "Mean pairwise cosine of sentence embeddings");
  aniso_cmd->add_option("--input", unsup_args.input, "Text file, one sentence per line")->required();
  aniso_cmd->add_option("--pooling", unsup_args.pooling, "cls, avg, max or min");
  aniso_cmd->add_option("--encoder", unsup_args.encoder, "Encoder name (toy, char-ngram)");
  aniso_cmd->add_option("--encoder-path", unsup_args.encoder_path, "Encoder checkpoint");

  EvalArgs eval_args;
  auto* eval_cmd = app.add_subcommand("eval", "Spearman, R^2 and MSE against gold scores");
  eval_cmd->add_option("--pred", eval_args.pred, "Predictions CSV (PairID,Pred_Score)")->required();
  eval_cmd->add_option("--gold", eval_args.gold, "Gold CSV")->required();
  eval_cmd->add_option("--out", eval_args.out, "Also write the report here");

  AugmentArgs aug_args;
  auto* augment_cmd = app.add_subcommand("augment", "Paraphrase augmentation");
  augment_cmd->require_subcommand(1);
  auto* gen_cmd = augment_cmd->add_subcommand("generate", "Prompt the generator for candidates");
  gen_cmd->add_option("--train", aug_args.train, "Training CSV")->required();
  gen_cmd->add_option("--template", aug_args.template_file, "Prompt template file");
  gen_cmd->add_option("--client", aug_args.client, "mock or remote");
  gen_cmd->add_option("--out", aug_args.out, "Candidate JSONL")->required();
  gen_cmd->add_option("--concurrency", aug_args.concurrency, "Parallel generator calls");
  gen_cmd->add_option("--mock-script", aug_args.mock_script, "JSON object prompt -> reply");
  gen_cmd->add_option("--lang", aug_args.lang, "Language tag");
  auto* filter_cmd = augment_cmd->add_subcommand("filter", "Auto-reject refusals and policy replies");
  filter_cmd->add_option("--candidates", aug_args.candidates, "Candidate JSONL")->required();
  filter_cmd->add_option("--refusal-patterns", aug_args.refusal, "One pattern per line");
  filter_cmd->add_option("--policy-patterns", aug_args.policy, "One pattern per line");
  filter_cmd->add_option("--out", aug_args.out, "Output JSONL (default: in place)");
  auto* merge_cmd = augment_cmd->add_subcommand("merge", "Add accepted candidates to the train set");
  merge_cmd->add_option("--train", aug_args.train, "Training CSV")->required();
  merge_cmd->add_option("--candidates", aug_args.candidates, "Candidate JSONL")->required();
  merge_cmd->add_option("--out", aug_args.out, "Merged CSV")->required();
  merge_cmd->add_option("--lang", aug_args.lang, "Language tag");

  ReviewArgs review_args;
  auto* review_cmd = app.add_subcommand("review", "Manual review of candidates");
  review_cmd->require_subcommand(1);
  auto* serve_cmd = review_cmd->add_subcommand("serve", "HTTP review service");
  serve_cmd->add_option("--candidates", review_args.candidates, "Candidate JSONL")->required();
  serve_cmd->add_option("--port", review_args.port, "TCP port (0 for any)");
  serve_cmd->add_option("--host", review_args.host, "Bind address");
  serve_cmd->add_option("--static-dir", review_args.static_dir, "Built review UI directory");
  auto* decide_cmd = review_cmd->add_subcommand("decide", "Record decisions without the UI");
  decide_cmd->add_option("--candidates", review_args.candidates, "Candidate JSONL")->required();
  decide_cmd->add_option("--id", review_args.ids, "Candidate id (repeatable)");
  decide_cmd->add_flag("--all-pending", review_args.all_pending, "Decide every pending candidate");
  decide_cmd->add_option("--verdict", review_args.verdict, "accept or reject")->required();
  decide_cmd->add_option("--reviewer", review_args.reviewer, "Reviewer name")->required();
  decide_cmd->add_option("--note", review_args.note, "Free-text note");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    std::ostringstream o;
    std::ostringstream e2;
    const int code = app.exit(e, o, e2);
    out << o.str();
    err << e2.str();
    return code == 0 ? 0 : 2;
  }

  const Context ctx{global, out, err};
  try {
    if (train_cmd->parsed()) {
      run_train(ctx, train_args);
    } else if (predict_cmd->parsed()) {
      run_predict(ctx, predict_args);
    } else if (score_cmd->parsed()) {
      run_score_unsupervised(ctx, unsup_args);
    } else if (aniso_cmd->parsed()) {
      run_anisotropy(ctx, unsup_args);
    } else if (eval_cmd->parsed()) {
      run_eval(ctx, eval_args);
    } else if (gen_cmd->parsed()) {
      run_augment_generate(ctx, aug_args);
    } else if (filter_cmd->parsed()) {
      run_augment_filter(ctx, aug_args);
    } else if (merge_cmd->parsed()) {
      run_augment_merge(ctx, aug_args);
    } else if (serve_cmd->parsed()) {
      run_review_serve(ctx, review_args);
    } else if (decide_cmd->parsed()) {
      run_review_decide(ctx, review_args);
    }
  } catch (const Error& e) {
    print_error(err, e.kind(), e.what());
    return 1;
  } catch (const nlohmann::json::exception& e) {
    print_error(err, "invalid_argument", e.what());
    return 1;
  } catch (const std::exception& e) {
    print_error(err, "internal_error", e.what());
    return 1;
  }
  return 0;
}

}  // namespace semrel::cli
