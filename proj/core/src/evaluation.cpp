#include "semrel/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <json.hpp>

#include "semrel/csv.hpp"
#include "semrel/error.hpp"
#include "semrel/io.hpp"

namespace semrel {
namespace {

void check_lengths(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw InvalidArgument("length mismatch: " + std::to_string(a.size()) + " vs " +
                          std::to_string(b.size()));
  }
  if (a.size() < 2) throw InvalidArgument("need at least two values");
}

double mean(std::span<const double> v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

}  // namespace

void PredictionSet::add(std::string pair_id, double score) {
  if (!std::isfinite(score)) {
    throw InvalidArgument("non-finite prediction for '" + pair_id + "'");
  }
  if (index_.contains(pair_id)) {
    throw InvalidArgument("duplicate prediction for '" + pair_id + "'");
  }
  index_.emplace(pair_id, entries_.size());
  entries_.push_back(Entry{std::move(pair_id), score});
}

std::optional<double> PredictionSet::find(std::string_view pair_id) const {
  const auto it = index_.find(std::string(pair_id));
  if (it == index_.end()) return std::nullopt;
  return entries_[it->second].score;
}

std::vector<double> average_ranks(std::span<const double> values) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(values.size());
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i + 1;
    while (j < order.size() && values[order[j]] == values[order[i]]) ++j;
    // Positions i..j-1 hold ranks i+1..j.
    const double shared = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t k = i; k < j; ++k) ranks[order[k]] = shared;
    i = j;
  }
  return ranks;
}

double pearson(std::span<const double> a, std::span<const double> b) {
  check_lengths(a, b);
  const double ma = mean(a);
  const double mb = mean(b);
  double cov = 0.0;
  double va = 0.0;
  double vb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double da = a[i] - ma;
    const double db = b[i] - mb;
    cov += da * db;
    va += da * da;
    vb += db * db;
  }
  if (va <= 0.0 || vb <= 0.0) {
    throw DegenerateInput("correlation undefined for constant input");
  }
  return std::clamp(cov / std::sqrt(va * vb), -1.0, 1.0);
}

double spearman(std::span<const double> pred, std::span<const double> gold) {
  check_lengths(pred, gold);
  const auto rp = average_ranks(pred);
  const auto rg = average_ranks(gold);
  return pearson(rp, rg);
}

double r_squared(std::span<const double> pred, std::span<const double> gold) {
  check_lengths(pred, gold);
  const double mg = mean(gold);
  double ss_res = 0.0;
  double ss_tot = 0.0;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    ss_res += (gold[i] - pred[i]) * (gold[i] - pred[i]);
    ss_tot += (gold[i] - mg) * (gold[i] - mg);
  }
  if (ss_tot <= 0.0) throw DegenerateInput("R^2 undefined: gold scores have zero variance");
  return 1.0 - ss_res / ss_tot;
}

double mean_squared_error(std::span<const double> pred, std::span<const double> gold) {
  if (pred.size() != gold.size()) {
    throw InvalidArgument("length mismatch: " + std::to_string(pred.size()) + " vs " +
                          std::to_string(gold.size()));
  }
  if (pred.empty()) throw InvalidArgument("mean squared error of empty sequences");
  double total = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) total += (pred[i] - gold[i]) * (pred[i] - gold[i]);
  return total / static_cast<double>(pred.size());
}

std::string EvaluationReport::to_json() const {
  nlohmann::ordered_json j;
  j["n"] = n;
  j["spearman"] = spearman;
  j["r_squared"] = r_squared;
  j["mse"] = mse;
  return j.dump(2);
}

EvaluationReport evaluate(const PredictionSet& predictions, const Dataset& gold) {
  if (gold.empty()) throw InvalidArgument("gold dataset is empty");
  std::vector<double> pred;
  std::vector<double> truth;
  std::vector<std::string> missing;
  for (const auto& pair : gold.pairs()) {
    if (!pair.score) throw InvalidArgument("gold pair '" + pair.pair_id + "' has no score");
    const auto p = predictions.find(pair.pair_id);
    if (!p) {
      missing.push_back(pair.pair_id);
      continue;
    }
    pred.push_back(*p);
    truth.push_back(*pair.score);
  }
  if (!missing.empty()) {
    std::string list;
    for (std::size_t i = 0; i < missing.size(); ++i) list += (i ? ", " : "") + missing[i];
    throw NotFound("predictions missing for " + std::to_string(missing.size()) +
                   " gold pair(s): " + list);
  }
  EvaluationReport report;
  report.n = pred.size();
  report.spearman = spearman(pred, truth);
  report.r_squared = r_squared(pred, truth);
  report.mse = mean_squared_error(pred, truth);
  return report;
}

std::string format_predictions(const PredictionSet& predictions) {
  std::string out = "PairID,Pred_Score\n";
  for (const auto& e : predictions.entries()) {
    out += csv::format_row({e.pair_id, io::format_double(e.score)});
  }
  return out;
}

void save_predictions(const PredictionSet& predictions, const std::filesystem::path& path) {
  io::write_file_atomic(path, format_predictions(predictions));
}

PredictionSet parse_predictions(std::string_view content) {
  const auto records = csv::parse(content);
  if (records.empty()) throw FormatError(0, "missing header");
  const auto& header = records.front().fields;
  const auto id_it = std::find(header.begin(), header.end(), "PairID");
  const auto score_it = std::find(header.begin(), header.end(), "Pred_Score");
  if (id_it == header.end() || score_it == header.end()) {
    throw FormatError(0, "header must contain PairID and Pred_Score");
  }
  const auto id_col = static_cast<std::size_t>(id_it - header.begin());
  const auto score_col = static_cast<std::size_t>(score_it - header.begin());
  PredictionSet out;
  for (std::size_t r = 1; r < records.size(); ++r) {
    const auto& fields = records[r].fields;
    if (fields.size() != header.size()) throw FormatError(r, "wrong number of fields");
    const auto score = io::parse_double(fields[score_col]);
    if (!score) throw FormatError(r, "unparseable score '" + fields[score_col] + "'");
    if (out.find(fields[id_col])) throw FormatError(r, "duplicate PairID '" + fields[id_col] + "'");
    out.add(fields[id_col], *score);
  }
  return out;
}

PredictionSet load_predictions(const std::filesystem::path& path) {
  return parse_predictions(io::read_file(path));
}

}  // namespace semrel
