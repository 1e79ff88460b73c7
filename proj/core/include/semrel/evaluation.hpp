#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "semrel/corpus.hpp"

namespace semrel {

// pair_id -> predicted score, kept in insertion order for output.
class PredictionSet {
 public:
  struct Entry {
    std::string pair_id;
    double score;

    bool operator==(const Entry&) const = default;
  };

  // Throws InvalidArgument on a duplicate id or non-finite score.
  void add(std::string pair_id, double score);

  std::optional<double> find(std::string_view pair_id) const;
  const std::vector<Entry>& entries() const noexcept { return entries_; }
  std::size_t size() const noexcept { return entries_.size(); }
  bool empty() const noexcept { return entries_.empty(); }

  bool operator==(const PredictionSet& other) const { return entries_ == other.entries_; }

 private:
  std::vector<Entry> entries_;
  std::unordered_map<std::string, std::size_t> index_;
};

// 1-based ranks with tied values sharing the mean of the ranks they span.
std::vector<double> average_ranks(std::span<const double> values);

// Pearson correlation. Throws InvalidArgument on length mismatch or fewer
// than two values and DegenerateInput when either side is constant.
double pearson(std::span<const double> a, std::span<const double> b);

// Pearson correlation of the average-rank transforms; same errors as pearson.
double spearman(std::span<const double> pred, std::span<const double> gold);

// 1 - SS_res / SS_tot. Throws DegenerateInput when gold has zero variance.
double r_squared(std::span<const double> pred, std::span<const double> gold);

double mean_squared_error(std::span<const double> pred, std::span<const double> gold);

struct EvaluationReport {
  std::size_t n = 0;
  double spearman = 0.0;
  double r_squared = 0.0;
  double mse = 0.0;

  std::string to_json() const;
};

// Joins on pair_id. Every gold pair must have a prediction (NotFound lists
// the missing ids); gold must be fully labeled.
EvaluationReport evaluate(const PredictionSet& predictions, const Dataset& gold);

// CSV `PairID,Pred_Score`.
std::string format_predictions(const PredictionSet& predictions);
void save_predictions(const PredictionSet& predictions, const std::filesystem::path& path);
PredictionSet parse_predictions(std::string_view content);
PredictionSet load_predictions(const std::filesystem::path& path);

}  // namespace semrel
