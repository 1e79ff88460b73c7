#include "semrel/corpus.hpp"

#include <algorithm>
#include <unordered_set>

#include "semrel/csv.hpp"
#include "semrel/error.hpp"
#include "semrel/io.hpp"
#include "semrel/text.hpp"

namespace semrel {
namespace {

constexpr std::string_view kIdColumn = "PairID";
constexpr std::string_view kTextColumn = "Text";
constexpr std::string_view kScoreColumn = "Score";

std::string strip_bom(std::string_view s) {
  if (s.size() >= 3 && s.substr(0, 3) == "\xEF\xBB\xBF") s.remove_prefix(3);
  return std::string(s);
}

std::optional<std::size_t> column_index(const std::vector<std::string>& header,
                                        std::string_view name) {
  const auto it = std::find(header.begin(), header.end(), name);
  if (it == header.end()) return std::nullopt;
  return static_cast<std::size_t>(it - header.begin());
}

// Returns an empty string on success, otherwise the reason the pair is invalid.
std::string validate(const SentencePair& pair) {
  if (pair.pair_id.empty()) return "empty PairID";
  if (pair.sentence1.empty()) return "sentence 1 is empty after normalization";
  if (pair.sentence2.empty()) return "sentence 2 is empty after normalization";
  if (pair.score && !(*pair.score >= 0.0 && *pair.score <= 1.0)) {
    return "score " + io::format_double(*pair.score) + " outside [0,1]";
  }
  return {};
}

}  // namespace

std::string_view to_string(Split split) {
  switch (split) {
    case Split::kTrain:
      return "train";
    case Split::kDev:
      return "dev";
    case Split::kTest:
      return "test";
  }
  return "train";
}

Split parse_split(std::string_view name) {
  if (name == "train") return Split::kTrain;
  if (name == "dev") return Split::kDev;
  if (name == "test") return Split::kTest;
  throw InvalidArgument("unknown split '" + std::string(name) + "' (expected train, dev or test)");
}

Dataset::Dataset(Split split, std::string language_tag, std::vector<SentencePair> pairs)
    : split_(split), language_tag_(std::move(language_tag)), pairs_(std::move(pairs)) {
  std::unordered_set<std::string_view> seen;
  for (const auto& pair : pairs_) {
    if (auto reason = validate(pair); !reason.empty()) {
      throw InvalidArgument("pair '" + pair.pair_id + "': " + reason);
    }
    if (!seen.insert(pair.pair_id).second) {
      throw InvalidArgument("duplicate pair_id '" + pair.pair_id + "'");
    }
  }
}

bool Dataset::fully_labeled() const {
  return std::all_of(pairs_.begin(), pairs_.end(),
                     [](const SentencePair& p) { return p.score.has_value(); });
}

const SentencePair* Dataset::find(std::string_view pair_id) const {
  const auto it = std::find_if(pairs_.begin(), pairs_.end(),
                               [&](const SentencePair& p) { return p.pair_id == pair_id; });
  return it == pairs_.end() ? nullptr : &*it;
}

Dataset parse_dataset(std::string_view content, Split split, std::string language_tag,
                      ScoreColumn scores) {
  const std::string text = strip_bom(content);
  auto records = csv::parse(text);
  if (records.empty()) throw FormatError(0, "missing header");

  const auto& header = records.front().fields;
  const auto id_col = column_index(header, kIdColumn);
  const auto text_col = column_index(header, kTextColumn);
  const auto score_col =
      scores == ScoreColumn::kRead ? column_index(header, kScoreColumn) : std::nullopt;
  if (!id_col || !text_col) {
    throw FormatError(0, "header must contain PairID and Text columns");
  }

  std::vector<SentencePair> pairs;
  pairs.reserve(records.size() - 1);
  std::unordered_set<std::string> seen;
  for (std::size_t r = 1; r < records.size(); ++r) {
    const auto& fields = records[r].fields;
    if (fields.size() != header.size()) {
      throw FormatError(r, "expected " + std::to_string(header.size()) + " fields, found " +
                               std::to_string(fields.size()));
    }
    SentencePair pair;
    pair.pair_id = fields[*id_col];
    const std::string& joined = fields[*text_col];
    const auto newline = joined.find('\n');
    if (newline == std::string::npos || joined.find('\n', newline + 1) != std::string::npos) {
      throw FormatError(r, "Text must hold exactly two sentences separated by one newline");
    }
    std::string first = joined.substr(0, newline);
    if (!first.empty() && first.back() == '\r') first.pop_back();
    pair.sentence1 = normalize_text(first);
    pair.sentence2 = normalize_text(joined.substr(newline + 1));
    if (score_col && !fields[*score_col].empty()) {
      const auto score = io::parse_double(fields[*score_col]);
      if (!score) throw FormatError(r, "unparseable score '" + fields[*score_col] + "'");
      pair.score = *score;
    }
    if (auto reason = validate(pair); !reason.empty()) throw FormatError(r, reason);
    if (!seen.insert(pair.pair_id).second) {
      throw FormatError(r, "duplicate PairID '" + pair.pair_id + "'");
    }
    pairs.push_back(std::move(pair));
  }
  return Dataset(split, std::move(language_tag), std::move(pairs));
}

Dataset load_dataset(const std::filesystem::path& path, Split split, std::string language_tag,
                     ScoreColumn scores) {
  return parse_dataset(io::read_file(path), split, std::move(language_tag), scores);
}

std::string format_dataset(const Dataset& dataset) {
  std::string out = csv::format_row({std::string(kIdColumn), std::string(kTextColumn),
                                     std::string(kScoreColumn)});
  for (const auto& pair : dataset.pairs()) {
    out += csv::format_row({pair.pair_id, pair.sentence1 + "\n" + pair.sentence2,
                            pair.score ? io::format_double(*pair.score) : std::string()});
  }
  return out;
}

void save_dataset(const Dataset& dataset, const std::filesystem::path& path) {
  io::write_file_atomic(path, format_dataset(dataset));
}

}  // namespace semrel
