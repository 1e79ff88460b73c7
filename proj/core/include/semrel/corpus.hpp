#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace semrel {

enum class Split { kTrain, kDev, kTest };

std::string_view to_string(Split split);
// Throws InvalidArgument for anything other than train/dev/test.
Split parse_split(std::string_view name);

struct SentencePair {
  std::string pair_id;
  std::string sentence1;
  std::string sentence2;
  std::optional<double> score;

  bool operator==(const SentencePair&) const = default;
};

// An ordered, duplicate-free collection of pairs. Construction validates every
// pair; a Dataset is immutable afterwards.
class Dataset {
 public:
  Dataset(Split split, std::string language_tag, std::vector<SentencePair> pairs);

  Split split() const noexcept { return split_; }
  const std::string& language_tag() const noexcept { return language_tag_; }
  const std::vector<SentencePair>& pairs() const noexcept { return pairs_; }
  std::size_t size() const noexcept { return pairs_.size(); }
  bool empty() const noexcept { return pairs_.empty(); }
  bool fully_labeled() const;

  const SentencePair* find(std::string_view pair_id) const;

  bool operator==(const Dataset&) const = default;

 private:
  Split split_;
  std::string language_tag_;
  std::vector<SentencePair> pairs_;
};

// kIgnore never looks at the Score column, for consumers that must not see
// labels.
enum class ScoreColumn { kRead, kIgnore };

// Reads the corpus CSV layout: header `PairID,Text[,Score]`, the two
// sentences joined by a single LF inside the quoted Text field. Sentences are
// normalized on load. Throws NotFound for a missing file and FormatError
// (carrying the data row number) for a malformed row.
Dataset load_dataset(const std::filesystem::path& path, Split split, std::string language_tag,
                     ScoreColumn scores = ScoreColumn::kRead);
Dataset parse_dataset(std::string_view content, Split split, std::string language_tag,
                      ScoreColumn scores = ScoreColumn::kRead);

// Writes the same layout; absent scores become empty Score cells.
void save_dataset(const Dataset& dataset, const std::filesystem::path& path);
std::string format_dataset(const Dataset& dataset);

}  // namespace semrel
