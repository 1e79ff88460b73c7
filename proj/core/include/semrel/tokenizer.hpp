#pragma once

#include <cstddef>
#include <cstdint>
#include <string_view>
#include <vector>

namespace semrel {

using TokenId = std::int32_t;

// Token ids plus validity mask; padding positions carry kPadId and false.
struct TokenizedInput {
  std::vector<TokenId> token_ids;
  std::vector<bool> validity_mask;

  std::size_t size() const noexcept { return token_ids.size(); }
  std::size_t valid_count() const;

  // Drops trailing padding. Valid positions are untouched, so any encoder
  // that masks padding keys produces the same valid rows.
  TokenizedInput trimmed() const;

  bool operator==(const TokenizedInput&) const = default;
};

// Character-level tokenizer with four reserved ids. A codepoint maps to one
// of a fixed number of buckets, so the vocabulary is closed and needs no
// training.
class CharTokenizer {
 public:
  static constexpr TokenId kPadId = 0;
  static constexpr TokenId kClsId = 1;
  static constexpr TokenId kSepId = 2;
  static constexpr TokenId kUnkId = 3;
  static constexpr std::size_t kReserved = 4;

  explicit CharTokenizer(std::size_t vocab_size = 1024);

  std::size_t vocab_size() const noexcept { return vocab_size_; }

  std::vector<TokenId> tokenize(std::string_view text) const;

  // [CLS] s1 [SEP] s2 [SEP] <pad...> of length exactly max_len. When the
  // pair does not fit, the currently longer segment loses its last token
  // until it does; both separators always survive. max_len >= 8.
  TokenizedInput encode_pair(std::string_view s1, std::string_view s2,
                             std::size_t max_len) const;

  // [CLS] s [SEP] <pad...>, truncating s when needed. max_len >= 2.
  TokenizedInput encode_single(std::string_view s, std::size_t max_len) const;

 private:
  std::size_t vocab_size_;
};

}  // namespace semrel
