#include "semrel/tokenizer.hpp"

#include <algorithm>

#include "semrel/error.hpp"
#include "semrel/text.hpp"

namespace semrel {

std::size_t TokenizedInput::valid_count() const {
  return static_cast<std::size_t>(std::count(validity_mask.begin(), validity_mask.end(), true));
}

TokenizedInput TokenizedInput::trimmed() const {
  std::size_t end = validity_mask.size();
  while (end > 0 && !validity_mask[end - 1]) --end;
  TokenizedInput out;
  out.token_ids.assign(token_ids.begin(), token_ids.begin() + static_cast<std::ptrdiff_t>(end));
  out.validity_mask.assign(validity_mask.begin(),
                           validity_mask.begin() + static_cast<std::ptrdiff_t>(end));
  return out;
}

CharTokenizer::CharTokenizer(std::size_t vocab_size) : vocab_size_(vocab_size) {
  if (vocab_size_ <= kReserved) {
    throw InvalidArgument("vocab_size must exceed the reserved special tokens");
  }
}

std::vector<TokenId> CharTokenizer::tokenize(std::string_view text) const {
  std::vector<TokenId> ids;
  const auto buckets = vocab_size_ - kReserved;
  for (const char32_t c : utf8_decode(text)) {
    if (c == 0xFFFD) {
      ids.push_back(kUnkId);
      continue;
    }
    ids.push_back(static_cast<TokenId>(kReserved + static_cast<std::size_t>(c) % buckets));
  }
  return ids;
}

TokenizedInput CharTokenizer::encode_pair(std::string_view s1, std::string_view s2,
                                          std::size_t max_len) const {
  if (max_len < 8) throw InvalidArgument("max_len must be at least 8");
  auto a = tokenize(s1);
  auto b = tokenize(s2);
  const std::size_t budget = max_len - 3;
  while (a.size() + b.size() > budget) {
    if (a.size() >= b.size()) {
      a.pop_back();
    } else {
      b.pop_back();
    }
  }
  TokenizedInput out;
  out.token_ids.reserve(max_len);
  out.token_ids.push_back(kClsId);
  out.token_ids.insert(out.token_ids.end(), a.begin(), a.end());
  out.token_ids.push_back(kSepId);
  out.token_ids.insert(out.token_ids.end(), b.begin(), b.end());
  out.token_ids.push_back(kSepId);
  out.validity_mask.assign(out.token_ids.size(), true);
  out.token_ids.resize(max_len, kPadId);
  out.validity_mask.resize(max_len, false);
  return out;
}

TokenizedInput CharTokenizer::encode_single(std::string_view s, std::size_t max_len) const {
  if (max_len < 2) throw InvalidArgument("max_len must be at least 2");
  auto a = tokenize(s);
  if (a.size() > max_len - 2) a.resize(max_len - 2);
  TokenizedInput out;
  out.token_ids.push_back(kClsId);
  out.token_ids.insert(out.token_ids.end(), a.begin(), a.end());
  out.token_ids.push_back(kSepId);
  out.validity_mask.assign(out.token_ids.size(), true);
  out.token_ids.resize(max_len, kPadId);
  out.validity_mask.resize(max_len, false);
  return out;
}

}  // namespace semrel
