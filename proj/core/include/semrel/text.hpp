#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace semrel {

inline constexpr std::string_view kUrlSentinel = "[URL]";
inline constexpr std::string_view kEmailSentinel = "[EMAIL]";

// Decodes UTF-8. Invalid sequences decode to U+FFFD, one per offending byte.
std::u32string utf8_decode(std::string_view text);
std::string utf8_encode(std::u32string_view text);
std::size_t codepoint_length(std::string_view text);

// Canonical text form used by every downstream module:
//   - Arabic diacritics U+064B..U+0652 and tatweel U+0640 removed
//   - alef variants (U+0622, U+0623, U+0625) folded to bare alef U+0627
//   - URLs and e-mail addresses replaced by kUrlSentinel / kEmailSentinel
//   - whitespace runs collapsed to one space, ends trimmed
// Idempotent.
std::string normalize_text(std::string_view raw);

// Whitespace-delimited tokens of already normalized text.
std::vector<std::string> split_words(std::string_view text);

}  // namespace semrel
