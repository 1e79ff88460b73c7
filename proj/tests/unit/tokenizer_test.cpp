#include "semrel/tokenizer.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <string>

#include "semrel/error.hpp"

namespace semrel {
namespace {

constexpr TokenId kCls = CharTokenizer::kClsId;
constexpr TokenId kSep = CharTokenizer::kSepId;
constexpr TokenId kPad = CharTokenizer::kPadId;

// With the default 1024-entry vocabulary, codepoint c maps to 4 + c % 1020.
constexpr TokenId kA = 4 + 'a';
constexpr TokenId kB = 4 + 'b';

TEST(CharTokenizerTest, BucketsCodepoints) {
  const CharTokenizer tok;
  EXPECT_EQ(tok.tokenize("ab"), (std::vector<TokenId>{kA, kB}));
  EXPECT_EQ(tok.tokenize("ك"), (std::vector<TokenId>{4 + 0x0643 % 1020}));
  EXPECT_EQ(tok.tokenize("\xFF"), (std::vector<TokenId>{CharTokenizer::kUnkId}));
  EXPECT_THROW(CharTokenizer(4), InvalidArgument);
}

TEST(CharTokenizerTest, PairLayout) {
  const CharTokenizer tok;
  const auto in = tok.encode_pair("a", "b", 8);
  EXPECT_EQ(in.token_ids, (std::vector<TokenId>{kCls, kA, kSep, kB, kSep, kPad, kPad, kPad}));
  EXPECT_EQ(in.validity_mask,
            (std::vector<bool>{true, true, true, true, true, false, false, false}));
}

TEST(CharTokenizerTest, EmptySegments) {
  const CharTokenizer tok;
  const auto in = tok.encode_pair("", "", 8);
  EXPECT_EQ(in.token_ids, (std::vector<TokenId>{kCls, kSep, kSep, kPad, kPad, kPad, kPad, kPad}));
  EXPECT_EQ(in.valid_count(), 3u);
}

TEST(CharTokenizerTest, TruncatesLongerSegmentFirst) {
  // 400 + 400 content tokens and 3 specials need 803 slots; 512 leaves 509
  // for content. Ties trim the first segment, so the split ends 254 / 255
  // with separators at positions 1 + 254 = 255 and 255 + 1 + 255 = 511.
  const CharTokenizer tok;
  const std::string s1(400, 'a');
  const std::string s2(400, 'b');
  const auto in = tok.encode_pair(s1, s2, 512);
  ASSERT_EQ(in.size(), 512u);
  EXPECT_EQ(in.valid_count(), 512u);
  EXPECT_EQ(in.token_ids[0], kCls);
  EXPECT_EQ(in.token_ids[255], kSep);
  EXPECT_EQ(in.token_ids[511], kSep);
  EXPECT_EQ(std::count(in.token_ids.begin(), in.token_ids.end(), kSep), 2);
  EXPECT_EQ(std::count(in.token_ids.begin(), in.token_ids.end(), kA), 254);
  EXPECT_EQ(std::count(in.token_ids.begin(), in.token_ids.end(), kB), 255);
}

TEST(CharTokenizerTest, UnequalSegmentsKeepTheShortOne) {
  const CharTokenizer tok;
  const auto in = tok.encode_pair(std::string(100, 'a'), "bb", 16);
  // 13 content slots: the short segment keeps both tokens.
  EXPECT_EQ(std::count(in.token_ids.begin(), in.token_ids.end(), kA), 11);
  EXPECT_EQ(std::count(in.token_ids.begin(), in.token_ids.end(), kB), 2);
  EXPECT_EQ(in.token_ids[15], kSep);
}

TEST(CharTokenizerTest, PairRejectsTinyMaxLen) {
  EXPECT_THROW(CharTokenizer().encode_pair("a", "b", 7), InvalidArgument);
}

TEST(CharTokenizerTest, SingleLayoutAndTruncation) {
  const CharTokenizer tok;
  EXPECT_EQ(tok.encode_single("ab", 5).token_ids,
            (std::vector<TokenId>{kCls, kA, kB, kSep, kPad}));
  EXPECT_EQ(tok.encode_single("abab", 4).token_ids, (std::vector<TokenId>{kCls, kA, kB, kSep}));
}

TEST(TokenizedInputTest, TrimmedDropsPaddingOnly) {
  const auto in = CharTokenizer().encode_pair("a", "b", 10);
  const auto t = in.trimmed();
  EXPECT_EQ(t.size(), 5u);
  EXPECT_EQ(t.valid_count(), 5u);
  EXPECT_EQ(t.trimmed(), t);
}

}  // namespace
}  // namespace semrel
