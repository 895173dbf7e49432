#include <gtest/gtest.h>

#include <set>

#include "mmner/lexical.hpp"
#include "mmner/rng.hpp"

namespace mmner {
namespace {

Sentence sentence_of(std::initializer_list<const char*> words) {
  Sentence s;
  for (const char* w : words) s.tokens.push_back({w, "O"});
  return s;
}

std::set<std::string> names(const NamedFeatures& feats) {
  std::set<std::string> out;
  for (const auto& [n, v] : feats) {
    EXPECT_EQ(v, 1.0);
    out.insert(n);
  }
  return out;
}

TEST(WordShape, Examples) {
  EXPECT_EQ(word_shape("Paris"), "Xxx");
  EXPECT_EQ(word_shape("2018"), "dd");
  EXPECT_EQ(word_shape("@BBC-News"), "oXXoXxx");
  EXPECT_EQ(word_shape("a"), "x");
}

TEST(WordShape, UnicodeCategories) {
  EXPECT_EQ(word_shape("Ärger"), "Xxx");
  EXPECT_EQ(word_shape("ΑΘΗΝΑ"), "XX");
  EXPECT_EQ(word_shape("١٢٣"), "dd");  // Arabic-Indic digits are Nd
  EXPECT_EQ(word_shape("東京"), "oo");   // Lo is neither upper nor lower
}

TEST(Lexical, SingleTokenSentence) {
  LexicalConfig config;
  config.windowSize = 1;
  const auto f = names(extract_lexical(sentence_of({"Paris"}), 0, config));
  for (const char* expected : {"w=paris", "shape=Xxx", "isUpperInit", "w[-1]=BOS", "w[+1]=EOS", "pre1=p", "pre3=par",
                               "suf1=s", "suf3=ris"}) {
    EXPECT_TRUE(f.count(expected)) << expected;
  }
  EXPECT_FALSE(f.count("isAllCaps"));
  EXPECT_FALSE(f.count("w[-2]=BOS"));
}

TEST(Lexical, MentionAndHashtagFlags) {
  const auto mention = names(extract_lexical(sentence_of({"@bob"}), 0));
  EXPECT_TRUE(mention.count("isMention"));
  EXPECT_FALSE(mention.count("isHashtag"));
  const auto hashtag = names(extract_lexical(sentence_of({"#nyc"}), 0));
  EXPECT_TRUE(hashtag.count("isHashtag"));
  EXPECT_FALSE(names(extract_lexical(sentence_of({"#"}), 0)).count("isHashtag"));
}

TEST(Lexical, UrlFlag) {
  const auto f = names(extract_lexical(sentence_of({"http://t.co/x"}), 0));
  EXPECT_TRUE(f.count("isUrl"));
  EXPECT_TRUE(f.count("w=http://t.co/x"));
  EXPECT_TRUE(names(extract_lexical(sentence_of({"HTTPS://x.io"}), 0)).count("isUrl"));
  EXPECT_FALSE(names(extract_lexical(sentence_of({"www.x.io"}), 0)).count("isUrl"));
}

TEST(Lexical, CapsAndDigits) {
  const auto caps = names(extract_lexical(sentence_of({"NASA"}), 0));
  EXPECT_TRUE(caps.count("isAllCaps"));
  EXPECT_TRUE(caps.count("isUpperInit"));
  EXPECT_TRUE(names(extract_lexical(sentence_of({"2018"}), 0)).count("isDigit"));
  EXPECT_FALSE(names(extract_lexical(sentence_of({"20a"}), 0)).count("isDigit"));
}

TEST(Lexical, ContextWindow) {
  const auto s = sentence_of({"I", "love", "New", "York"});
  const auto f = names(extract_lexical(s, 1));
  for (const char* expected : {"w[-1]=i", "w[-2]=BOS", "w[+1]=new", "w[+2]=york"}) EXPECT_TRUE(f.count(expected)) << expected;
  const auto g = names(extract_lexical(s, 3));
  EXPECT_TRUE(g.count("w[+1]=EOS"));
  EXPECT_TRUE(g.count("w[+2]=EOS"));
}

TEST(Lexical, AffixesCountCodePoints) {
  const auto f = names(extract_lexical(sentence_of({"Köln"}), 0));
  EXPECT_TRUE(f.count("pre2=kö"));
  EXPECT_TRUE(f.count("suf3=öln"));
}

TEST(Lexical, PositionOutOfRange) {
  try {
    extract_lexical(sentence_of({"a"}), 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::PositionOutOfRange);
  }
}

TEST(Lexical, ConfigBounds) {
  LexicalConfig c;
  c.windowSize = 4;
  EXPECT_THROW(c.validate(), Error);
  c = {};
  c.affixMax = 0;
  EXPECT_THROW(c.validate(), Error);
  c.affixMax = 4;
  c.windowSize = 0;
  EXPECT_NO_THROW(c.validate());
}

TEST(Lexical, PropertiesOnRandomSentences) {
  static const std::vector<std::string> pool{"Paris", "@bob", "#nyc", "NASA", "2018", "http://t.co/x", "hello",
                                             "a b",   "Köln", "東京", "x",    "-",    "New\tYork"};
  Rng rng(8);
  for (int trial = 0; trial < 300; ++trial) {
    Sentence s;
    const size_t n = 1 + rng.below(6);
    for (size_t i = 0; i < n; ++i) s.tokens.push_back({pool[rng.below(pool.size())], "O"});
    LexicalConfig config;
    config.windowSize = static_cast<int>(rng.below(4));
    config.affixMax = 1 + static_cast<int>(rng.below(4));
    for (size_t pos = 0; pos < n; ++pos) {
      const auto f = extract_lexical(s, pos, config);
      EXPECT_EQ(f, extract_lexical(s, pos, config));
      EXPECT_LE(f.size(), static_cast<size_t>(4 + 2 * config.affixMax + 2 * config.windowSize + 6));
      for (const auto& [name, value] : f) {
        EXPECT_EQ(name.find_first_of(" \t\r\n"), std::string::npos) << name;
      }
    }
  }
}

}  // namespace
}  // namespace mmner
