#include <gtest/gtest.h>

#include "mmner/corpus.hpp"
#include "mmner/rng.hpp"
#include "test_support.hpp"

namespace mmner {
namespace {

using testing::fixture;

std::vector<Span> random_spans(Rng& rng, size_t n) {
  static const std::vector<std::string> classes{"PER", "LOC", "ORG"};
  std::vector<Span> spans;
  size_t i = 0;
  while (i < n) {
    if (rng.uniform() < 0.4) {
      const size_t len = 1 + rng.below(std::min<size_t>(3, n - i));
      spans.push_back({classes[rng.below(classes.size())], i, i + len});
      i += len;
    } else {
      ++i;
    }
  }
  return spans;
}

TEST(ParseConll, TwoColumnSentence) {
  const auto corpus = parse_conll("Paris\tB-LOC\n.\tO\n\n");
  ASSERT_EQ(corpus.sentences.size(), 1u);
  EXPECT_EQ(corpus.sentences[0].tokens[0].surface, "Paris");
  EXPECT_EQ(corpus.sentences[0].tokens[1].surface, ".");
  EXPECT_EQ(corpus.sentences[0].tags(), (std::vector<std::string>{"B-LOC", "O"}));
  EXPECT_EQ(corpus.scheme.classes, (std::vector<std::string>{"LOC"}));
}

TEST(ParseConll, EmptyInputIsAnError) {
  try {
    parse_conll("");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::EmptyCorpus);
  }
  EXPECT_THROW(parse_conll("\n\n# only a comment\n"), Error);
}

TEST(ParseConll, HashtagTokensAreNotComments) {
  const auto corpus = parse_conll("# header comment\n#\n#nyc\tB-LOC\n#\tO\nrocks\tO\n");
  ASSERT_EQ(corpus.sentences.size(), 1u);
  ASSERT_EQ(corpus.sentences[0].size(), 3u);
  EXPECT_EQ(corpus.sentences[0].tokens[0].surface, "#nyc");
  EXPECT_EQ(corpus.sentences[0].tokens[0].goldTag, "B-LOC");
  EXPECT_EQ(corpus.sentences[0].tokens[1].surface, "#");
}

TEST(ParseConll, TinyFixtureCounts) {
  const auto corpus = load_conll(fixture("tiny.conll").string());
  EXPECT_EQ(corpus.sentences.size(), 3u);
  EXPECT_EQ(corpus.token_count(), 10u);
}

TEST(ParseConll, MalformedLineReportsLineNumber) {
  try {
    parse_conll("a\tO\nb\tO\tB-PER\n", ConllColumns{0, 2});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::MalformedLine);
    EXPECT_NE(std::string(e.what()).find("line 1"), std::string::npos) << e.what();
  }
  try {
    parse_conll("a\tO\nb\tX-PER\n");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::MalformedLine);
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos) << e.what();
  }
}

TEST(ParseConll, MultiColumnSpacesAndComments) {
  const auto corpus = parse_conll("# header\nObama  NNP   B-PER\nspoke VBD O\n\n\n\nhi  UH  O\n\n\n");
  ASSERT_EQ(corpus.sentences.size(), 2u);
  EXPECT_EQ(corpus.sentences[0].tags(), (std::vector<std::string>{"B-PER", "O"}));
  EXPECT_THROW(parse_conll("Obama NNP B-PER\n", ConllColumns{0, 1}), Error);
  const auto explicitColumn = parse_conll("Obama B-PER NNP\n", ConllColumns{0, 1});
  EXPECT_EQ(explicitColumn.sentences[0].tags(), (std::vector<std::string>{"B-PER"}));
}

TEST(ParseConll, OrphanInsideIsRepaired) {
  const auto corpus = parse_conll("x\tO\ny\tI-LOC\nz\tI-PER\n");
  EXPECT_EQ(corpus.sentences[0].tags(), (std::vector<std::string>{"O", "B-LOC", "B-PER"}));
}

TEST(ParseConll, TokenCountEqualsNonBlankLines) {
  Rng rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    std::string text;
    size_t tokens = 0;
    const size_t sentences = 1 + rng.below(5);
    for (size_t s = 0; s < sentences; ++s) {
      const size_t n = 1 + rng.below(6);
      for (size_t i = 0; i < n; ++i) text += "w" + std::to_string(tokens++) + "\tO\n";
      text += std::string(1 + rng.below(3), '\n');
    }
    EXPECT_EQ(parse_conll(text).token_count(), tokens);
  }
}

TEST(BioCodec, EncodeExamples) {
  EXPECT_EQ(encode_bio({{"PER", 0, 2}}, 3), (std::vector<std::string>{"B-PER", "I-PER", "O"}));
  EXPECT_EQ(encode_bio({}, 2), (std::vector<std::string>{"O", "O"}));
  EXPECT_EQ(encode_bio({{"LOC", 1, 2}, {"LOC", 2, 3}}, 3), (std::vector<std::string>{"O", "B-LOC", "B-LOC"}));
}

TEST(BioCodec, EncodeErrors) {
  try {
    encode_bio({{"PER", 0, 2}, {"LOC", 1, 3}}, 4);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::OverlappingSpans);
  }
  try {
    encode_bio({{"PER", 2, 4}}, 3);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::SpanOutOfRange);
  }
}

TEST(BioCodec, DecodeExamples) {
  EXPECT_EQ(decode_bio({"B-PER", "I-PER", "O"}), (std::vector<Span>{{"PER", 0, 2}}));
  EXPECT_TRUE(decode_bio({"O", "O"}).empty());
  EXPECT_EQ(decode_bio({"I-LOC", "O"}), (std::vector<Span>{{"LOC", 0, 1}}));
}

TEST(BioCodec, RoundTripOnRandomSpans) {
  Rng rng(17);
  for (int trial = 0; trial < 1000; ++trial) {
    const size_t n = 1 + rng.below(20);
    const auto spans = random_spans(rng, n);
    EXPECT_EQ(decode_bio(encode_bio(spans, n)), spans);
  }
}

TEST(BioCodec, RepairedTagsAreWellFormed) {
  static const std::vector<std::string> pool{"O", "B-PER", "I-PER", "B-LOC", "I-LOC"};
  Rng rng(3);
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<std::string> tags(1 + rng.below(10));
    for (auto& t : tags) t = pool[rng.below(pool.size())];
    const auto before = decode_bio(tags);
    repair_bio(tags);
    for (size_t i = 0; i < tags.size(); ++i) {
      if (tags[i][0] != 'I') continue;
      ASSERT_GT(i, 0u);
      EXPECT_EQ(tags[i - 1].substr(2), tags[i].substr(2));
    }
    EXPECT_EQ(decode_bio(tags), before);
  }
}

TEST(MapTags, RitterToThreeClasses) {
  const auto scheme = load_tag_mapping((testing::source_dir() / "config" / "ritter_muc3.json").string());
  EXPECT_EQ(scheme.classes, (std::vector<std::string>{"LOC", "ORG", "PER"}));

  const auto corpus = parse_conll("a\tB-person\nb\tB-tvshow\nc\tI-tvshow\nd\tO\ne\tB-facility\nf\tB-geo-loc\n");
  const auto mapped = map_tags(corpus, scheme);
  EXPECT_EQ(mapped.sentences[0].tags(), (std::vector<std::string>{"B-PER", "O", "O", "O", "B-LOC", "B-LOC"}));
  EXPECT_EQ(mapped.scheme.classes, scheme.classes);
}

TEST(MapTags, UnmappedClassIsNamed) {
  TagScheme scheme = scheme_from_mapping({{"person", "PER"}});
  const auto corpus = parse_conll("a\tB-person\nb\tB-company\n");
  try {
    map_tags(corpus, scheme);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::UnmappedClass);
    EXPECT_NE(std::string(e.what()).find("company"), std::string::npos);
  }
}

TEST(MapTags, IdentityOnItsRangeIsIdempotent) {
  const auto muc = ritter_muc3_scheme();
  const auto once = map_tags(load_conll(fixture("tiny.conll").string()), muc);
  const auto identity = scheme_from_mapping({{"PER", "PER"}, {"LOC", "LOC"}, {"ORG", "ORG"}});
  const auto twice = map_tags(once, identity);
  ASSERT_EQ(once.sentences.size(), twice.sentences.size());
  for (size_t i = 0; i < once.sentences.size(); ++i) EXPECT_EQ(once.sentences[i].tags(), twice.sentences[i].tags());
  for (const auto& s : twice.sentences) {
    for (const auto& t : s.tokens) {
      const auto tag = parse_tag(t.goldTag);
      ASSERT_TRUE(tag);
      if (tag->prefix != 'O') {
        EXPECT_TRUE(twice.scheme.has_class(tag->cls));
      }
    }
  }
}

TEST(MapTags, DistinctSourceEntitiesKeepTheirBoundary) {
  // facility and geo-loc both map to LOC but remain two entities.
  const auto corpus = parse_conll("a\tB-facility\nb\tI-facility\nc\tB-geo-loc\n");
  const auto mapped = map_tags(corpus, ritter_muc3_scheme());
  EXPECT_EQ(mapped.sentences[0].tags(), (std::vector<std::string>{"B-LOC", "I-LOC", "B-LOC"}));
}

TEST(TagScheme, Validation) {
  EXPECT_THROW(scheme_from_mapping({{"person", "per"}}), Error);
  EXPECT_THROW(scheme_from_json(Json::parse(R"({"person": 3})")), Error);
  const auto s = scheme_from_mapping({{"person", "PER"}, {"band", "DROP"}});
  EXPECT_EQ(s.classes, (std::vector<std::string>{"PER"}));
  EXPECT_FALSE(s.mapping.at("band").has_value());
}

TEST(Conll, WriteThenParse) {
  const auto corpus = load_conll(fixture("tiny.conll").string());
  const auto again = parse_conll(to_conll(corpus.sentences));
  ASSERT_EQ(again.sentences.size(), corpus.sentences.size());
  for (size_t i = 0; i < corpus.sentences.size(); ++i) {
    EXPECT_EQ(again.sentences[i].tags(), corpus.sentences[i].tags());
  }
}

}  // namespace
}  // namespace mmner
