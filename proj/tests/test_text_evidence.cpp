#include <gtest/gtest.h>

#include <cmath>

#include "mmner/evidence.hpp"
#include "mmner/pipeline.hpp"
#include "mmner/text_evidence.hpp"
#include "test_support.hpp"

namespace mmner {
namespace {

using testing::fixture;

const std::vector<TokenList> kThreeDocs{{"paris", "france"}, {"paris", "hilton"}, {"france"}};

TagScheme three_classes() { return identity_scheme({"LOC", "ORG", "PER"}); }

double value_at(const SparseRow& row, int column) {
  for (const auto& [c, v] : row) {
    if (c == column) return v;
  }
  return 0.0;
}

TEST(Tokenize, LowercaseSplitDropShort) {
  EXPECT_EQ(tokenize_document("Paris, France! a B c2 #Hilton"),
            (TokenList{"paris", "france", "c2", "hilton"}));
  EXPECT_EQ(tokenize_document("Köln–Düsseldorf"), (TokenList{"köln", "düsseldorf"}));
  EXPECT_TRUE(tokenize_document("a . b").empty());
}

TEST(Tfidf, ThreeDocFixture) {
  const auto m = fit_tfidf(kThreeDocs);
  EXPECT_EQ(m.terms, (std::vector<std::string>{"france", "hilton", "paris"}));
  EXPECT_EQ(m.docCount, 3u);
  // df(paris) = df(france) = 2, df(hilton) = 1, N = 3.
  EXPECT_NEAR(m.idf[2], std::log(4.0 / 3.0) + 1.0, 1e-12);
  EXPECT_NEAR(m.idf[1], std::log(2.0) + 1.0, 1e-12);
  EXPECT_NEAR(m.idf[1], 1.693147, 1e-6);
}

TEST(Tfidf, HandComputedVector) {
  const auto m = fit_tfidf(kThreeDocs);
  // Counts paris:2, france:1 share the same idf, so the normalized vector is
  // (1, 2) / sqrt(5) over (france, paris).
  const auto row = tfidf_transform(m, {"paris", "paris", "france"});
  ASSERT_EQ(row.size(), 2u);
  EXPECT_NEAR(value_at(row, 0), 1.0 / std::sqrt(5.0), 1e-9);
  EXPECT_NEAR(value_at(row, 2), 2.0 / std::sqrt(5.0), 1e-9);
  EXPECT_EQ(value_at(row, 1), 0.0);

  // hilton (idf ln2+1) against paris (idf ln(4/3)+1), one count each.
  const double a = std::log(4.0 / 3.0) + 1.0, b = std::log(2.0) + 1.0;
  const auto mixed = tfidf_transform(m, {"hilton", "paris"});
  EXPECT_NEAR(value_at(mixed, 1), b / std::hypot(a, b), 1e-9);
  EXPECT_NEAR(value_at(mixed, 2), a / std::hypot(a, b), 1e-9);
}

TEST(Tfidf, SmallCases) {
  const auto one = fit_tfidf({{"a"}});
  EXPECT_EQ(one.vocabulary.at("a"), 0);
  EXPECT_DOUBLE_EQ(one.idf[0], 1.0);
  const auto row = tfidf_transform(one, {"a"});
  ASSERT_EQ(row.size(), 1u);
  EXPECT_DOUBLE_EQ(row[0].second, 1.0);
  EXPECT_TRUE(tfidf_transform(one, {"zzz", "yyy"}).empty());

  const auto everywhere = fit_tfidf({{"x", "y"}, {"x"}, {"x", "z"}});
  EXPECT_DOUBLE_EQ(everywhere.idf[static_cast<size_t>(everywhere.column("x"))], 1.0);
}

TEST(Tfidf, EmptyVocabulary) {
  try {
    fit_tfidf({{}, {}});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::EmptyVocabulary);
  }
}

TEST(Tfidf, Properties) {
  static const std::vector<std::string> words{"alpha", "beta", "gamma", "delta", "eps", "zeta", "eta"};
  Rng rng(21);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<TokenList> docs(1 + rng.below(6));
    for (auto& d : docs) {
      d.resize(rng.below(6));
      for (auto& w : d) w = words[rng.below(words.size())];
    }
    if (std::all_of(docs.begin(), docs.end(), [](const TokenList& d) { return d.empty(); })) docs[0] = {"alpha"};
    const auto m = fit_tfidf(docs);
    for (double idf : m.idf) EXPECT_GE(idf, 1.0);
    for (size_t i = 0; i < m.terms.size(); ++i) EXPECT_EQ(m.vocabulary.at(m.terms[i]), static_cast<int>(i));

    auto shuffled = docs;
    rng.shuffle(shuffled);
    EXPECT_EQ(fit_tfidf(shuffled).terms, m.terms);

    TokenList probe(rng.below(6));
    for (auto& w : probe) w = words[rng.below(words.size())];
    const auto row = tfidf_transform(m, probe);
    double sq = 0.0;
    for (const auto& [c, v] : row) sq += v * v;
    if (row.empty()) {
      EXPECT_EQ(sq, 0.0);
    } else {
      EXPECT_NEAR(std::sqrt(sq), 1.0, 1e-9);
    }
  }
}

std::vector<LabeledDocument> stadium_docs() {
  return {
      {{"stadium", "match", "crowd"}, "LOC"},
      {{"stadium", "seats", "roof"}, "LOC"},
      {{"stadium", "tickets"}, "LOC"},
      {{"singer", "album"}, "PER"},
      {{"actor", "movie", "album"}, "PER"},
      {{"company", "shares"}, "ORG"},
      {{"market", "company", "ceo"}, "ORG"},
      {{"coffee", "monday"}, std::nullopt},
      {{"rain", "weather", "crowd"}, std::nullopt},
  };
}

TEST(TextClassifiers, SeparableClass) {
  const auto model = train_text_classifiers(stadium_docs(), three_classes(), 1);
  const auto stadium = text_class_scores({{"stadium", "roof"}}, model);
  const auto negative = text_class_scores({{"coffee", "monday"}}, model);
  EXPECT_GT(stadium[0], 0.9);   // LOC
  EXPECT_LT(negative[0], 0.1);
}

TEST(TextClassifiers, AllNoneIsDegenerate) {
  std::vector<LabeledDocument> docs{{{"a1", "b1"}, std::nullopt}, {{"c1"}, std::nullopt}};
  for (const auto& cls : {"LOC", "ORG", "PER"}) {
    try {
      train_text_classifiers(docs, identity_scheme({cls}), 0);
      FAIL();
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::DegenerateClass);
      EXPECT_NE(std::string(e.what()).find(cls), std::string::npos);
    }
  }
}

TEST(Logistic, DuplicatedTrainingSetGivesSameModel) {
  // Featurize once so both fits see the same rows; only the logistic
  // objective is under test (duplicating documents would shift idf).
  const auto docs = stadium_docs();
  std::vector<TokenList> tokens;
  for (const auto& d : docs) tokens.push_back(d.tokens);
  const auto tfidf = fit_tfidf(tokens);
  std::vector<SparseRow> rows;
  std::vector<int> labels;
  for (const auto& d : docs) {
    rows.push_back(tfidf_transform(tfidf, d.tokens));
    labels.push_back(d.label == "LOC");
  }
  auto rows2 = rows;
  rows2.insert(rows2.end(), rows.begin(), rows.end());
  auto labels2 = labels;
  labels2.insert(labels2.end(), labels.begin(), labels.end());
  const size_t dim = tfidf.terms.size();
  const auto a = train_binary_logistic(rows, labels, dim, {});
  const auto b = train_binary_logistic(rows2, labels2, dim, {});
  EXPECT_NEAR(a.model.bias, b.model.bias, 1e-9);
  for (size_t j = 0; j < dim; ++j) EXPECT_NEAR(a.model.weights[j], b.model.weights[j], 1e-9);
}

TEST(Logistic, LossNeverIncreases) {
  Rng rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<SparseRow> rows;
    std::vector<int> y;
    for (int i = 0; i < 30; ++i) {
      SparseRow r;
      for (int j = 0; j < 5; ++j) {
        if (rng.uniform() < 0.5) r.emplace_back(j, 4.0 * rng.uniform() - 2.0);
      }
      rows.push_back(r);
      y.push_back(rng.uniform() < 0.4);
    }
    LogisticOptions opt;
    opt.learningRate = 8.0;  // large enough that some steps get rejected
    opt.iterations = 200;
    const auto fit = train_binary_logistic(rows, y, 5, opt);
    for (size_t i = 1; i < fit.lossHistory.size(); ++i) ASSERT_LE(fit.lossHistory[i], fit.lossHistory[i - 1]);
  }
}

TEST(Logistic, MatchesClosedFormOnInterceptOnlyProblem) {
  // With no features the optimum bias is the log-odds of the positive rate.
  const std::vector<SparseRow> rows(10);
  const std::vector<int> y{1, 1, 1, 0, 0, 0, 0, 0, 0, 0};
  LogisticOptions opt;
  opt.iterations = 2000;
  const auto fit = train_binary_logistic(rows, y, 0, opt);
  EXPECT_NEAR(fit.model.bias, std::log(3.0 / 7.0), 1e-6);
}

TEST(EvidenceFeatures, EmptyDocs) {
  const auto model = train_text_classifiers(stadium_docs(), three_classes(), 0);
  const auto f = text_evidence_features("anything", {}, model);
  const NamedFeatures expected{{"txt.LOC", 0.0}, {"txt.LOC.bin=LOW", 1.0}, {"txt.ORG", 0.0},
                               {"txt.ORG.bin=LOW", 1.0}, {"txt.PER", 0.0}, {"txt.PER.bin=LOW", 1.0},
                               {"txt.none", 1.0}};
  EXPECT_EQ(f, expected);
}

TEST(EvidenceFeatures, ConstantStubClassifier) {
  TextEvidenceModel stub;
  stub.tfidf = fit_tfidf({{"aa"}});
  stub.bank.classes = {"LOC", "ORG", "PER"};
  stub.bank.models.assign(3, BinaryLogistic{{0.0}, 0.0});
  stub.bank.models[0].bias = std::log(0.8 / 0.2);
  const auto f = text_evidence_features("paris", {{"aa"}, {"bb"}}, stub);
  ASSERT_EQ(f.size(), 6u);
  EXPECT_EQ(f[0].first, "txt.LOC");
  EXPECT_NEAR(f[0].second, 0.8, 1e-12);
  EXPECT_EQ(f[1].first, "txt.LOC.bin=HIGH");
  EXPECT_EQ(f[3].first, "txt.ORG.bin=MED");
}

TEST(EvidenceFeatures, BinsMatchThresholds) {
  Rng rng(2);
  for (int i = 0; i < 1000; ++i) {
    const double s = rng.uniform();
    const auto f = evidence_features("txt", {"X"}, {s}, false);
    const std::string bin = f[1].first.substr(f[1].first.find('=') + 1);
    EXPECT_EQ(bin, s < 1.0 / 3.0 ? "LOW" : s < 2.0 / 3.0 ? "MED" : "HIGH");
  }
  EXPECT_EQ(to_string(evidence_bin(1.0 / 3.0)), std::string("MED"));
  EXPECT_EQ(to_string(evidence_bin(2.0 / 3.0)), std::string("HIGH"));
}

TEST(EvidenceFeatures, ParisLeansLocationOnFixtureIndex) {
  const auto docs = load_labeled_documents(fixture("evidence/text_train.tsv"));
  const auto model = train_text_classifiers(docs, three_classes(), 0);
  FixtureClient client(fixture("index"));
  const auto record = client.fetch(make_query("paris", EvidenceKind::Docs, 10));
  ASSERT_FALSE(record.payloads.empty());
  std::vector<TokenList> retrieved;
  for (const auto& p : record.payloads) retrieved.push_back(tokenize_document(p));
  const auto scores = text_class_scores(retrieved, model);
  for (double s : scores) {
    EXPECT_GE(s, 0.0);
    EXPECT_LE(s, 1.0);
  }
  EXPECT_GT(scores[0], scores[2]);  // LOC > PER
}

TEST(TextModelFile, RoundTrip) {
  const auto model = train_text_classifiers(stadium_docs(), three_classes(), 0);
  const auto back = text_model_from_json(Json::parse(dump_json(text_model_to_json(model))), model.bank.classes);
  EXPECT_EQ(back, model);
}

}  // namespace
}  // namespace mmner
