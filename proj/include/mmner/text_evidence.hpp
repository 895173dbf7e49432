#pragma once

#include <cmath>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "mmner/classifier_bank.hpp"
#include "mmner/corpus.hpp"
#include "mmner/error.hpp"
#include "mmner/json_io.hpp"
#include "mmner/unicode.hpp"

namespace mmner {

using TokenList = std::vector<std::string>;

// Lowercase, split on runs of non-alphanumeric code points, drop tokens of a
// single code point.
inline TokenList tokenize_document(std::string_view text) {
  TokenList tokens;
  std::vector<char32_t> current;
  auto flush = [&] {
    if (current.size() > 1) tokens.push_back(unicode::to_lower(unicode::encode(current)));
    current.clear();
  };
  for (char32_t c : unicode::decode(text)) {
    if (unicode::is_alnum(c)) {
      current.push_back(c);
    } else {
      flush();
    }
  }
  flush();
  return tokens;
}

struct TfidfModel {
  std::vector<std::string> terms;  // column index -> term, lexicographic
  std::map<std::string, int> vocabulary;
  std::vector<double> idf;
  size_t docCount = 0;

  int column(const std::string& term) const {
    auto it = vocabulary.find(term);
    return it == vocabulary.end() ? -1 : it->second;
  }
  bool operator==(const TfidfModel&) const = default;
};

// Smoothed idf: ln((1 + N) / (1 + df)) + 1.
inline TfidfModel fit_tfidf(const std::vector<TokenList>& docs) {
  std::map<std::string, size_t> df;
  for (const auto& doc : docs) {
    std::set<std::string> seen(doc.begin(), doc.end());
    for (const auto& t : seen) ++df[t];
  }
  if (df.empty()) throw Error(ErrorCode::EmptyVocabulary, "no terms in " + std::to_string(docs.size()) + " documents");
  TfidfModel model;
  model.docCount = docs.size();
  const double n = static_cast<double>(docs.size());
  for (const auto& [term, count] : df) {
    model.vocabulary[term] = static_cast<int>(model.terms.size());
    model.terms.push_back(term);
    model.idf.push_back(std::log((1.0 + n) / (1.0 + static_cast<double>(count))) + 1.0);
  }
  return model;
}

// Raw counts times idf, L2-normalized; out-of-vocabulary terms are ignored.
inline SparseRow tfidf_transform(const TfidfModel& model, const TokenList& doc) {
  std::map<int, double> counts;
  for (const auto& t : doc) {
    const int c = model.column(t);
    if (c >= 0) counts[c] += 1.0;
  }
  SparseRow row;
  double norm = 0.0;
  for (const auto& [c, count] : counts) {
    const double v = count * model.idf[static_cast<size_t>(c)];
    row.emplace_back(c, v);
    norm += v * v;
  }
  norm = std::sqrt(norm);
  for (auto& entry : row) entry.second /= norm;
  return row;
}

struct TextEvidenceModel {
  TfidfModel tfidf;
  ClassifierBank bank;

  bool operator==(const TextEvidenceModel&) const = default;
};

struct LabeledDocument {
  TokenList tokens;
  EvidenceLabel label;  // nullopt: NONE
};

// The trainer is deterministic full-batch descent from zero; `seed` is part
// of the interface so every evidence trainer takes the same knobs.
inline TextEvidenceModel train_text_classifiers(const std::vector<LabeledDocument>& docs, const TagScheme& scheme,
                                                uint64_t seed = 0, const LogisticOptions& options = {}) {
  (void)seed;
  std::vector<TokenList> tokens;
  std::vector<EvidenceLabel> labels;
  for (const auto& d : docs) {
    tokens.push_back(d.tokens);
    labels.push_back(d.label);
  }
  for (const auto& c : scheme.classes) {
    size_t positives = 0;
    for (const auto& l : labels) positives += l && *l == c;
    if (positives == 0 || positives == labels.size()) {
      throw Error(ErrorCode::DegenerateClass, c + (positives == 0 ? " has no positive documents" : " has no negative documents"));
    }
  }
  TextEvidenceModel model;
  model.tfidf = fit_tfidf(tokens);
  std::vector<SparseRow> rows;
  rows.reserve(tokens.size());
  for (const auto& t : tokens) rows.push_back(tfidf_transform(model.tfidf, t));
  model.bank = train_classifier_bank(rows, labels, scheme.classes, model.tfidf.terms.size(), options);
  return model;
}

// Per-class mean classifier probability over the retrieved documents.
inline std::vector<double> text_class_scores(const std::vector<TokenList>& docs, const TextEvidenceModel& model) {
  std::vector<double> scores(model.bank.classes.size(), 0.0);
  if (docs.empty()) return scores;
  std::vector<SparseRow> rows;
  for (const auto& d : docs) rows.push_back(tfidf_transform(model.tfidf, d));
  for (size_t c = 0; c < scores.size(); ++c) {
    double sum = 0.0;
    for (const auto& r : rows) sum += model.bank.models[c].probability(r);
    scores[c] = sum / static_cast<double>(rows.size());
  }
  return scores;
}

inline NamedFeatures text_evidence_features(const std::string& term, const std::vector<TokenList>& docs,
                                            const TextEvidenceModel& model) {
  (void)term;
  return evidence_features("txt", model.bank.classes, text_class_scores(docs, model), docs.empty());
}

inline Json text_model_to_json(const TextEvidenceModel& model) {
  return {{"docCount", model.tfidf.docCount},
          {"vocabulary", model.tfidf.terms},
          {"idf", model.tfidf.idf},
          {"classifiers", bank_to_json(model.bank)}};
}

inline TextEvidenceModel text_model_from_json(const Json& j, const std::vector<std::string>& classes) {
  TextEvidenceModel model;
  model.tfidf.docCount = j.at("docCount").get<size_t>();
  model.tfidf.terms = j.at("vocabulary").get<std::vector<std::string>>();
  model.tfidf.idf = j.at("idf").get<std::vector<double>>();
  if (model.tfidf.idf.size() != model.tfidf.terms.size()) throw Error(ErrorCode::InvalidModel, "idf/vocabulary size");
  for (size_t i = 0; i < model.tfidf.terms.size(); ++i) model.tfidf.vocabulary[model.tfidf.terms[i]] = static_cast<int>(i);
  model.bank = bank_from_json(j.at("classifiers"), classes, model.tfidf.terms.size());
  return model;
}

}  // namespace mmner
