#pragma once

#include <cmath>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "mmner/corpus.hpp"
#include "mmner/crf.hpp"
#include "mmner/error.hpp"
#include "mmner/features.hpp"
#include "mmner/json_io.hpp"
#include "mmner/rng.hpp"

namespace mmner {

struct ClassScore {
  size_t tp = 0, fp = 0, fn = 0;
  double precision = 0.0, recall = 0.0, f1 = 0.0;

  // 0/0 is defined as 0 for all three ratios.
  void finalize() {
    precision = tp + fp ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
    recall = tp + fn ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0;
    f1 = precision + recall > 0.0 ? 2.0 * precision * recall / (precision + recall) : 0.0;
  }
  void add(const ClassScore& o) {
    tp += o.tp;
    fp += o.fp;
    fn += o.fn;
  }
  bool operator==(const ClassScore&) const = default;
};

enum class Condition { Baseline, Augmented };

inline const char* to_string(Condition c) { return c == Condition::Baseline ? "BASELINE" : "AUGMENTED"; }

struct FoldScore {
  std::map<std::string, ClassScore> perClass;
  ClassScore micro;

  bool operator==(const FoldScore&) const = default;
};

struct EvalReport {
  Condition condition = Condition::Baseline;
  std::map<std::string, ClassScore> perClass;
  ClassScore micro;
  std::vector<FoldScore> perFold;
  double foldMicroF1Mean = 0.0;
  double foldMicroF1Stdev = 0.0;

  bool same_scores(const EvalReport& o) const {
    return perClass == o.perClass && micro == o.micro && perFold == o.perFold &&
           foldMicroF1Mean == o.foldMicroF1Mean && foldMicroF1Stdev == o.foldMicroF1Stdev;
  }
};

namespace detail {

inline void finalize(FoldScore& s) {
  s.micro = {};
  for (auto& [c, score] : s.perClass) {
    score.finalize();
    s.micro.add(score);
  }
  s.micro.finalize();
}

inline void accumulate(FoldScore& s, const std::vector<std::string>& gold, const std::vector<std::string>& predicted) {
  const auto goldSpans = decode_bio(gold);
  const auto predSpans = decode_bio(predicted);
  std::set<Span> goldSet(goldSpans.begin(), goldSpans.end());
  std::set<Span> matched;
  for (const auto& p : predSpans) {
    if (goldSet.count(p)) {
      ++s.perClass[p.cls].tp;
      matched.insert(p);
    } else {
      ++s.perClass[p.cls].fp;
    }
  }
  for (const auto& g : goldSpans) {
    if (!matched.count(g)) ++s.perClass[g.cls].fn;
  }
}

}  // namespace detail

// Phrase-level exact match: a predicted entity counts only when class, start
// and end all agree with a gold entity.
inline FoldScore score_sentences(const std::vector<std::vector<std::string>>& gold,
                                 const std::vector<std::vector<std::string>>& predicted,
                                 const std::vector<std::string>& classes) {
  if (gold.size() != predicted.size()) {
    throw Error(ErrorCode::ShapeMismatch, std::to_string(gold.size()) + " gold vs " +
                                              std::to_string(predicted.size()) + " predicted sentences");
  }
  FoldScore s;
  for (const auto& c : classes) s.perClass[c];
  for (size_t i = 0; i < gold.size(); ++i) {
    if (gold[i].size() != predicted[i].size()) {
      throw Error(ErrorCode::ShapeMismatch, "sentence " + std::to_string(i) + ": " + std::to_string(gold[i].size()) +
                                                " gold vs " + std::to_string(predicted[i].size()) + " predicted tags");
    }
    detail::accumulate(s, gold[i], predicted[i]);
  }
  detail::finalize(s);
  return s;
}

inline EvalReport conll_score(const LabeledCorpus& gold, const std::vector<std::vector<std::string>>& predicted) {
  std::vector<std::vector<std::string>> goldTags;
  for (const auto& s : gold.sentences) goldTags.push_back(s.tags());
  const FoldScore s = score_sentences(goldTags, predicted, gold.scheme.classes);
  EvalReport r;
  r.perClass = s.perClass;
  r.micro = s.micro;
  r.perFold.push_back(s);
  r.foldMicroF1Mean = s.micro.f1;
  return r;
}

struct CVConfig {
  int folds = 5;
  uint64_t seed = 0;
};

struct FoldSplit {
  std::vector<size_t> train;
  std::vector<size_t> test;
};

// Seeded shuffle of sentence indices dealt round-robin into the test folds.
// Index lists are returned sorted.
inline std::vector<FoldSplit> kfold_split(size_t numSentences, const CVConfig& config) {
  if (config.folds < 2) throw Error(ErrorCode::ConfigInvalid, "folds must be >= 2");
  if (static_cast<size_t>(config.folds) > numSentences) {
    throw Error(ErrorCode::TooFewSentences, std::to_string(numSentences) + " sentences for " +
                                                std::to_string(config.folds) + " folds");
  }
  std::vector<size_t> order(numSentences);
  for (size_t i = 0; i < numSentences; ++i) order[i] = i;
  Rng rng(config.seed);
  rng.shuffle(order);

  const size_t k = static_cast<size_t>(config.folds);
  std::vector<FoldSplit> splits(k);
  std::vector<size_t> foldOf(numSentences);
  for (size_t j = 0; j < numSentences; ++j) foldOf[order[j]] = j % k;
  for (size_t i = 0; i < numSentences; ++i) {
    for (size_t f = 0; f < k; ++f) (foldOf[i] == f ? splits[f].test : splits[f].train).push_back(i);
  }
  return splits;
}

inline std::vector<FoldSplit> kfold_split(const LabeledCorpus& corpus, const CVConfig& config) {
  return kfold_split(corpus.sentences.size(), config);
}

// Pools per-fold counts into one report; the fold-level micro F1 mean and
// standard deviation ride along.
inline EvalReport pool_folds(Condition condition, std::vector<FoldScore> folds, const std::vector<std::string>& classes) {
  EvalReport r;
  r.condition = condition;
  for (const auto& c : classes) r.perClass[c];
  for (const auto& f : folds) {
    for (const auto& [c, s] : f.perClass) r.perClass[c].add(s);
  }
  for (auto& [c, s] : r.perClass) {
    s.finalize();
    r.micro.add(s);
  }
  r.micro.finalize();
  if (!folds.empty()) {
    double mean = 0.0;
    for (const auto& f : folds) mean += f.micro.f1;
    mean /= static_cast<double>(folds.size());
    double var = 0.0;
    for (const auto& f : folds) var += (f.micro.f1 - mean) * (f.micro.f1 - mean);
    r.foldMicroF1Mean = mean;
    r.foldMicroF1Stdev = folds.size() > 1 ? std::sqrt(var / static_cast<double>(folds.size() - 1)) : 0.0;
  }
  r.perFold = std::move(folds);
  return r;
}

struct CvResult {
  EvalReport baseline;
  EvalReport augmented;
  std::vector<FoldSplit> splits;
};

// Cross-validates two feature conditions over the same splits. Feature rows
// are precomputed per sentence; each fold builds its own feature alphabet
// from its training sentences only.
inline CvResult run_cv(const LabeledCorpus& corpus, const std::vector<SentenceFeatures>& baselineFeats,
                       const std::vector<SentenceFeatures>& augmentedFeats, const TrainConfig& train,
                       const CVConfig& cv) {
  if (baselineFeats.size() != corpus.sentences.size() || augmentedFeats.size() != corpus.sentences.size()) {
    throw Error(ErrorCode::ShapeMismatch, "feature rows do not match corpus size");
  }
  CvResult result;
  result.splits = kfold_split(corpus, cv);
  const auto& classes = corpus.scheme.classes;

  auto run_condition = [&](const std::vector<SentenceFeatures>& feats) {
    std::vector<FoldScore> folds;
    for (size_t f = 0; f < result.splits.size(); ++f) {
      try {
        const auto& split = result.splits[f];
        std::vector<const Sentence*> sents;
        std::vector<const SentenceFeatures*> rows;
        for (size_t i : split.train) {
          sents.push_back(&corpus.sentences[i]);
          rows.push_back(&feats[i]);
        }
        const CrfModel model = fit_crf(sents, rows, classes, train);
        std::vector<std::vector<std::string>> gold, predicted;
        for (size_t i : split.test) {
          gold.push_back(corpus.sentences[i].tags());
          predicted.push_back(predict_tags(model, feats[i]));
        }
        folds.push_back(score_sentences(gold, predicted, classes));
      } catch (const Error& e) {
        throw Error(e.code(), "fold " + std::to_string(f) + ": " + e.what());
      }
    }
    return folds;
  };
  result.baseline = pool_folds(Condition::Baseline, run_condition(baselineFeats), classes);
  result.augmented = pool_folds(Condition::Augmented, run_condition(augmentedFeats), classes);
  return result;
}

// ---------------------------------------------------------------------------
// Report output

inline Json class_score_json(const ClassScore& s) {
  return {{"tp", s.tp}, {"fp", s.fp}, {"fn", s.fn}, {"precision", s.precision}, {"recall", s.recall}, {"f1", s.f1}};
}

inline Json report_json(const EvalReport& r) {
  Json perClass = Json::object();
  for (const auto& [c, s] : r.perClass) perClass[c] = class_score_json(s);
  Json folds = Json::array();
  for (const auto& f : r.perFold) {
    Json fc = Json::object();
    for (const auto& [c, s] : f.perClass) fc[c] = class_score_json(s);
    folds.push_back({{"perClass", fc}, {"micro", class_score_json(f.micro)}});
  }
  return {{"condition", to_string(r.condition)},
          {"perClass", perClass},
          {"micro", class_score_json(r.micro)},
          {"perFold", folds},
          {"foldMicroF1Mean", r.foldMicroF1Mean},
          {"foldMicroF1Stdev", r.foldMicroF1Stdev}};
}

inline Json cv_report_json(const CvResult& cv, const CVConfig& config) {
  return {{"metadata",
           {{"scoring", "phrase-level exact match"},
            {"aggregation", "pooled counts across folds"},
            {"folds", config.folds},
            {"seed", config.seed}}},
          {"baseline", report_json(cv.baseline)},
          {"augmented", report_json(cv.augmented)}};
}

inline constexpr const char* kCsvHeader = "condition,fold,class,tp,fp,fn,precision,recall,f1";

inline std::string report_csv(const std::vector<EvalReport>& reports) {
  std::string out = std::string(kCsvHeader) + "\n";
  auto row = [&](const EvalReport& r, const std::string& fold, const std::string& cls, const ClassScore& s) {
    out += std::string(to_string(r.condition)) + "," + fold + "," + cls + "," + std::to_string(s.tp) + "," +
           std::to_string(s.fp) + "," + std::to_string(s.fn) + "," + format_double(s.precision) + "," +
           format_double(s.recall) + "," + format_double(s.f1) + "\n";
  };
  for (const auto& r : reports) {
    for (size_t f = 0; f < r.perFold.size(); ++f) {
      for (const auto& [c, s] : r.perFold[f].perClass) row(r, std::to_string(f), c, s);
      row(r, std::to_string(f), "micro", r.perFold[f].micro);
    }
    for (const auto& [c, s] : r.perClass) row(r, "pooled", c, s);
    row(r, "pooled", "micro", r.micro);
  }
  return out;
}

}  // namespace mmner
