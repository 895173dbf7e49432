#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "mmner/config.hpp"
#include "mmner/corpus.hpp"
#include "mmner/crf.hpp"
#include "mmner/eval.hpp"
#include "mmner/evidence.hpp"
#include "mmner/features.hpp"
#include "mmner/image.hpp"
#include "mmner/lexical.hpp"
#include "mmner/text_evidence.hpp"
#include "mmner/vision_evidence.hpp"

namespace mmner {

// ---------------------------------------------------------------------------
// Evidence model file

struct EvidenceModel {
  std::vector<std::string> classes;
  std::optional<TextEvidenceModel> text;
  std::optional<VisionEvidenceModel> vision;

  bool operator==(const EvidenceModel&) const = default;
};

inline Json evidence_model_to_json(const EvidenceModel& m) {
  Json j = {{"formatVersion", 1}, {"classes", m.classes}};
  if (m.text) j["text"] = text_model_to_json(*m.text);
  if (m.vision) j["vision"] = vision_model_to_json(*m.vision);
  return j;
}

inline EvidenceModel evidence_model_from_json(const Json& j) {
  try {
    if (j.at("formatVersion").get<int>() != 1) throw Error(ErrorCode::InvalidModel, "unsupported formatVersion");
    EvidenceModel m;
    m.classes = j.at("classes").get<std::vector<std::string>>();
    if (j.contains("text")) m.text = text_model_from_json(j.at("text"), m.classes);
    if (j.contains("vision")) m.vision = vision_model_from_json(j.at("vision"), m.classes);
    return m;
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::InvalidModel, std::string("evidence model: ") + e.what());
  }
}

// ---------------------------------------------------------------------------
// Evidence training sets: one `LABEL<TAB>relative/path` per line, LABEL is a
// class name or NONE; blank lines and `#` comments are skipped.

struct LabeledPath {
  EvidenceLabel label;
  fs::path path;
};

inline std::vector<LabeledPath> read_training_list(const fs::path& listFile) {
  std::vector<LabeledPath> out;
  const std::string text = read_text_file(listFile.string());
  const auto lines = split_lines(text);
  for (size_t n = 0; n < lines.size(); ++n) {
    if (!is_conll_token_line(lines[n])) continue;
    const auto tab = lines[n].find('\t');
    if (tab == std::string_view::npos) {
      throw Error(ErrorCode::MalformedLine, listFile.string() + ": line " + std::to_string(n + 1) + ": expected LABEL<TAB>path");
    }
    const std::string label(lines[n].substr(0, tab));
    const std::string rel(lines[n].substr(tab + 1));
    out.push_back({label == "NONE" ? EvidenceLabel{} : EvidenceLabel{label}, listFile.parent_path() / rel});
  }
  return out;
}

inline std::vector<LabeledDocument> load_labeled_documents(const fs::path& listFile) {
  std::vector<LabeledDocument> docs;
  for (const auto& item : read_training_list(listFile)) {
    docs.push_back({tokenize_document(read_text_file(item.path.string())), item.label});
  }
  return docs;
}

inline std::vector<LabeledImage> load_labeled_images(const fs::path& listFile) {
  std::vector<LabeledImage> images;
  for (const auto& item : read_training_list(listFile)) {
    try {
      images.push_back({decode_pgm(read_text_file(item.path.string())), item.label});
    } catch (const Error& e) {
      throw Error(e.code(), item.path.string() + ": " + e.what());
    }
  }
  return images;
}

inline TagScheme load_scheme(const PipelineConfig& config) {
  return config.tagMapping ? load_tag_mapping(config.tagMapping->string()) : TagScheme{};
}

// Evidence classes come from the tag mapping when there is one, otherwise
// from the labels present in the training lists.
inline EvidenceModel train_evidence(const PipelineConfig& config) {
  std::vector<LabeledDocument> docs;
  std::vector<LabeledImage> images;
  if (config.features.text && config.evidence.textTrain) docs = load_labeled_documents(*config.evidence.textTrain);
  if (config.features.vision && config.evidence.visionTrain) images = load_labeled_images(*config.evidence.visionTrain);

  TagScheme scheme = load_scheme(config);
  if (scheme.classes.empty()) {
    std::set<std::string> classes;
    for (const auto& d : docs) {
      if (d.label) classes.insert(*d.label);
    }
    for (const auto& i : images) {
      if (i.label) classes.insert(*i.label);
    }
    scheme = identity_scheme(classes);
  }

  EvidenceModel model;
  model.classes = scheme.classes;
  if (!docs.empty()) model.text = train_text_classifiers(docs, scheme, config.sub_seed("text-train"));
  if (!images.empty()) {
    model.vision = train_vision_classifiers(images, scheme, config.evidence.codebookSize, config.sub_seed("vision-train"));
  }
  return model;
}

// Loads the configured evidence model if it exists, otherwise trains one.
inline EvidenceModel obtain_evidence_model(const PipelineConfig& config) {
  if (config.evidence.model && fs::exists(*config.evidence.model)) {
    return evidence_model_from_json(parse_json_file(config.evidence.model->string(), ErrorCode::InvalidModel));
  }
  return train_evidence(config);
}

// ---------------------------------------------------------------------------
// Feature extraction

inline NamedFeatures filter_encoding(NamedFeatures feats, EvidenceEncoding encoding) {
  if (encoding == EvidenceEncoding::Both) return feats;
  NamedFeatures out;
  for (auto& f : feats) {
    const bool binned = f.first.find(".bin=") != std::string::npos;
    const bool none = f.first.size() >= 5 && f.first.compare(f.first.size() - 5, 5, ".none") == 0;
    if (none || (encoding == EvidenceEncoding::Binned) == binned) out.push_back(std::move(f));
  }
  return out;
}

// Per-term evidence features from retrieved documents and images, memoized
// per normalized term.
class EvidenceFeaturizer {
 public:
  EvidenceFeaturizer(const PipelineConfig& config, EvidenceModel model)
      : config_(config), model_(std::move(model)), client_(*config.retrieval.index) {
    if (config.retrieval.cacheDir) cache_ = std::make_unique<CacheStore>(*config.retrieval.cacheDir);
    if (config.features.text && !model_.text) throw Error(ErrorCode::InvalidModel, "evidence model has no text channel");
    if (config.features.vision && !model_.vision) throw Error(ErrorCode::InvalidModel, "evidence model has no vision channel");
  }

  const EvidenceModel& model() const { return model_; }

  const NamedFeatures& features_for(const std::string& surface) {
    const std::string term = normalize_term(surface);
    auto it = memo_.find(term);
    if (it != memo_.end()) return it->second;
    NamedFeatures out;
    if (config_.features.text) {
      std::vector<TokenList> docs;
      if (!term.empty()) {
        for (const auto& p : fetch(term, EvidenceKind::Docs, config_.retrieval.kDocs).payloads) {
          docs.push_back(tokenize_document(p));
        }
      }
      auto f = text_evidence_features(term, docs, *model_.text);
      out.insert(out.end(), f.begin(), f.end());
    }
    if (config_.features.vision) {
      std::vector<GrayImage> images;
      if (!term.empty()) {
        for (const auto& p : fetch(term, EvidenceKind::Images, config_.retrieval.kImages).payloads) {
          try {
            images.push_back(decode_pgm(p));
          } catch (const Error& e) {
            throw Error(ErrorCode::CorruptIndex, "image for term '" + term + "': " + e.what());
          }
        }
      }
      auto f = vision_evidence_features(term, images, *model_.vision);
      out.insert(out.end(), f.begin(), f.end());
    }
    return memo_.emplace(term, filter_encoding(std::move(out), config_.features.encoding)).first->second;
  }

 private:
  EvidenceRecord fetch(const std::string& term, EvidenceKind kind, size_t k) {
    const Query q = make_query(term, kind, k);
    return cache_ ? cached_fetch(client_, *cache_, q) : client_.fetch(q);
  }

  PipelineConfig config_;
  EvidenceModel model_;
  FixtureClient client_;
  std::unique_ptr<CacheStore> cache_;
  std::map<std::string, NamedFeatures> memo_;
};

// Baseline rows carry lexical features only; augmented rows add evidence.
inline SentenceFeatures sentence_features(const Sentence& sentence, const FeatureToggles& toggles,
                                          EvidenceFeaturizer* evidence) {
  SentenceFeatures rows(sentence.size());
  for (size_t i = 0; i < sentence.size(); ++i) {
    if (toggles.lexical) rows[i] = extract_lexical(sentence, i, toggles.lexicalConfig);
    if (evidence && toggles.any_evidence()) {
      const auto& ev = evidence->features_for(sentence.tokens[i].surface);
      rows[i].insert(rows[i].end(), ev.begin(), ev.end());
    }
  }
  return rows;
}

inline LabeledCorpus load_corpus(const PipelineConfig& config) {
  LabeledCorpus corpus = load_conll(config.corpus.string());
  if (config.tagMapping) corpus = map_tags(corpus, load_tag_mapping(config.tagMapping->string()));
  return corpus;
}

// ---------------------------------------------------------------------------
// Pipeline model: CRF plus the evidence model and the feature settings used
// to train it.

struct PipelineModel {
  FeatureToggles features;
  CrfModel crf;
  std::optional<EvidenceModel> evidence;
};

inline Json pipeline_model_to_json(const PipelineModel& m) {
  Json j = {{"formatVersion", 1},
            {"features",
             {{"lexical", m.features.lexical},
              {"text", m.features.text},
              {"vision", m.features.vision},
              {"evidenceEncoding", to_string(m.features.encoding)},
              {"windowSize", m.features.lexicalConfig.windowSize},
              {"affixMax", m.features.lexicalConfig.affixMax}}},
            {"crf", crf_to_json(m.crf)}};
  if (m.evidence) j["evidence"] = evidence_model_to_json(*m.evidence);
  return j;
}

inline PipelineModel pipeline_model_from_json(const Json& j) {
  try {
    if (j.at("formatVersion").get<int>() != 1) throw Error(ErrorCode::InvalidModel, "unsupported formatVersion");
    PipelineModel m;
    const Json& f = j.at("features");
    m.features.lexical = f.at("lexical").get<bool>();
    m.features.text = f.at("text").get<bool>();
    m.features.vision = f.at("vision").get<bool>();
    const auto enc = f.at("evidenceEncoding").get<std::string>();
    m.features.encoding = enc == "raw" ? EvidenceEncoding::Raw : enc == "binned" ? EvidenceEncoding::Binned : EvidenceEncoding::Both;
    m.features.lexicalConfig.windowSize = f.at("windowSize").get<int>();
    m.features.lexicalConfig.affixMax = f.at("affixMax").get<int>();
    m.crf = crf_from_json(j.at("crf"));
    if (j.contains("evidence")) m.evidence = evidence_model_from_json(j.at("evidence"));
    return m;
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::InvalidModel, e.what());
  }
}

inline std::vector<SentenceFeatures> corpus_features(const std::vector<Sentence>& sentences, const FeatureToggles& toggles,
                                                     EvidenceFeaturizer* evidence) {
  std::vector<SentenceFeatures> rows;
  rows.reserve(sentences.size());
  for (const auto& s : sentences) rows.push_back(sentence_features(s, toggles, evidence));
  return rows;
}

inline PipelineModel train_pipeline(const PipelineConfig& config, const LabeledCorpus& corpus) {
  PipelineModel m;
  m.features = config.features;
  std::unique_ptr<EvidenceFeaturizer> featurizer;
  if (config.features.any_evidence()) {
    featurizer = std::make_unique<EvidenceFeaturizer>(config, obtain_evidence_model(config));
    m.evidence = featurizer->model();
  }
  const auto rows = corpus_features(corpus.sentences, config.features, featurizer.get());
  std::vector<const Sentence*> sents;
  std::vector<const SentenceFeatures*> feats;
  for (size_t i = 0; i < rows.size(); ++i) {
    sents.push_back(&corpus.sentences[i]);
    feats.push_back(&rows[i]);
  }
  m.crf = fit_crf(sents, feats, corpus.scheme.classes, config.train);
  return m;
}

// Retrieval settings come from `config`; feature settings from the model.
inline std::vector<std::vector<std::string>> predict_pipeline(const PipelineModel& model, const PipelineConfig& config,
                                                              const std::vector<Sentence>& sentences) {
  std::unique_ptr<EvidenceFeaturizer> featurizer;
  PipelineConfig effective = config;
  effective.features = model.features;
  if (model.features.any_evidence()) {
    if (!model.evidence) throw Error(ErrorCode::InvalidModel, "model uses evidence features but carries no evidence model");
    if (!effective.retrieval.index) throw Error(ErrorCode::ConfigInvalid, "/retrieval/index: required by the model");
    featurizer = std::make_unique<EvidenceFeaturizer>(effective, *model.evidence);
  }
  std::vector<std::vector<std::string>> out;
  for (const auto& s : sentences) out.push_back(predict_tags(model.crf, sentence_features(s, model.features, featurizer.get())));
  return out;
}

// Baseline vs. augmented cross-validation. The evidence model is obtained
// once, before any split is drawn, from the dedicated evidence training sets.
inline CvResult cross_validate(const PipelineConfig& config) {
  const LabeledCorpus corpus = load_corpus(config);
  FeatureToggles baselineToggles = config.features;
  baselineToggles.text = baselineToggles.vision = false;
  const auto baseline = corpus_features(corpus.sentences, baselineToggles, nullptr);
  if (!config.features.any_evidence()) return run_cv(corpus, baseline, baseline, config.train, config.cv);

  EvidenceFeaturizer featurizer(config, obtain_evidence_model(config));
  const auto augmented = corpus_features(corpus.sentences, config.features, &featurizer);
  return run_cv(corpus, baseline, augmented, config.train, config.cv);
}

}  // namespace mmner
