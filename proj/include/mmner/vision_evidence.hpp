#pragma once

#include <string>
#include <vector>

#include "mmner/bovw.hpp"
#include "mmner/classifier_bank.hpp"
#include "mmner/corpus.hpp"
#include "mmner/image.hpp"
#include "mmner/sift.hpp"

namespace mmner {

struct VisionEvidenceModel {
  VisualCodebook codebook;
  ClassifierBank bank;

  bool operator==(const VisionEvidenceModel&) const = default;
};

struct LabeledImage {
  GrayImage image;
  EvidenceLabel label;  // nullopt: NONE
};

inline SparseRow dense_to_sparse(const std::vector<double>& v) {
  SparseRow row;
  for (size_t i = 0; i < v.size(); ++i) {
    if (v[i] != 0.0) row.emplace_back(static_cast<int>(i), v[i]);
  }
  return row;
}

inline VisionEvidenceModel train_vision_classifiers(const std::vector<LabeledImage>& images, const TagScheme& scheme,
                                                    size_t k, uint64_t seed, const LogisticOptions& options = {}) {
  std::vector<EvidenceLabel> labels;
  for (const auto& img : images) labels.push_back(img.label);
  for (const auto& c : scheme.classes) {
    size_t positives = 0;
    for (const auto& l : labels) positives += l && *l == c;
    if (positives == 0 || positives == labels.size()) {
      throw Error(ErrorCode::DegenerateClass, c + (positives == 0 ? " has no positive images" : " has no negative images"));
    }
  }

  std::vector<std::vector<Descriptor>> perImage;
  std::vector<Descriptor> all;
  for (const auto& img : images) {
    perImage.push_back(extract_descriptors(img.image));
    all.insert(all.end(), perImage.back().begin(), perImage.back().end());
  }
  if (all.size() < k) {
    throw Error(ErrorCode::TooFewDescriptors, std::to_string(all.size()) + " descriptors for k=" + std::to_string(k));
  }

  VisionEvidenceModel model;
  model.codebook = build_codebook(all, k, seed);
  std::vector<SparseRow> rows;
  for (const auto& descs : perImage) rows.push_back(dense_to_sparse(bovw_histogram(descs, model.codebook)));
  model.bank = train_classifier_bank(rows, labels, scheme.classes, k, options);
  return model;
}

// Per-class mean classifier probability over the retrieved images.
inline std::vector<double> vision_class_scores(const std::vector<GrayImage>& images, const VisionEvidenceModel& model) {
  std::vector<double> scores(model.bank.classes.size(), 0.0);
  if (images.empty()) return scores;
  std::vector<SparseRow> rows;
  for (const auto& img : images) rows.push_back(dense_to_sparse(bovw_histogram(extract_descriptors(img), model.codebook)));
  for (size_t c = 0; c < scores.size(); ++c) {
    double sum = 0.0;
    for (const auto& r : rows) sum += model.bank.models[c].probability(r);
    scores[c] = sum / static_cast<double>(rows.size());
  }
  return scores;
}

inline NamedFeatures vision_evidence_features(const std::string& term, const std::vector<GrayImage>& images,
                                              const VisionEvidenceModel& model) {
  (void)term;
  return evidence_features("img", model.bank.classes, vision_class_scores(images, model), images.empty());
}

inline Json vision_model_to_json(const VisionEvidenceModel& model) {
  Json j = codebook_to_json(model.codebook);
  j["classifiers"] = bank_to_json(model.bank);
  return j;
}

inline VisionEvidenceModel vision_model_from_json(const Json& j, const std::vector<std::string>& classes) {
  VisionEvidenceModel model;
  model.codebook = codebook_from_json(j);
  model.bank = bank_from_json(j.at("classifiers"), classes, model.codebook.k());
  return model;
}

}  // namespace mmner
