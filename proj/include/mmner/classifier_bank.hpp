#pragma once

#include <optional>
#include <string>
#include <vector>

#include "mmner/error.hpp"
#include "mmner/json_io.hpp"
#include "mmner/lexical.hpp"
#include "mmner/logistic.hpp"

namespace mmner {

// One-vs-rest binary classifiers, one per NE class, in scheme class order.
struct ClassifierBank {
  std::vector<std::string> classes;
  std::vector<BinaryLogistic> models;

  bool operator==(const ClassifierBank&) const = default;
};

// Training example label: an NE class or std::nullopt for NONE.
using EvidenceLabel = std::optional<std::string>;

inline ClassifierBank train_classifier_bank(const std::vector<SparseRow>& rows, const std::vector<EvidenceLabel>& labels,
                                            const std::vector<std::string>& classes, size_t dimension,
                                            const LogisticOptions& options = {}) {
  for (const auto& label : labels) {
    if (label && std::find(classes.begin(), classes.end(), *label) == classes.end()) {
      throw Error(ErrorCode::InvariantViolation, "training label " + *label + " is not a scheme class");
    }
  }
  for (const auto& c : classes) {
    size_t positives = 0;
    for (const auto& label : labels) positives += label && *label == c;
    if (positives == 0 || positives == labels.size()) {
      throw Error(ErrorCode::DegenerateClass,
                  c + (positives == 0 ? " has no positive examples" : " has no negative examples"));
    }
  }
  ClassifierBank bank;
  bank.classes = classes;
  for (const auto& c : classes) {
    std::vector<int> y(labels.size());
    for (size_t i = 0; i < labels.size(); ++i) y[i] = labels[i] && *labels[i] == c;
    bank.models.push_back(train_binary_logistic(rows, y, dimension, options).model);
  }
  return bank;
}

inline Json bank_to_json(const ClassifierBank& bank) {
  Json j = Json::object();
  for (size_t i = 0; i < bank.classes.size(); ++i) {
    j[bank.classes[i]] = {{"weights", bank.models[i].weights}, {"bias", bank.models[i].bias}};
  }
  return j;
}

inline ClassifierBank bank_from_json(const Json& j, const std::vector<std::string>& classes, size_t dimension) {
  ClassifierBank bank;
  bank.classes = classes;
  for (const auto& c : classes) {
    BinaryLogistic m;
    m.weights = j.at(c).at("weights").get<std::vector<double>>();
    m.bias = j.at(c).at("bias").get<double>();
    if (m.weights.size() != dimension) throw Error(ErrorCode::InvalidModel, "classifier " + c + " has wrong dimension");
    bank.models.push_back(std::move(m));
  }
  return bank;
}

enum class EvidenceBin { Low, Med, High };

inline EvidenceBin evidence_bin(double score) {
  if (score < 1.0 / 3.0) return EvidenceBin::Low;
  if (score < 2.0 / 3.0) return EvidenceBin::Med;
  return EvidenceBin::High;
}

inline const char* to_string(EvidenceBin bin) {
  switch (bin) {
    case EvidenceBin::Low: return "LOW";
    case EvidenceBin::Med: return "MED";
    case EvidenceBin::High: return "HIGH";
  }
  return "LOW";
}

// `<prefix>.<C>=score` plus `<prefix>.<C>.bin=<LOW|MED|HIGH>` per class, and
// `<prefix>.none` when there was no evidence to score.
inline NamedFeatures evidence_features(const std::string& prefix, const std::vector<std::string>& classes,
                                       const std::vector<double>& scores, bool noEvidence) {
  NamedFeatures out;
  for (size_t i = 0; i < classes.size(); ++i) {
    out.emplace_back(prefix + "." + classes[i], scores[i]);
    out.emplace_back(prefix + "." + classes[i] + ".bin=" + to_string(evidence_bin(scores[i])), 1.0);
  }
  if (noEvidence) out.emplace_back(prefix + ".none", 1.0);
  return out;
}

}  // namespace mmner
