#pragma once

#include <map>
#include <string>
#include <vector>

#include "mmner/corpus.hpp"
#include "mmner/crf.hpp"
#include "mmner/lexical.hpp"

namespace mmner {

// Named features for every token of a sentence.
using SentenceFeatures = std::vector<NamedFeatures>;

namespace detail {

template <typename IdOf>
FeatureVector encode_with(const NamedFeatures& named, IdOf&& idOf) {
  std::map<int, double> merged;
  for (const auto& [name, value] : named) {
    const int id = idOf(name);
    if (id >= 0) merged[id] += value;
  }
  return FeatureVector::from_entries({merged.begin(), merged.end()});
}

}  // namespace detail

// Unseen names are dropped; this is how prediction handles an open vocabulary.
inline FeatureVector encode_features(const NamedFeatures& named, const Alphabet& alphabet) {
  return detail::encode_with(named, [&](const std::string& n) { return alphabet.lookup(n); });
}

// With `grow`, unseen names are added to the alphabet instead.
inline FeatureVector encode_features(const NamedFeatures& named, Alphabet& alphabet, bool grow) {
  if (!grow) return encode_features(named, static_cast<const Alphabet&>(alphabet));
  return detail::encode_with(named, [&](const std::string& n) { return alphabet.add(n); });
}

inline FeatureSequence encode_sentence(const SentenceFeatures& feats, Alphabet& alphabet, bool grow) {
  FeatureSequence seq;
  seq.reserve(feats.size());
  for (const auto& f : feats) seq.push_back(encode_features(f, alphabet, grow));
  return seq;
}

inline std::vector<int> encode_labels(const Sentence& sentence, const std::vector<std::string>& labels) {
  std::vector<int> ids;
  for (const auto& t : sentence.tokens) {
    auto it = std::find(labels.begin(), labels.end(), t.goldTag);
    if (it == labels.end()) throw Error(ErrorCode::InvalidModel, "tag " + t.goldTag + " not in label alphabet");
    ids.push_back(static_cast<int>(it - labels.begin()));
  }
  return ids;
}

inline std::vector<std::string> decode_labels(const std::vector<int>& ids, const std::vector<std::string>& labels) {
  std::vector<std::string> tags;
  for (int id : ids) tags.push_back(labels.at(static_cast<size_t>(id)));
  return tags;
}

inline SentenceFeatures lexical_sentence_features(const Sentence& sentence, const LexicalConfig& config) {
  SentenceFeatures out;
  for (size_t i = 0; i < sentence.size(); ++i) out.push_back(extract_lexical(sentence, i, config));
  return out;
}

// Builds the feature alphabet from `train` and fits a CRF on it.
inline CrfModel fit_crf(const std::vector<const Sentence*>& sentences, const std::vector<const SentenceFeatures*>& feats,
                        const std::vector<std::string>& classes, const TrainConfig& config) {
  Alphabet alphabet;
  auto labels = make_label_alphabet(classes);
  Dataset data;
  for (size_t i = 0; i < sentences.size(); ++i) {
    data.push_back({encode_sentence(*feats[i], alphabet, true), encode_labels(*sentences[i], labels)});
  }
  return train(data, std::move(labels), std::move(alphabet), config);
}

inline std::vector<std::string> predict_tags(const CrfModel& model, const SentenceFeatures& feats) {
  FeatureSequence seq;
  for (const auto& f : feats) seq.push_back(encode_features(f, model.features));
  return decode_labels(viterbi(model, seq), model.labels);
}

}  // namespace mmner
