#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "mmner/error.hpp"
#include "mmner/json_io.hpp"
#include "mmner/lbfgs.hpp"

namespace mmner {

// Sparse feature row for one token position: (featureId, value) pairs sorted
// by id, ids unique and non-negative, values finite.
class FeatureVector {
 public:
  FeatureVector() = default;

  static FeatureVector from_entries(std::vector<std::pair<int, double>> entries) {
    std::sort(entries.begin(), entries.end());
    for (size_t i = 0; i < entries.size(); ++i) {
      if (entries[i].first < 0) throw Error(ErrorCode::InvariantViolation, "negative feature id");
      if (!std::isfinite(entries[i].second)) throw Error(ErrorCode::InvariantViolation, "non-finite feature value");
      if (i > 0 && entries[i].first == entries[i - 1].first) {
        throw Error(ErrorCode::InvariantViolation, "duplicate feature id " + std::to_string(entries[i].first));
      }
    }
    FeatureVector v;
    v.entries_ = std::move(entries);
    return v;
  }

  const std::vector<std::pair<int, double>>& entries() const { return entries_; }
  size_t size() const { return entries_.size(); }
  bool operator==(const FeatureVector&) const = default;

 private:
  std::vector<std::pair<int, double>> entries_;
};

using FeatureSequence = std::vector<FeatureVector>;

struct Instance {
  FeatureSequence feats;
  std::vector<int> labels;
};

using Dataset = std::vector<Instance>;

// Bidirectional name <-> dense id table.
class Alphabet {
 public:
  int lookup(const std::string& name) const {
    auto it = ids_.find(name);
    return it == ids_.end() ? -1 : it->second;
  }

  int add(const std::string& name) {
    auto [it, inserted] = ids_.emplace(name, static_cast<int>(names_.size()));
    if (inserted) names_.push_back(name);
    return it->second;
  }

  const std::string& name(int id) const { return names_.at(static_cast<size_t>(id)); }
  const std::vector<std::string>& names() const { return names_; }
  size_t size() const { return names_.size(); }
  bool operator==(const Alphabet& other) const { return names_ == other.names_; }

 private:
  std::vector<std::string> names_;
  std::unordered_map<std::string, int> ids_;
};

// "O" first, then every B-/I- tag for the given classes in lexicographic order.
inline std::vector<std::string> make_label_alphabet(const std::vector<std::string>& classes) {
  std::set<std::string> tags;
  for (const auto& c : classes) {
    tags.insert("B-" + c);
    tags.insert("I-" + c);
  }
  std::vector<std::string> labels{"O"};
  labels.insert(labels.end(), tags.begin(), tags.end());
  return labels;
}

struct TrainConfig {
  double l2Lambda = 0.1;
  int maxIterations = 200;
  double gradTolerance = 1e-4;
  int lbfgsMemory = 10;
  uint64_t seed = 0;

  void validate() const {
    if (!(l2Lambda >= 0.0) || !std::isfinite(l2Lambda)) throw Error(ErrorCode::ConfigInvalid, "l2Lambda must be >= 0");
    if (maxIterations < 1) throw Error(ErrorCode::ConfigInvalid, "maxIterations must be >= 1");
    if (!(gradTolerance > 0.0)) throw Error(ErrorCode::ConfigInvalid, "gradTolerance must be > 0");
    if (lbfgsMemory < 1) throw Error(ErrorCode::ConfigInvalid, "lbfgsMemory must be >= 1");
  }
};

// Linear-chain CRF parameters. Weights live in one flat vector: emission
// weight (f, y) at f * L + y, then the L x L transition table at F * L + a * L + b.
struct CrfModel {
  std::vector<std::string> labels;
  Alphabet features;
  std::vector<double> weights;
  double l2Lambda = 0.0;

  static CrfModel zeros(std::vector<std::string> labels, Alphabet features, double l2Lambda = 0.0) {
    if (labels.empty() || labels.front() != "O") throw Error(ErrorCode::InvalidModel, "label alphabet must start with O");
    CrfModel m;
    m.labels = std::move(labels);
    m.features = std::move(features);
    m.l2Lambda = l2Lambda;
    m.weights.assign(m.num_parameters(), 0.0);
    return m;
  }

  size_t num_labels() const { return labels.size(); }
  size_t num_features() const { return features.size(); }
  size_t num_parameters() const { return (num_features() + num_labels()) * num_labels(); }
  size_t emission_index(size_t f, size_t y) const { return f * num_labels() + y; }
  size_t transition_index(size_t a, size_t b) const { return (num_features() + a) * num_labels() + b; }

  double& emission(size_t f, size_t y) { return weights[emission_index(f, y)]; }
  double emission(size_t f, size_t y) const { return weights[emission_index(f, y)]; }
  double& transition(size_t a, size_t b) { return weights[transition_index(a, b)]; }
  double transition(size_t a, size_t b) const { return weights[transition_index(a, b)]; }

  int label_id(const std::string& tag) const {
    auto it = std::find(labels.begin(), labels.end(), tag);
    return it == labels.end() ? -1 : static_cast<int>(it - labels.begin());
  }
};

struct Marginals {
  double logZ = 0.0;
  std::vector<std::vector<double>> node;  // [t][y]
  std::vector<std::vector<double>> edge;  // [t][a * L + b], t >= 1; edge[0] empty
};

namespace detail {

// Read-only view of a parameter vector with its shape.
struct CrfView {
  std::span<const double> w;
  size_t numFeatures;
  size_t numLabels;

  double trans(size_t a, size_t b) const { return w[(numFeatures + a) * numLabels + b]; }
};

inline double log_sum_exp(std::span<const double> xs) {
  double m = -std::numeric_limits<double>::infinity();
  for (double x : xs) m = std::max(m, x);
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (double x : xs) s += std::exp(x - m);
  return m + std::log(s);
}

// T x L matrix of per-position emission scores.
inline std::vector<double> emission_scores(const CrfView& v, const FeatureSequence& feats) {
  const size_t L = v.numLabels;
  std::vector<double> scores(feats.size() * L, 0.0);
  for (size_t t = 0; t < feats.size(); ++t) {
    for (const auto& [f, x] : feats[t].entries()) {
      if (static_cast<size_t>(f) >= v.numFeatures) throw Error(ErrorCode::InvalidModel, "feature id out of range");
      const double* row = v.w.data() + static_cast<size_t>(f) * L;
      for (size_t y = 0; y < L; ++y) scores[t * L + y] += row[y] * x;
    }
  }
  return scores;
}

inline void check_lengths(const FeatureSequence& feats, const std::vector<int>& labels, size_t numLabels) {
  if (feats.empty() || feats.size() != labels.size()) {
    throw Error(ErrorCode::LengthMismatch, std::to_string(feats.size()) + " feature rows vs " +
                                               std::to_string(labels.size()) + " labels");
  }
  for (int y : labels) {
    if (y < 0 || static_cast<size_t>(y) >= numLabels) throw Error(ErrorCode::InvalidModel, "label id out of range");
  }
}

inline double score_sequence(const CrfView& v, const FeatureSequence& feats, const std::vector<int>& labels) {
  check_lengths(feats, labels, v.numLabels);
  double s = 0.0;
  for (size_t t = 0; t < feats.size(); ++t) {
    const size_t y = static_cast<size_t>(labels[t]);
    for (const auto& [f, x] : feats[t].entries()) {
      if (static_cast<size_t>(f) >= v.numFeatures) throw Error(ErrorCode::InvalidModel, "feature id out of range");
      s += v.w[static_cast<size_t>(f) * v.numLabels + y] * x;
    }
    if (t > 0) s += v.trans(static_cast<size_t>(labels[t - 1]), y);
  }
  return s;
}

inline Marginals forward_backward(const CrfView& v, const FeatureSequence& feats) {
  if (feats.empty()) throw Error(ErrorCode::LengthMismatch, "empty sequence");
  const size_t T = feats.size();
  const size_t L = v.numLabels;
  const auto emit = emission_scores(v, feats);

  std::vector<double> alpha(T * L), beta(T * L, 0.0), buf(L);
  for (size_t y = 0; y < L; ++y) alpha[y] = emit[y];
  for (size_t t = 1; t < T; ++t) {
    for (size_t b = 0; b < L; ++b) {
      for (size_t a = 0; a < L; ++a) buf[a] = alpha[(t - 1) * L + a] + v.trans(a, b);
      alpha[t * L + b] = emit[t * L + b] + log_sum_exp(buf);
    }
  }
  for (size_t t = T - 1; t-- > 0;) {
    for (size_t a = 0; a < L; ++a) {
      for (size_t b = 0; b < L; ++b) buf[b] = v.trans(a, b) + emit[(t + 1) * L + b] + beta[(t + 1) * L + b];
      beta[t * L + a] = log_sum_exp(buf);
    }
  }

  Marginals m;
  m.logZ = log_sum_exp(std::span<const double>(alpha.data() + (T - 1) * L, L));
  auto prob = [&](double logp) { return std::clamp(std::exp(logp - m.logZ), 0.0, 1.0); };
  m.node.assign(T, std::vector<double>(L));
  for (size_t t = 0; t < T; ++t) {
    for (size_t y = 0; y < L; ++y) m.node[t][y] = prob(alpha[t * L + y] + beta[t * L + y]);
  }
  m.edge.assign(T, {});
  for (size_t t = 1; t < T; ++t) {
    m.edge[t].resize(L * L);
    for (size_t a = 0; a < L; ++a) {
      for (size_t b = 0; b < L; ++b) {
        m.edge[t][a * L + b] =
            prob(alpha[(t - 1) * L + a] + v.trans(a, b) + emit[t * L + b] + beta[t * L + b]);
      }
    }
  }
  return m;
}

inline std::vector<int> viterbi(const CrfView& v, const FeatureSequence& feats) {
  if (feats.empty()) throw Error(ErrorCode::LengthMismatch, "empty sequence");
  const size_t T = feats.size();
  const size_t L = v.numLabels;
  const auto emit = emission_scores(v, feats);
  std::vector<double> delta(T * L);
  std::vector<int> back(T * L, 0);
  for (size_t y = 0; y < L; ++y) delta[y] = emit[y];
  for (size_t t = 1; t < T; ++t) {
    for (size_t b = 0; b < L; ++b) {
      // Strict comparison keeps the lowest predecessor id on ties.
      size_t best = 0;
      double bestScore = delta[(t - 1) * L] + v.trans(0, b);
      for (size_t a = 1; a < L; ++a) {
        const double s = delta[(t - 1) * L + a] + v.trans(a, b);
        if (s > bestScore) {
          bestScore = s;
          best = a;
        }
      }
      delta[t * L + b] = bestScore + emit[t * L + b];
      back[t * L + b] = static_cast<int>(best);
    }
  }
  std::vector<int> path(T);
  size_t last = 0;
  for (size_t y = 1; y < L; ++y) {
    if (delta[(T - 1) * L + y] > delta[(T - 1) * L + last]) last = y;
  }
  path[T - 1] = static_cast<int>(last);
  for (size_t t = T - 1; t > 0; --t) path[t - 1] = back[t * L + static_cast<size_t>(path[t])];
  return path;
}

}  // namespace detail

inline detail::CrfView view_of(const CrfModel& model) {
  return {model.weights, model.num_features(), model.num_labels()};
}

// Unnormalized log-potential: emissions at every position plus transitions
// between adjacent labels. There are no start or stop transitions.
inline double score_sequence(const CrfModel& model, const FeatureSequence& feats, const std::vector<int>& labels) {
  return detail::score_sequence(view_of(model), feats, labels);
}

inline Marginals forward_backward(const CrfModel& model, const FeatureSequence& feats) {
  return detail::forward_backward(view_of(model), feats);
}

inline std::vector<int> viterbi(const CrfModel& model, const FeatureSequence& feats) {
  return detail::viterbi(view_of(model), feats);
}

// Regularized negative log-likelihood over a dataset, usable directly as an
// L-BFGS objective on the flat weight vector.
class CrfObjective {
 public:
  CrfObjective(const Dataset& data, size_t numFeatures, size_t numLabels, double l2Lambda)
      : data_(data), numFeatures_(numFeatures), numLabels_(numLabels), l2Lambda_(l2Lambda) {
    if (data.empty()) throw Error(ErrorCode::LengthMismatch, "empty training corpus");
    for (const auto& inst : data) detail::check_lengths(inst.feats, inst.labels, numLabels);
  }

  size_t dimension() const { return (numFeatures_ + numLabels_) * numLabels_; }

  // Per-sentence terms are accumulated in corpus order, so the result does
  // not depend on anything but the inputs.
  double operator()(std::span<const double> w, std::span<double> grad) const {
    const size_t L = numLabels_;
    const detail::CrfView v{w, numFeatures_, L};
    std::fill(grad.begin(), grad.end(), 0.0);
    double nll = 0.0;
    for (const auto& inst : data_) {
      const auto m = detail::forward_backward(v, inst.feats);
      nll += m.logZ - detail::score_sequence(v, inst.feats, inst.labels);
      for (size_t t = 0; t < inst.feats.size(); ++t) {
        const size_t gold = static_cast<size_t>(inst.labels[t]);
        for (const auto& [f, x] : inst.feats[t].entries()) {
          double* g = grad.data() + static_cast<size_t>(f) * L;
          for (size_t y = 0; y < L; ++y) g[y] += m.node[t][y] * x;
          g[gold] -= x;
        }
        if (t > 0) {
          double* g = grad.data() + numFeatures_ * L;
          for (size_t ab = 0; ab < L * L; ++ab) g[ab] += m.edge[t][ab];
          g[static_cast<size_t>(inst.labels[t - 1]) * L + gold] -= 1.0;
        }
      }
    }
    if (l2Lambda_ > 0.0) {
      double sq = 0.0;
      for (size_t i = 0; i < w.size(); ++i) {
        sq += w[i] * w[i];
        grad[i] += l2Lambda_ * w[i];
      }
      nll += 0.5 * l2Lambda_ * sq;
    }
    return nll;
  }

 private:
  const Dataset& data_;
  size_t numFeatures_;
  size_t numLabels_;
  double l2Lambda_;
};

struct NllResult {
  double value = 0.0;
  std::vector<double> gradient;  // same layout as CrfModel::weights
};

inline NllResult nll_and_gradient(const CrfModel& model, const Dataset& corpus) {
  CrfObjective objective(corpus, model.num_features(), model.num_labels(), model.l2Lambda);
  NllResult r;
  r.gradient.assign(objective.dimension(), 0.0);
  r.value = objective(model.weights, r.gradient);
  return r;
}

struct TrainReport {
  int iterations = 0;
  bool converged = false;
  double objective = 0.0;
  double gradInfNorm = 0.0;
};

// Fits the CRF by L-BFGS from `initial` (zero vector when absent).
inline CrfModel train(const Dataset& corpus, std::vector<std::string> labels, Alphabet features,
                      const TrainConfig& config, std::optional<std::vector<double>> initial = std::nullopt,
                      TrainReport* report = nullptr) {
  config.validate();
  CrfModel model = CrfModel::zeros(std::move(labels), std::move(features), config.l2Lambda);
  CrfObjective objective(corpus, model.num_features(), model.num_labels(), config.l2Lambda);
  std::vector<double> x0 = initial.value_or(std::vector<double>(model.num_parameters(), 0.0));
  if (x0.size() != model.num_parameters()) throw Error(ErrorCode::LengthMismatch, "initial weight vector size");

  LbfgsOptions opt;
  opt.memory = config.lbfgsMemory;
  opt.maxIterations = config.maxIterations;
  opt.gradTolerance = config.gradTolerance;
  auto result = lbfgs_minimize(objective, std::move(x0), opt);
  model.weights = std::move(result.x);
  if (report) *report = {result.iterations, result.converged, result.value, result.gradInfNorm};
  return model;
}

// ---------------------------------------------------------------------------
// Model file

inline Json crf_to_json(const CrfModel& model) {
  Json j;
  j["formatVersion"] = 1;
  j["labels"] = model.labels;
  Json feats = Json::object();
  for (size_t f = 0; f < model.num_features(); ++f) feats[model.features.name(static_cast<int>(f))] = f;
  j["features"] = std::move(feats);
  Json emissions = Json::array();
  for (size_t f = 0; f < model.num_features(); ++f) {
    for (size_t y = 0; y < model.num_labels(); ++y) {
      const double w = model.emission(f, y);
      if (w != 0.0) emissions.push_back(Json::array({f, y, w}));
    }
  }
  j["emissions"] = std::move(emissions);
  Json transitions = Json::array();
  for (size_t a = 0; a < model.num_labels(); ++a) {
    for (size_t b = 0; b < model.num_labels(); ++b) transitions.push_back(Json::array({a, b, model.transition(a, b)}));
  }
  j["transitions"] = std::move(transitions);
  j["l2Lambda"] = model.l2Lambda;
  return j;
}

inline CrfModel crf_from_json(const Json& j) {
  try {
    if (j.at("formatVersion").get<int>() != 1) throw Error(ErrorCode::InvalidModel, "unsupported formatVersion");
    auto labels = j.at("labels").get<std::vector<std::string>>();
    const auto& featObj = j.at("features");
    std::vector<std::string> names(featObj.size());
    std::vector<bool> seen(featObj.size(), false);
    for (auto it = featObj.begin(); it != featObj.end(); ++it) {
      const size_t id = it.value().get<size_t>();
      if (id >= names.size() || seen[id]) throw Error(ErrorCode::InvalidModel, "feature ids not dense");
      seen[id] = true;
      names[id] = it.key();
    }
    Alphabet features;
    for (const auto& n : names) features.add(n);
    CrfModel model = CrfModel::zeros(std::move(labels), std::move(features), j.at("l2Lambda").get<double>());
    const size_t L = model.num_labels();
    for (const auto& e : j.at("emissions")) {
      const size_t f = e.at(0).get<size_t>(), y = e.at(1).get<size_t>();
      if (f >= model.num_features() || y >= L) throw Error(ErrorCode::InvalidModel, "emission index out of range");
      model.emission(f, y) = e.at(2).get<double>();
    }
    for (const auto& e : j.at("transitions")) {
      const size_t a = e.at(0).get<size_t>(), b = e.at(1).get<size_t>();
      if (a >= L || b >= L) throw Error(ErrorCode::InvalidModel, "transition index out of range");
      model.transition(a, b) = e.at(2).get<double>();
    }
    for (double w : model.weights) {
      if (!std::isfinite(w)) throw Error(ErrorCode::InvalidModel, "non-finite weight");
    }
    return model;
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::InvalidModel, e.what());
  }
}

}  // namespace mmner
