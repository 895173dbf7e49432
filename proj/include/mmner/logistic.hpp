#pragma once

#include <cmath>
#include <utility>
#include <vector>

#include "mmner/error.hpp"

namespace mmner {

using SparseRow = std::vector<std::pair<int, double>>;

inline double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

struct BinaryLogistic {
  std::vector<double> weights;
  double bias = 0.0;

  double logit(const SparseRow& x) const {
    double z = bias;
    for (const auto& [i, v] : x) z += weights[static_cast<size_t>(i)] * v;
    return z;
  }
  double probability(const SparseRow& x) const { return sigmoid(logit(x)); }
  bool operator==(const BinaryLogistic&) const = default;
};

struct LogisticOptions {
  double l2 = 1e-4;
  double learningRate = 1.0;
  int iterations = 500;
};

struct LogisticFit {
  BinaryLogistic model;
  std::vector<double> lossHistory;  // accepted loss after each iteration
};

namespace detail {

// log(1 + exp(z)) without overflow.
inline double softplus(double z) { return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

inline double logistic_loss(const BinaryLogistic& m, const std::vector<SparseRow>& rows, const std::vector<int>& y,
                            double l2) {
  double loss = 0.0;
  for (size_t i = 0; i < rows.size(); ++i) {
    const double z = m.logit(rows[i]);
    loss += y[i] ? softplus(-z) : softplus(z);
  }
  loss /= static_cast<double>(rows.size());
  double sq = 0.0;
  for (double w : m.weights) sq += w * w;
  return loss + 0.5 * l2 * sq;
}

}  // namespace detail

// Full-batch gradient descent on the mean log-loss with an L2 penalty on the
// weights (bias unpenalized). Starts from zero. A step that raises the loss is
// rejected and the learning rate halved, so the loss history never increases.
inline LogisticFit train_binary_logistic(const std::vector<SparseRow>& rows, const std::vector<int>& labels,
                                         size_t dimension, const LogisticOptions& options = {}) {
  if (rows.empty() || rows.size() != labels.size()) throw Error(ErrorCode::LengthMismatch, "logistic training data");
  LogisticFit fit;
  fit.model.weights.assign(dimension, 0.0);
  const double n = static_cast<double>(rows.size());
  double lr = options.learningRate;
  double loss = detail::logistic_loss(fit.model, rows, labels, options.l2);
  std::vector<double> grad(dimension);
  BinaryLogistic trial;

  for (int it = 0; it < options.iterations; ++it) {
    std::fill(grad.begin(), grad.end(), 0.0);
    double gradBias = 0.0;
    for (size_t i = 0; i < rows.size(); ++i) {
      const double r = fit.model.probability(rows[i]) - labels[i];
      for (const auto& [j, v] : rows[i]) grad[static_cast<size_t>(j)] += r * v;
      gradBias += r;
    }
    for (size_t j = 0; j < dimension; ++j) grad[j] = grad[j] / n + options.l2 * fit.model.weights[j];
    gradBias /= n;

    trial = fit.model;
    for (size_t j = 0; j < dimension; ++j) trial.weights[j] -= lr * grad[j];
    trial.bias -= lr * gradBias;
    const double trialLoss = detail::logistic_loss(trial, rows, labels, options.l2);
    if (trialLoss <= loss) {
      fit.model = std::move(trial);
      loss = trialLoss;
    } else {
      lr *= 0.5;
    }
    fit.lossHistory.push_back(loss);
  }
  return fit;
}

}  // namespace mmner
