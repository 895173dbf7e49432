#pragma once

#include <algorithm>
#include <cmath>
#include <deque>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "mmner/error.hpp"

namespace mmner {

struct LbfgsOptions {
  int memory = 10;
  int maxIterations = 200;
  double gradTolerance = 1e-4;  // on the infinity norm
  double armijo = 1e-4;
  double backtrackFactor = 0.5;
  int maxBacktracks = 30;
  double initialStep = 1.0;
};

struct LbfgsResult {
  std::vector<double> x;
  double value = 0.0;
  double gradInfNorm = 0.0;
  int iterations = 0;
  bool converged = false;
};

namespace detail {

inline double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double inf_norm(std::span<const double> v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

}  // namespace detail

// Minimizes a smooth function with limited-memory BFGS: two-loop recursion
// for the direction and backtracking Armijo search for the step.
//
// `objective(x, grad)` returns f(x) and writes the gradient into `grad`.
// Stops when the gradient infinity norm drops below the tolerance or the
// iteration budget is spent. Throws NonFiniteObjective when the search
// cannot find a finite point.
template <typename Objective>
LbfgsResult lbfgs_minimize(Objective&& objective, std::vector<double> x0, const LbfgsOptions& options = {}) {
  const size_t n = x0.size();
  LbfgsResult result;
  result.x = std::move(x0);
  std::vector<double> grad(n, 0.0);
  double f = objective(std::span<const double>(result.x), std::span<double>(grad));
  if (!std::isfinite(f)) throw Error(ErrorCode::NonFiniteObjective, "iteration 0: initial objective is not finite");

  std::deque<std::vector<double>> sHist, yHist;
  std::deque<double> rhoHist;
  std::vector<double> direction(n), trialX(n), trialGrad(n), alpha(static_cast<size_t>(options.memory));

  for (int iter = 0;; ++iter) {
    result.gradInfNorm = detail::inf_norm(grad);
    result.iterations = iter;
    result.value = f;
    if (result.gradInfNorm < options.gradTolerance) {
      result.converged = true;
      return result;
    }
    if (iter >= options.maxIterations) return result;

    // Two-loop recursion: direction = -H * grad.
    direction = grad;
    const size_t m = sHist.size();
    for (size_t k = m; k-- > 0;) {
      alpha[k] = rhoHist[k] * detail::dot(sHist[k], direction);
      for (size_t i = 0; i < n; ++i) direction[i] -= alpha[k] * yHist[k][i];
    }
    if (m > 0) {
      const double gamma = detail::dot(sHist.back(), yHist.back()) / detail::dot(yHist.back(), yHist.back());
      for (double& d : direction) d *= gamma;
    }
    for (size_t k = 0; k < m; ++k) {
      const double beta = rhoHist[k] * detail::dot(yHist[k], direction);
      for (size_t i = 0; i < n; ++i) direction[i] += sHist[k][i] * (alpha[k] - beta);
    }
    for (double& d : direction) d = -d;

    double slope = detail::dot(grad, direction);
    if (!(slope < 0.0)) {
      // Curvature history went bad; restart from steepest descent.
      sHist.clear();
      yHist.clear();
      rhoHist.clear();
      for (size_t i = 0; i < n; ++i) direction[i] = -grad[i];
      slope = detail::dot(grad, direction);
    }

    double step = options.initialStep;
    double trialF = 0.0;
    bool accepted = false;
    bool lastFinite = true;
    for (int b = 0; b <= options.maxBacktracks; ++b) {
      for (size_t i = 0; i < n; ++i) trialX[i] = result.x[i] + step * direction[i];
      trialF = objective(std::span<const double>(trialX), std::span<double>(trialGrad));
      lastFinite = std::isfinite(trialF);
      if (lastFinite && trialF <= f + options.armijo * step * slope) {
        accepted = true;
        break;
      }
      step *= options.backtrackFactor;
    }
    if (!accepted) {
      if (!lastFinite) {
        throw Error(ErrorCode::NonFiniteObjective,
                    "iteration " + std::to_string(iter) + ": line search diverged after " +
                        std::to_string(options.maxBacktracks) + " backtracks");
      }
      // No representable decrease left along the direction: the iterate is
      // as good as floating point allows.
      return result;
    }

    std::vector<double> s(n), y(n);
    for (size_t i = 0; i < n; ++i) {
      s[i] = trialX[i] - result.x[i];
      y[i] = trialGrad[i] - grad[i];
    }
    const double sy = detail::dot(s, y);
    if (sy > 1e-12 * detail::dot(y, y) && sy > 0.0) {
      if (static_cast<int>(sHist.size()) == options.memory) {
        sHist.pop_front();
        yHist.pop_front();
        rhoHist.pop_front();
      }
      sHist.push_back(std::move(s));
      yHist.push_back(std::move(y));
      rhoHist.push_back(1.0 / sy);
    } else {
      // Backtracking alone does not enforce positive curvature; a stale
      // history would keep producing the same poor direction.
      sHist.clear();
      yHist.clear();
      rhoHist.clear();
    }
    result.x.swap(trialX);
    grad.swap(trialGrad);
    f = trialF;
  }
}

}  // namespace mmner
