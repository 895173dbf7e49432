#pragma once

#include <cmath>
#include <limits>
#include <vector>

#include "mmner/error.hpp"
#include "mmner/json_io.hpp"
#include "mmner/rng.hpp"
#include "mmner/sift.hpp"

namespace mmner {

struct VisualCodebook {
  std::vector<DescriptorVector> centroids;

  size_t k() const { return centroids.size(); }
  bool operator==(const VisualCodebook&) const = default;
};

struct KMeansOptions {
  int maxIterations = 100;
  double shiftTolerance = 1e-6;
};

struct KMeansResult {
  VisualCodebook codebook;
  std::vector<double> inertiaHistory;  // after each assignment step
  int iterations = 0;
};

namespace detail {

inline double squared_distance(const DescriptorVector& a, const DescriptorVector& b) {
  double s = 0.0;
  for (size_t i = 0; i < kDescriptorSize; ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

}  // namespace detail

// Index of the nearest centroid; ties go to the lowest index.
inline size_t nearest_centroid(const DescriptorVector& v, const VisualCodebook& codebook) {
  size_t best = 0;
  double bestDist = std::numeric_limits<double>::infinity();
  for (size_t c = 0; c < codebook.k(); ++c) {
    const double d = detail::squared_distance(v, codebook.centroids[c]);
    if (d < bestDist) {
      bestDist = d;
      best = c;
    }
  }
  return best;
}

// k-means++ seeding followed by Lloyd iterations. An emptied cluster takes
// over the point farthest from its current centroid.
inline KMeansResult kmeans(const std::vector<DescriptorVector>& points, size_t k, uint64_t seed,
                           const KMeansOptions& options = {}) {
  if (k < 2) throw Error(ErrorCode::InvariantViolation, "codebook size must be >= 2");
  if (points.size() < k) {
    throw Error(ErrorCode::TooFewDescriptors, std::to_string(points.size()) + " descriptors for k=" + std::to_string(k));
  }
  const size_t n = points.size();
  Rng rng(seed);
  KMeansResult result;
  auto& centroids = result.codebook.centroids;

  centroids.push_back(points[rng.below(n)]);
  std::vector<double> minDist(n);
  for (size_t i = 0; i < n; ++i) minDist[i] = detail::squared_distance(points[i], centroids[0]);
  while (centroids.size() < k) {
    double total = 0.0;
    for (double d : minDist) total += d;
    size_t pick = 0;
    if (total > 0.0) {
      const double r = rng.uniform() * total;
      double acc = 0.0;
      pick = n - 1;
      for (size_t i = 0; i < n; ++i) {
        acc += minDist[i];
        if (acc > r && minDist[i] > 0.0) {
          pick = i;
          break;
        }
      }
    } else {
      pick = rng.below(n);
    }
    centroids.push_back(points[pick]);
    for (size_t i = 0; i < n; ++i) minDist[i] = std::min(minDist[i], detail::squared_distance(points[i], centroids.back()));
  }

  std::vector<size_t> assign(n);
  for (int iter = 0; iter < options.maxIterations; ++iter) {
    double inertia = 0.0;
    for (size_t i = 0; i < n; ++i) {
      assign[i] = nearest_centroid(points[i], result.codebook);
      inertia += detail::squared_distance(points[i], centroids[assign[i]]);
    }
    result.inertiaHistory.push_back(inertia);
    result.iterations = iter + 1;

    auto recompute = [&](std::vector<DescriptorVector>& next, std::vector<size_t>& counts) {
      next.assign(k, DescriptorVector{});
      counts.assign(k, 0);
      for (size_t i = 0; i < n; ++i) {
        ++counts[assign[i]];
        for (size_t d = 0; d < kDescriptorSize; ++d) next[assign[i]][d] += points[i][d];
      }
      for (size_t c = 0; c < k; ++c) {
        if (counts[c] == 0) continue;
        for (double& x : next[c]) x /= static_cast<double>(counts[c]);
      }
    };
    std::vector<DescriptorVector> next;
    std::vector<size_t> counts;
    recompute(next, counts);
    for (size_t c = 0; c < k; ++c) {
      if (counts[c] != 0) continue;
      size_t far = n;
      double farDist = -1.0;
      for (size_t i = 0; i < n; ++i) {
        if (counts[assign[i]] < 2) continue;
        const double d = detail::squared_distance(points[i], next[assign[i]]);
        if (d > farDist) {
          farDist = d;
          far = i;
        }
      }
      if (far == n) {
        next[c] = centroids[c];
        continue;
      }
      assign[far] = c;
      recompute(next, counts);
    }

    double shift = 0.0;
    for (size_t c = 0; c < k; ++c) shift = std::max(shift, std::sqrt(detail::squared_distance(centroids[c], next[c])));
    centroids.swap(next);
    if (shift < options.shiftTolerance) break;
  }
  return result;
}

inline VisualCodebook build_codebook(const std::vector<Descriptor>& descriptors, size_t k, uint64_t seed) {
  std::vector<DescriptorVector> points;
  points.reserve(descriptors.size());
  for (const auto& d : descriptors) points.push_back(d.vector);
  return kmeans(points, k, seed).codebook;
}

// Hard-assignment counts, L1-normalized; no descriptors gives the zero vector.
inline std::vector<double> bovw_histogram(const std::vector<Descriptor>& descriptors, const VisualCodebook& codebook) {
  std::vector<double> hist(codebook.k(), 0.0);
  if (descriptors.empty()) return hist;
  for (const auto& d : descriptors) hist[nearest_centroid(d.vector, codebook)] += 1.0;
  for (double& h : hist) h /= static_cast<double>(descriptors.size());
  return hist;
}

inline Json codebook_to_json(const VisualCodebook& codebook) {
  Json rows = Json::array();
  for (const auto& c : codebook.centroids) rows.push_back(std::vector<double>(c.begin(), c.end()));
  return {{"k", codebook.k()}, {"centroids", rows}};
}

inline VisualCodebook codebook_from_json(const Json& j) {
  VisualCodebook codebook;
  const size_t k = j.at("k").get<size_t>();
  for (const auto& row : j.at("centroids")) {
    auto values = row.get<std::vector<double>>();
    if (values.size() != kDescriptorSize) throw Error(ErrorCode::InvalidModel, "centroid dimension");
    DescriptorVector v{};
    std::copy(values.begin(), values.end(), v.begin());
    codebook.centroids.push_back(v);
  }
  if (codebook.k() != k || k < 2) throw Error(ErrorCode::InvalidModel, "codebook size");
  return codebook;
}

}  // namespace mmner
