#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <numbers>
#include <vector>

#include "mmner/error.hpp"
#include "mmner/image.hpp"

namespace mmner {

inline constexpr size_t kDescriptorSize = 128;  // 4 x 4 cells x 8 orientations
using DescriptorVector = std::array<double, kDescriptorSize>;

struct Descriptor {
  double x = 0.0;  // input-image pixels
  double y = 0.0;
  double scale = 0.0;  // absolute Gaussian sigma of the detection layer
  int octave = 0;
  DescriptorVector vector{};
};

struct SiftOptions {
  int octaves = 3;
  int scalesPerOctave = 3;
  double sigma0 = 1.6;
  double assumedBlur = 0.5;
  double contrastThreshold = 0.03;
  double clampValue = 0.2;
  int minSize = 16;
  // Start the first octave from a 2x bilinear upsampling so that structures a
  // few pixels wide still peak inside an octave's interior layers.
  bool doubleImage = true;
};

namespace detail {

inline GrayImage gaussian_blur(const GrayImage& src, double sigma) {
  if (sigma <= 0.0) return src;
  const int radius = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> kernel(static_cast<size_t>(2 * radius + 1));
  double sum = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    kernel[static_cast<size_t>(i + radius)] = std::exp(-(i * i) / (2.0 * sigma * sigma));
    sum += kernel[static_cast<size_t>(i + radius)];
  }
  for (double& k : kernel) k /= sum;

  GrayImage tmp(src.width, src.height), out(src.width, src.height);
  for (int y = 0; y < src.height; ++y) {
    for (int x = 0; x < src.width; ++x) {
      double acc = 0.0;
      for (int i = -radius; i <= radius; ++i) acc += kernel[static_cast<size_t>(i + radius)] * src.clamped(x + i, y);
      tmp.at(x, y) = acc;
    }
  }
  for (int y = 0; y < src.height; ++y) {
    for (int x = 0; x < src.width; ++x) {
      double acc = 0.0;
      for (int i = -radius; i <= radius; ++i) acc += kernel[static_cast<size_t>(i + radius)] * tmp.clamped(x, y + i);
      out.at(x, y) = acc;
    }
  }
  return out;
}

inline GrayImage upsample(const GrayImage& src) {
  GrayImage out(src.width * 2, src.height * 2);
  for (int y = 0; y < out.height; ++y) {
    for (int x = 0; x < out.width; ++x) {
      const int x0 = x / 2, y0 = y / 2;
      const int x1 = x0 + (x & 1), y1 = y0 + (y & 1);
      out.at(x, y) = 0.25 * (src.clamped(x0, y0) + src.clamped(x1, y0) + src.clamped(x0, y1) + src.clamped(x1, y1));
    }
  }
  return out;
}

inline GrayImage downsample(const GrayImage& src) {
  GrayImage out(src.width / 2, src.height / 2);
  for (int y = 0; y < out.height; ++y) {
    for (int x = 0; x < out.width; ++x) out.at(x, y) = src.at(2 * x, 2 * y);
  }
  return out;
}

inline GrayImage subtract(const GrayImage& a, const GrayImage& b) {
  GrayImage out(a.width, a.height);
  for (size_t i = 0; i < a.data.size(); ++i) out.data[i] = a.data[i] - b.data[i];
  return out;
}

// Rescales `v` to unit L2 norm with no component above `cap`: the fixed point
// of repeated clamp-and-renormalize. Returns false when fewer than 1/cap^2
// components are non-zero, in which case no such vector exists.
inline bool normalize_clamped(DescriptorVector& v, double cap) {
  double norm = 0.0;
  size_t nonzero = 0;
  for (double x : v) {
    norm += x * x;
    nonzero += x > 0.0;
  }
  if (norm <= 0.0 || static_cast<double>(nonzero) * cap * cap < 1.0) return false;
  norm = std::sqrt(norm);
  for (double& x : v) x /= norm;

  DescriptorVector sorted = v;
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  double tail = 1.0;  // squared norm of the unclamped components
  double scale = 1.0;
  for (size_t m = 0; m < sorted.size(); ++m) {
    const double room = 1.0 - cap * cap * static_cast<double>(m);
    if (room <= 0.0 || tail <= 0.0) {
      scale = 0.0;
      break;
    }
    scale = std::sqrt(room / tail);
    if (sorted[m] * scale <= cap) break;
    tail -= sorted[m] * sorted[m];
  }
  for (double& x : v) x = std::min(x * scale, cap);
  // One polishing pass absorbs the rounding left by the closed form.
  norm = 0.0;
  for (double x : v) norm += x * x;
  norm = std::sqrt(norm);
  for (double& x : v) x = std::min(x / norm, cap);
  return true;
}

// 4x4x8 gradient-orientation histogram over the 16x16 pixels around (px, py),
// Gaussian-weighted and trilinearly binned. Orientation is not normalized.
inline DescriptorVector describe(const GrayImage& img, int px, int py) {
  DescriptorVector hist{};
  constexpr double kTwoPi = 2.0 * std::numbers::pi;
  constexpr double kWindowSigma = 8.0;
  for (int dy = -8; dy < 8; ++dy) {
    for (int dx = -8; dx < 8; ++dx) {
      const int x = px + dx, y = py + dy;
      if (x < 0 || y < 0 || x >= img.width || y >= img.height) continue;
      const double gx = img.clamped(x + 1, y) - img.clamped(x - 1, y);
      const double gy = img.clamped(x, y + 1) - img.clamped(x, y - 1);
      const double mag = std::sqrt(gx * gx + gy * gy);
      if (mag == 0.0) continue;
      double theta = std::atan2(gy, gx);
      if (theta < 0.0) theta += kTwoPi;

      const double rx = dx + 0.5, ry = dy + 0.5;
      const double weight = mag * std::exp(-(rx * rx + ry * ry) / (2.0 * kWindowSigma * kWindowSigma));
      // Continuous bin coordinates; cell centers sit at integers 0..3.
      const double bx = rx / 4.0 + 1.5, by = ry / 4.0 + 1.5;
      const double bo = theta / kTwoPi * 8.0;
      const int x0 = static_cast<int>(std::floor(bx)), y0 = static_cast<int>(std::floor(by));
      const int o0 = static_cast<int>(std::floor(bo));
      const double fx = bx - x0, fy = by - y0, fo = bo - o0;
      for (int iy = 0; iy < 2; ++iy) {
        const int cy = y0 + iy;
        if (cy < 0 || cy > 3) continue;
        const double wy = iy ? fy : 1.0 - fy;
        for (int ix = 0; ix < 2; ++ix) {
          const int cx = x0 + ix;
          if (cx < 0 || cx > 3) continue;
          const double wx = ix ? fx : 1.0 - fx;
          for (int io = 0; io < 2; ++io) {
            const int co = (o0 + io) % 8;
            const double wo = io ? fo : 1.0 - fo;
            hist[static_cast<size_t>((cy * 4 + cx) * 8 + co)] += weight * wx * wy * wo;
          }
        }
      }
    }
  }
  return hist;
}

inline bool is_extremum(const std::vector<GrayImage>& dog, size_t layer, int x, int y) {
  const double v = dog[layer].at(x, y);
  bool isMax = true, isMin = true;
  for (size_t l = layer - 1; l <= layer + 1; ++l) {
    for (int dy = -1; dy <= 1; ++dy) {
      for (int dx = -1; dx <= 1; ++dx) {
        if (l == layer && dx == 0 && dy == 0) continue;
        const double n = dog[l].at(x + dx, y + dy);
        isMax &= v > n;
        isMin &= v < n;
        if (!isMax && !isMin) return false;
      }
    }
  }
  return true;
}

}  // namespace detail

// Difference-of-Gaussians keypoints with upright 128-d gradient descriptors.
// No sub-pixel refinement, no edge-response rejection, no orientation
// assignment.
inline std::vector<Descriptor> extract_descriptors(const GrayImage& image, const SiftOptions& options = {}) {
  if (image.width < options.minSize || image.height < options.minSize) {
    throw Error(ErrorCode::ImageTooSmall, std::to_string(image.width) + "x" + std::to_string(image.height));
  }
  const int s = options.scalesPerOctave;
  const double k = std::pow(2.0, 1.0 / s);
  std::vector<double> sigmas(static_cast<size_t>(s + 3));
  for (int i = 0; i < s + 3; ++i) sigmas[static_cast<size_t>(i)] = options.sigma0 * std::pow(k, i);

  std::vector<Descriptor> out;
  const double inputScale = options.doubleImage ? 2.0 : 1.0;
  const double blur = options.assumedBlur * inputScale;
  GrayImage base = detail::gaussian_blur(options.doubleImage ? detail::upsample(image) : image,
                                         std::sqrt(std::max(0.0, options.sigma0 * options.sigma0 - blur * blur)));
  for (int octave = 0; octave < options.octaves; ++octave) {
    if (base.width < options.minSize || base.height < options.minSize) break;
    std::vector<GrayImage> gauss{base};
    for (int i = 1; i < s + 3; ++i) {
      const double prev = sigmas[static_cast<size_t>(i - 1)], cur = sigmas[static_cast<size_t>(i)];
      gauss.push_back(detail::gaussian_blur(gauss.back(), std::sqrt(cur * cur - prev * prev)));
    }
    std::vector<GrayImage> dog;
    for (size_t i = 0; i + 1 < gauss.size(); ++i) dog.push_back(detail::subtract(gauss[i + 1], gauss[i]));

    const double factor = std::pow(2.0, octave) / inputScale;
    for (size_t layer = 1; layer + 1 < dog.size(); ++layer) {
      const GrayImage& d = dog[layer];
      for (int y = 1; y + 1 < d.height; ++y) {
        for (int x = 1; x + 1 < d.width; ++x) {
          if (std::abs(d.at(x, y)) < options.contrastThreshold) continue;
          if (!detail::is_extremum(dog, layer, x, y)) continue;
          Descriptor desc;
          desc.vector = detail::describe(gauss[layer], x, y);
          if (!detail::normalize_clamped(desc.vector, options.clampValue)) continue;
          desc.x = x * factor;
          desc.y = y * factor;
          desc.scale = sigmas[layer] * factor;
          desc.octave = octave;
          out.push_back(desc);
        }
      }
    }
    base = detail::downsample(gauss[static_cast<size_t>(s)]);
  }
  return out;
}

}  // namespace mmner
