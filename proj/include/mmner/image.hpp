#pragma once

#include <cctype>
#include <cmath>
#include <string>
#include <string_view>
#include <vector>

#include "mmner/error.hpp"

namespace mmner {

// Row-major luminance in [0, 1].
struct GrayImage {
  int width = 0;
  int height = 0;
  std::vector<double> data;

  GrayImage() = default;
  GrayImage(int w, int h, double fill = 0.0) : width(w), height(h), data(static_cast<size_t>(w) * h, fill) {}

  double& at(int x, int y) { return data[static_cast<size_t>(y) * width + x]; }
  double at(int x, int y) const { return data[static_cast<size_t>(y) * width + x]; }

  // Clamp-to-edge access.
  double clamped(int x, int y) const {
    x = x < 0 ? 0 : (x >= width ? width - 1 : x);
    y = y < 0 ? 0 : (y >= height ? height - 1 : y);
    return at(x, y);
  }
  bool operator==(const GrayImage&) const = default;
};

namespace detail {

inline size_t skip_pgm_space(std::string_view bytes, size_t pos) {
  while (pos < bytes.size()) {
    if (std::isspace(static_cast<unsigned char>(bytes[pos]))) {
      ++pos;
    } else if (bytes[pos] == '#') {
      while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
    } else {
      break;
    }
  }
  return pos;
}

inline int read_pgm_int(std::string_view bytes, size_t& pos) {
  pos = skip_pgm_space(bytes, pos);
  size_t start = pos;
  long value = 0;
  while (pos < bytes.size() && std::isdigit(static_cast<unsigned char>(bytes[pos]))) {
    value = value * 10 + (bytes[pos] - '0');
    if (value > 1'000'000) throw Error(ErrorCode::InvalidImage, "PGM header value too large");
    ++pos;
  }
  if (pos == start) throw Error(ErrorCode::InvalidImage, "PGM header truncated");
  return static_cast<int>(value);
}

}  // namespace detail

// Binary PGM (P5) with maxval 255 only.
inline GrayImage decode_pgm(std::string_view bytes) {
  if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != '5') throw Error(ErrorCode::InvalidImage, "not a binary PGM (P5)");
  size_t pos = 2;
  const int width = detail::read_pgm_int(bytes, pos);
  const int height = detail::read_pgm_int(bytes, pos);
  const int maxval = detail::read_pgm_int(bytes, pos);
  if (maxval != 255) throw Error(ErrorCode::InvalidImage, "PGM maxval must be 255, got " + std::to_string(maxval));
  if (width <= 0 || height <= 0) throw Error(ErrorCode::InvalidImage, "PGM has empty dimensions");
  if (pos >= bytes.size() || !std::isspace(static_cast<unsigned char>(bytes[pos]))) {
    throw Error(ErrorCode::InvalidImage, "PGM header not terminated");
  }
  ++pos;
  const size_t n = static_cast<size_t>(width) * static_cast<size_t>(height);
  if (bytes.size() - pos < n) throw Error(ErrorCode::InvalidImage, "PGM pixel data truncated");
  GrayImage img(width, height);
  for (size_t i = 0; i < n; ++i) img.data[i] = static_cast<unsigned char>(bytes[pos + i]) / 255.0;
  return img;
}

inline std::string encode_pgm(const GrayImage& img) {
  std::string out = "P5\n" + std::to_string(img.width) + " " + std::to_string(img.height) + "\n255\n";
  for (double v : img.data) {
    const double c = v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v);
    out.push_back(static_cast<char>(static_cast<unsigned char>(std::lround(c * 255.0))));
  }
  return out;
}

}  // namespace mmner
