#pragma once

#include <string>
#include <utility>
#include <vector>

#include "mmner/corpus.hpp"
#include "mmner/error.hpp"
#include "mmner/unicode.hpp"

namespace mmner {

// Named, real-valued features for one token. Indicators carry 1.0.
using NamedFeatures = std::vector<std::pair<std::string, double>>;

struct LexicalConfig {
  int windowSize = 2;
  int affixMax = 3;

  void validate() const {
    if (windowSize < 0 || windowSize > 3) throw Error(ErrorCode::ConfigInvalid, "windowSize must be in [0,3]");
    if (affixMax < 1 || affixMax > 4) throw Error(ErrorCode::ConfigInvalid, "affixMax must be in [1,4]");
  }
};

// Uppercase -> X, lowercase -> x, digit -> d, anything else -> o, by Unicode
// general category; runs longer than two collapse to two.
inline std::string word_shape(const std::string& surface) {
  std::string shape;
  char prev = 0;
  int run = 0;
  for (char32_t c : unicode::decode(surface)) {
    const char cls = unicode::is_upper(c) ? 'X' : unicode::is_lower(c) ? 'x' : unicode::is_digit(c) ? 'd' : 'o';
    run = cls == prev ? run + 1 : 1;
    prev = cls;
    if (run <= 2) shape += cls;
  }
  return shape;
}

namespace detail {

// Lowercased surface with any Unicode whitespace replaced by '_'.
inline std::string feature_word(const std::string& surface) {
  std::string out;
  for (char32_t c : unicode::decode(unicode::to_lower(surface))) unicode::append(out, unicode::is_space(c) ? U'_' : c);
  return out;
}

inline std::string context_word(const Sentence& sentence, long index) {
  if (index < 0) return "BOS";
  if (index >= static_cast<long>(sentence.size())) return "EOS";
  return feature_word(sentence.tokens[static_cast<size_t>(index)].surface);
}

}  // namespace detail

inline NamedFeatures extract_lexical(const Sentence& sentence, size_t position, const LexicalConfig& config = {}) {
  if (position >= sentence.size()) {
    throw Error(ErrorCode::PositionOutOfRange,
                std::to_string(position) + " in sentence of length " + std::to_string(sentence.size()));
  }
  const std::string& surface = sentence.tokens[position].surface;
  const std::string lower = detail::feature_word(surface);
  const auto cps = unicode::decode(surface);
  const auto lowerCps = unicode::decode(lower);

  NamedFeatures out;
  out.emplace_back("bias", 1.0);
  out.emplace_back("w=" + lower, 1.0);
  out.emplace_back("shape=" + word_shape(surface), 1.0);
  for (int k = 1; k <= config.affixMax && static_cast<size_t>(k) <= lowerCps.size(); ++k) {
    const auto n = static_cast<size_t>(k);
    out.emplace_back("pre" + std::to_string(k) + "=" + unicode::encode({lowerCps.begin(), lowerCps.begin() + n}), 1.0);
    out.emplace_back("suf" + std::to_string(k) + "=" + unicode::encode({lowerCps.end() - n, lowerCps.end()}), 1.0);
  }

  bool anyUpper = false, anyLower = false, allDigit = !cps.empty();
  for (char32_t c : cps) {
    anyUpper |= unicode::is_upper(c);
    anyLower |= unicode::is_lower(c);
    allDigit &= unicode::is_digit(c);
  }
  if (!cps.empty() && unicode::is_upper(cps.front())) out.emplace_back("isUpperInit", 1.0);
  if (anyUpper && !anyLower) out.emplace_back("isAllCaps", 1.0);
  if (allDigit) out.emplace_back("isDigit", 1.0);
  if (cps.size() > 1 && cps.front() == U'#') out.emplace_back("isHashtag", 1.0);
  if (cps.size() > 1 && cps.front() == U'@') out.emplace_back("isMention", 1.0);
  if (lower.rfind("http://", 0) == 0 || lower.rfind("https://", 0) == 0) out.emplace_back("isUrl", 1.0);

  const long pos = static_cast<long>(position);
  for (int d = 1; d <= config.windowSize; ++d) {
    out.emplace_back("w[-" + std::to_string(d) + "]=" + detail::context_word(sentence, pos - d), 1.0);
    out.emplace_back("w[+" + std::to_string(d) + "]=" + detail::context_word(sentence, pos + d), 1.0);
  }
  return out;
}

}  // namespace mmner
