#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "mmner/error.hpp"
#include "mmner/json_io.hpp"

namespace mmner {

struct Token {
  std::string surface;
  std::string goldTag;

  bool operator==(const Token&) const = default;
};

struct Sentence {
  std::vector<Token> tokens;

  size_t size() const { return tokens.size(); }
  std::vector<std::string> tags() const {
    std::vector<std::string> out;
    out.reserve(tokens.size());
    for (const auto& t : tokens) out.push_back(t.goldTag);
    return out;
  }
  bool operator==(const Sentence&) const = default;
};

// Ordered target classes plus the source-class table that feeds them.
// A mapping value of std::nullopt means DROP (the entity becomes O).
struct TagScheme {
  std::vector<std::string> classes;
  std::map<std::string, std::optional<std::string>> mapping;

  bool has_class(std::string_view c) const {
    return std::find(classes.begin(), classes.end(), c) != classes.end();
  }
  bool operator==(const TagScheme&) const = default;
};

struct LabeledCorpus {
  std::vector<Sentence> sentences;
  TagScheme scheme;

  size_t token_count() const {
    size_t n = 0;
    for (const auto& s : sentences) n += s.size();
    return n;
  }
};

inline constexpr std::string_view kDropTarget = "DROP";

// ---------------------------------------------------------------------------
// BIO tags

struct BioTag {
  char prefix = 'O';  // 'O', 'B' or 'I'
  std::string cls;
};

inline std::optional<BioTag> parse_tag(std::string_view tag) {
  if (tag == "O") return BioTag{'O', {}};
  if (tag.size() < 3 || (tag[0] != 'B' && tag[0] != 'I') || tag[1] != '-') return std::nullopt;
  std::string cls(tag.substr(2));
  if (cls.find_first_of(" \t\r\n") != std::string::npos) return std::nullopt;
  return BioTag{tag[0], std::move(cls)};
}

inline bool is_valid_tag(std::string_view tag) { return parse_tag(tag).has_value(); }

// Rewrites every orphan I-X (predecessor neither B-X nor I-X) to B-X.
inline void repair_bio(std::vector<std::string>& tags) {
  std::string prevClass;
  for (auto& tag : tags) {
    auto parsed = parse_tag(tag);
    if (!parsed || parsed->prefix == 'O') {
      prevClass.clear();
      continue;
    }
    if (parsed->prefix == 'I' && parsed->cls != prevClass) tag = "B-" + parsed->cls;
    prevClass = parsed->cls;
  }
}

inline void repair_bio(Sentence& sentence) {
  auto tags = sentence.tags();
  repair_bio(tags);
  for (size_t i = 0; i < tags.size(); ++i) sentence.tokens[i].goldTag = std::move(tags[i]);
}

struct Span {
  std::string cls;
  size_t start = 0;
  size_t end = 0;  // exclusive

  bool operator==(const Span&) const = default;
  auto operator<=>(const Span&) const = default;
};

inline std::vector<std::string> encode_bio(const std::vector<Span>& spans, size_t length) {
  std::vector<std::string> tags(length, "O");
  std::vector<bool> used(length, false);
  for (const auto& span : spans) {
    if (span.start >= span.end || span.end > length) {
      throw Error(ErrorCode::SpanOutOfRange, span.cls + " [" + std::to_string(span.start) + "," +
                                                 std::to_string(span.end) + ") for length " +
                                                 std::to_string(length));
    }
    for (size_t i = span.start; i < span.end; ++i) {
      if (used[i]) throw Error(ErrorCode::OverlappingSpans, "position " + std::to_string(i));
      used[i] = true;
      tags[i] = (i == span.start ? "B-" : "I-") + span.cls;
    }
  }
  return tags;
}

// Spans in left-to-right order. An I-X that does not continue an X span opens
// a new one, matching the ingestion repair rule.
inline std::vector<Span> decode_bio(const std::vector<std::string>& tags) {
  std::vector<Span> spans;
  std::optional<Span> open;
  for (size_t i = 0; i < tags.size(); ++i) {
    auto parsed = parse_tag(tags[i]);
    const bool continues = parsed && parsed->prefix == 'I' && open && open->cls == parsed->cls;
    if (continues) {
      open->end = i + 1;
      continue;
    }
    if (open) {
      spans.push_back(*open);
      open.reset();
    }
    if (parsed && parsed->prefix != 'O') open = Span{parsed->cls, i, i + 1};
  }
  if (open) spans.push_back(*open);
  return spans;
}

// ---------------------------------------------------------------------------
// Schemes

inline void validate_scheme(const TagScheme& scheme, bool requireUppercase) {
  std::set<std::string> seen;
  for (const auto& c : scheme.classes) {
    if (c.empty()) throw Error(ErrorCode::InvalidScheme, "empty class name");
    if (!seen.insert(c).second) throw Error(ErrorCode::InvalidScheme, "duplicate class " + c);
    if (c == kDropTarget) throw Error(ErrorCode::InvalidScheme, "DROP is reserved");
    if (c.find_first_of(" \t\r\n") != std::string::npos) {
      throw Error(ErrorCode::InvalidScheme, "class contains whitespace: " + c);
    }
    if (requireUppercase) {
      for (unsigned char ch : c) {
        if (ch >= 'a' && ch <= 'z') throw Error(ErrorCode::InvalidScheme, "class not uppercase: " + c);
      }
    }
  }
  for (const auto& [source, target] : scheme.mapping) {
    if (target && !seen.count(*target)) {
      throw Error(ErrorCode::InvalidScheme, "mapping " + source + " -> " + *target + " targets an unknown class");
    }
  }
}

// Builds a target scheme from a {sourceClass: targetClassOrDROP} table.
// Classes are the distinct non-DROP targets in lexicographic order.
inline TagScheme scheme_from_mapping(const std::map<std::string, std::string>& table) {
  TagScheme scheme;
  std::set<std::string> targets;
  for (const auto& [source, target] : table) {
    if (source.empty()) throw Error(ErrorCode::InvalidScheme, "empty source class");
    if (target == kDropTarget) {
      scheme.mapping[source] = std::nullopt;
    } else {
      scheme.mapping[source] = target;
      targets.insert(target);
    }
  }
  scheme.classes.assign(targets.begin(), targets.end());
  validate_scheme(scheme, true);
  return scheme;
}

inline TagScheme scheme_from_json(const Json& j) {
  if (!j.is_object()) throw Error(ErrorCode::InvalidScheme, "tag mapping must be a JSON object");
  std::map<std::string, std::string> table;
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!it.value().is_string()) throw Error(ErrorCode::InvalidScheme, "mapping for " + it.key() + " is not a string");
    table[it.key()] = it.value().get<std::string>();
  }
  return scheme_from_mapping(table);
}

inline TagScheme load_tag_mapping(const std::string& path) {
  return scheme_from_json(parse_json_file(path, ErrorCode::InvalidScheme));
}

// Ritter's ten fine-grained classes collapsed to PER/LOC/ORG.
inline TagScheme ritter_muc3_scheme() {
  return scheme_from_mapping({
      {"person", "PER"},
      {"geo-loc", "LOC"},
      {"facility", "LOC"},
      {"company", "ORG"},
      {"band", "DROP"},
      {"movie", "DROP"},
      {"musicartist", "DROP"},
      {"other", "DROP"},
      {"product", "DROP"},
      {"sportsteam", "DROP"},
      {"tvshow", "DROP"},
  });
}

inline TagScheme identity_scheme(const std::set<std::string>& classes) {
  TagScheme scheme;
  scheme.classes.assign(classes.begin(), classes.end());
  for (const auto& c : classes) scheme.mapping[c] = c;
  validate_scheme(scheme, false);
  return scheme;
}

// ---------------------------------------------------------------------------
// CoNLL ingestion

struct ConllColumns {
  size_t tokenColumn = 0;
  std::optional<size_t> tagColumn;  // nullopt: last column
};

namespace detail {

inline std::vector<std::string_view> split_columns(std::string_view line) {
  std::vector<std::string_view> cols;
  size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
    if (i >= line.size()) break;
    size_t j = i;
    while (j < line.size() && line[j] != ' ' && line[j] != '\t') ++j;
    cols.push_back(line.substr(i, j - i));
    i = j;
  }
  return cols;
}

inline std::string_view strip_cr(std::string_view line) {
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  return line;
}

inline bool is_blank(std::string_view line) {
  return line.find_first_not_of(" \t") == std::string_view::npos;
}

// `#` followed by a space or the end of the line. Hashtag tokens ("#nyc")
// never match, so tweets keep them as ordinary tokens.
inline bool is_comment(std::string_view line) {
  const size_t p = line.find_first_not_of(" \t");
  return p != std::string_view::npos && line[p] == '#' && (p + 1 == line.size() || line[p + 1] == ' ');
}

}  // namespace detail

// Splits a document into lines without their terminators.
inline std::vector<std::string_view> split_lines(std::string_view text) {
  std::vector<std::string_view> lines;
  size_t start = 0;
  while (start < text.size()) {
    size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    lines.push_back(detail::strip_cr(text.substr(start, end - start)));
    start = end + 1;
  }
  return lines;
}

inline bool is_conll_token_line(std::string_view line) {
  return !detail::is_blank(line) && !detail::is_comment(line);
}

// Parses token-per-line text. Sentences break on blank lines, `# ` lines are
// comments, and orphan I- tags are repaired to B-. The returned scheme is the
// identity over every class seen.
inline LabeledCorpus parse_conll(std::string_view text, const ConllColumns& columns = {}) {
  LabeledCorpus corpus;
  std::set<std::string> classes;
  Sentence current;
  auto flush = [&] {
    if (current.tokens.empty()) return;
    repair_bio(current);
    corpus.sentences.push_back(std::move(current));
    current = Sentence{};
  };

  const auto lines = split_lines(text);
  for (size_t n = 0; n < lines.size(); ++n) {
    const auto line = lines[n];
    if (detail::is_blank(line)) {
      flush();
      continue;
    }
    if (detail::is_comment(line)) continue;
    const auto cols = detail::split_columns(line);
    const size_t tagCol = columns.tagColumn.value_or(cols.size() >= 2 ? cols.size() - 1 : 1);
    const size_t needed = std::max(columns.tokenColumn, tagCol) + 1;
    if (cols.size() < needed) {
      throw Error(ErrorCode::MalformedLine, "line " + std::to_string(n + 1) + ": expected at least " +
                                                std::to_string(needed) + " columns, found " +
                                                std::to_string(cols.size()));
    }
    Token token{std::string(cols[columns.tokenColumn]), std::string(cols[tagCol])};
    auto parsed = parse_tag(token.goldTag);
    if (!parsed) {
      throw Error(ErrorCode::MalformedLine, "line " + std::to_string(n + 1) + ": invalid tag '" + token.goldTag + "'");
    }
    if (parsed->prefix != 'O') classes.insert(parsed->cls);
    current.tokens.push_back(std::move(token));
  }
  flush();
  if (corpus.sentences.empty()) throw Error(ErrorCode::EmptyCorpus, "no sentences");
  corpus.scheme = identity_scheme(classes);
  return corpus;
}

inline LabeledCorpus load_conll(const std::string& path, const ConllColumns& columns = {}) {
  try {
    return parse_conll(read_text_file(path), columns);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::IoFailure) throw;
    throw Error(e.code(), path + ": " + e.what());
  }
}

// Token-only reading for prediction input: the tag column is optional and
// ignored. Gold tags are set to O.
inline std::vector<Sentence> parse_conll_tokens(std::string_view text, size_t tokenColumn = 0) {
  std::vector<Sentence> sentences;
  Sentence current;
  const auto lines = split_lines(text);
  for (size_t n = 0; n < lines.size(); ++n) {
    const auto line = lines[n];
    if (detail::is_blank(line)) {
      if (!current.tokens.empty()) sentences.push_back(std::move(current));
      current = Sentence{};
      continue;
    }
    if (detail::is_comment(line)) continue;
    const auto cols = detail::split_columns(line);
    if (cols.size() <= tokenColumn) {
      throw Error(ErrorCode::MalformedLine, "line " + std::to_string(n + 1) + ": missing token column");
    }
    current.tokens.push_back(Token{std::string(cols[tokenColumn]), "O"});
  }
  if (!current.tokens.empty()) sentences.push_back(std::move(current));
  if (sentences.empty()) throw Error(ErrorCode::EmptyCorpus, "no sentences");
  return sentences;
}

// ---------------------------------------------------------------------------
// Tag mapping

inline LabeledCorpus map_tags(const LabeledCorpus& corpus, const TagScheme& scheme) {
  LabeledCorpus out;
  out.scheme = scheme;
  out.sentences.reserve(corpus.sentences.size());
  for (const auto& sentence : corpus.sentences) {
    Sentence mapped = sentence;
    for (auto& token : mapped.tokens) {
      auto parsed = parse_tag(token.goldTag);
      if (!parsed || parsed->prefix == 'O') continue;
      auto it = scheme.mapping.find(parsed->cls);
      if (it == scheme.mapping.end()) throw Error(ErrorCode::UnmappedClass, parsed->cls);
      token.goldTag = it->second ? std::string(1, parsed->prefix) + "-" + *it->second : std::string("O");
    }
    repair_bio(mapped);
    out.sentences.push_back(std::move(mapped));
  }
  return out;
}

inline std::string to_conll(const std::vector<Sentence>& sentences) {
  std::string out;
  for (const auto& s : sentences) {
    for (const auto& t : s.tokens) out += t.surface + "\t" + t.goldTag + "\n";
    out += "\n";
  }
  return out;
}

}  // namespace mmner
