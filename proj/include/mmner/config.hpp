#pragma once

#include <algorithm>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "mmner/crf.hpp"
#include "mmner/error.hpp"
#include "mmner/eval.hpp"
#include "mmner/json_io.hpp"
#include "mmner/lexical.hpp"
#include "mmner/rng.hpp"

namespace mmner {

namespace fs = std::filesystem;

enum class EvidenceEncoding { Both, Raw, Binned };

inline const char* to_string(EvidenceEncoding e) {
  switch (e) {
    case EvidenceEncoding::Both: return "both";
    case EvidenceEncoding::Raw: return "raw";
    case EvidenceEncoding::Binned: return "binned";
  }
  return "both";
}

struct FeatureToggles {
  bool lexical = true;
  bool text = false;
  bool vision = false;
  EvidenceEncoding encoding = EvidenceEncoding::Both;
  LexicalConfig lexicalConfig;

  bool any_evidence() const { return text || vision; }
};

struct RetrievalConfig {
  std::optional<fs::path> index;
  size_t kImages = 10;
  size_t kDocs = 10;
  std::optional<fs::path> cacheDir;  // nullopt: no cache
};

struct EvidenceConfig {
  std::optional<fs::path> model;
  std::optional<fs::path> textTrain;
  std::optional<fs::path> visionTrain;
  size_t codebookSize = 64;
};

struct PipelineConfig {
  fs::path corpus;
  std::optional<fs::path> tagMapping;
  FeatureToggles features;
  RetrievalConfig retrieval;
  EvidenceConfig evidence;
  TrainConfig train;
  CVConfig cv;
  uint64_t seed = 0;
  fs::path outputDir;

  uint64_t sub_seed(std::string_view name) const { return derive_seed(seed, name); }
};

namespace detail {

class ConfigReader {
 public:
  ConfigReader(const Json& root, fs::path baseDir) : root_(root), base_(std::move(baseDir)) {}

  [[noreturn]] static void fail(const std::string& pointer, const std::string& message) {
    throw Error(ErrorCode::ConfigInvalid, (pointer.empty() ? "/" : pointer) + ": " + message);
  }

  static void check_keys(const Json& obj, const std::string& pointer, const std::set<std::string>& allowed) {
    if (!obj.is_object()) fail(pointer, "expected an object");
    for (auto it = obj.begin(); it != obj.end(); ++it) {
      if (!allowed.count(it.key())) fail(pointer + "/" + it.key(), "unknown key");
    }
  }

  static const Json* find(const Json& obj, const std::string& key) {
    auto it = obj.find(key);
    return it == obj.end() || it->is_null() ? nullptr : &*it;
  }

  static bool get_bool(const Json& obj, const std::string& pointer, const std::string& key, bool def) {
    const Json* v = find(obj, key);
    if (!v) return def;
    if (!v->is_boolean()) fail(pointer + "/" + key, "expected a boolean");
    return v->get<bool>();
  }

  static long long get_int(const Json& obj, const std::string& pointer, const std::string& key, long long def) {
    const Json* v = find(obj, key);
    if (!v) return def;
    if (!v->is_number_integer()) fail(pointer + "/" + key, "expected an integer");
    return v->get<long long>();
  }

  static double get_number(const Json& obj, const std::string& pointer, const std::string& key, double def) {
    const Json* v = find(obj, key);
    if (!v) return def;
    if (!v->is_number()) fail(pointer + "/" + key, "expected a number");
    return v->get<double>();
  }

  static std::optional<std::string> get_string(const Json& obj, const std::string& pointer, const std::string& key) {
    const Json* v = find(obj, key);
    if (!v) return std::nullopt;
    if (!v->is_string()) fail(pointer + "/" + key, "expected a string");
    return v->get<std::string>();
  }

  std::optional<fs::path> get_path(const Json& obj, const std::string& pointer, const std::string& key,
                                   bool mustExist) const {
    auto s = get_string(obj, pointer, key);
    if (!s) return std::nullopt;
    fs::path p(*s);
    if (p.is_relative()) p = base_ / p;
    if (mustExist && !fs::exists(p)) fail(pointer + "/" + key, "path does not exist: " + p.string());
    return p;
  }

  static const Json& section(const Json& root, const std::string& key, const std::set<std::string>& allowed) {
    static const Json kEmpty = Json::object();
    const Json* v = find(root, key);
    if (!v) return kEmpty;
    check_keys(*v, "/" + key, allowed);
    return *v;
  }

  const Json& root() const { return root_; }

 private:
  const Json& root_;
  fs::path base_;
};

}  // namespace detail

// Parses and checks a pipeline config. Relative paths resolve against
// `baseDir`; absent keys take the documented defaults; unknown keys fail.
inline PipelineConfig config_from_json(const Json& root, const fs::path& baseDir) {
  using detail::ConfigReader;
  ConfigReader r(root, baseDir);
  ConfigReader::check_keys(root, "",
                           {"corpus", "tagMapping", "features", "retrieval", "evidence", "train", "cv", "seed",
                            "outputDir"});
  PipelineConfig c;

  auto corpus = r.get_path(root, "", "corpus", true);
  if (!corpus) ConfigReader::fail("/corpus", "required");
  c.corpus = *corpus;
  c.tagMapping = r.get_path(root, "", "tagMapping", true);

  const long long seed = ConfigReader::get_int(root, "", "seed", 0);
  if (seed < 0) ConfigReader::fail("/seed", "must be >= 0");
  c.seed = static_cast<uint64_t>(seed);
  c.outputDir = r.get_path(root, "", "outputDir", false).value_or(baseDir / "mmner-out");

  const Json& retrieval = ConfigReader::section(root, "retrieval", {"index", "kImages", "kDocs", "cacheDir", "cache"});
  c.retrieval.index = r.get_path(retrieval, "/retrieval", "index", true);
  const long long kImages = ConfigReader::get_int(retrieval, "/retrieval", "kImages", 10);
  const long long kDocs = ConfigReader::get_int(retrieval, "/retrieval", "kDocs", 10);
  if (kImages < 1) ConfigReader::fail("/retrieval/kImages", "must be >= 1");
  if (kDocs < 1) ConfigReader::fail("/retrieval/kDocs", "must be >= 1");
  c.retrieval.kImages = static_cast<size_t>(kImages);
  c.retrieval.kDocs = static_cast<size_t>(kDocs);
  if (ConfigReader::get_bool(retrieval, "/retrieval", "cache", true)) {
    c.retrieval.cacheDir = r.get_path(retrieval, "/retrieval", "cacheDir", false).value_or(c.outputDir / "cache");
  }

  // text/vision default to on exactly when a retrieval index is configured.
  const bool haveIndex = c.retrieval.index.has_value();
  const Json& features = ConfigReader::section(
      root, "features", {"lexical", "text", "vision", "evidenceEncoding", "windowSize", "affixMax"});
  c.features.lexical = ConfigReader::get_bool(features, "/features", "lexical", true);
  c.features.text = ConfigReader::get_bool(features, "/features", "text", haveIndex);
  c.features.vision = ConfigReader::get_bool(features, "/features", "vision", haveIndex);
  const std::string enc = ConfigReader::get_string(features, "/features", "evidenceEncoding").value_or("both");
  if (enc == "both") {
    c.features.encoding = EvidenceEncoding::Both;
  } else if (enc == "raw") {
    c.features.encoding = EvidenceEncoding::Raw;
  } else if (enc == "binned") {
    c.features.encoding = EvidenceEncoding::Binned;
  } else {
    ConfigReader::fail("/features/evidenceEncoding", "expected one of both, raw, binned");
  }
  c.features.lexicalConfig.windowSize = static_cast<int>(ConfigReader::get_int(features, "/features", "windowSize", 2));
  c.features.lexicalConfig.affixMax = static_cast<int>(ConfigReader::get_int(features, "/features", "affixMax", 3));
  try {
    c.features.lexicalConfig.validate();
  } catch (const Error& e) {
    ConfigReader::fail("/features", e.what());
  }
  if (!c.features.lexical && !c.features.text && !c.features.vision) {
    ConfigReader::fail("/features", "at least one feature family must be enabled");
  }
  if (c.features.any_evidence() && !haveIndex) {
    ConfigReader::fail("/retrieval/index", "required when text or vision features are enabled");
  }

  const Json& evidence =
      ConfigReader::section(root, "evidence", {"model", "textTrain", "visionTrain", "codebookSize"});
  c.evidence.model = r.get_path(evidence, "/evidence", "model", false);
  c.evidence.textTrain = r.get_path(evidence, "/evidence", "textTrain", true);
  c.evidence.visionTrain = r.get_path(evidence, "/evidence", "visionTrain", true);
  const long long k = ConfigReader::get_int(evidence, "/evidence", "codebookSize", 64);
  if (k < 2) ConfigReader::fail("/evidence/codebookSize", "must be >= 2");
  c.evidence.codebookSize = static_cast<size_t>(k);
  const bool haveModel = c.evidence.model && fs::exists(*c.evidence.model);
  if (c.features.text && !haveModel && !c.evidence.textTrain) {
    ConfigReader::fail("/evidence/textTrain", "required when text features are enabled and no evidence model exists");
  }
  if (c.features.vision && !haveModel && !c.evidence.visionTrain) {
    ConfigReader::fail("/evidence/visionTrain", "required when vision features are enabled and no evidence model exists");
  }

  const Json& train = ConfigReader::section(root, "train", {"l2Lambda", "maxIterations", "gradTolerance", "lbfgsMemory"});
  c.train.l2Lambda = ConfigReader::get_number(train, "/train", "l2Lambda", 0.1);
  c.train.maxIterations = static_cast<int>(ConfigReader::get_int(train, "/train", "maxIterations", 200));
  c.train.gradTolerance = ConfigReader::get_number(train, "/train", "gradTolerance", 1e-4);
  c.train.lbfgsMemory = static_cast<int>(ConfigReader::get_int(train, "/train", "lbfgsMemory", 10));
  c.train.seed = c.sub_seed("crf-train");
  try {
    c.train.validate();
  } catch (const Error& e) {
    ConfigReader::fail("/train", e.what());
  }

  const Json& cv = ConfigReader::section(root, "cv", {"folds"});
  const long long folds = ConfigReader::get_int(cv, "/cv", "folds", 5);
  if (folds < 2) ConfigReader::fail("/cv/folds", "must be >= 2");
  c.cv.folds = static_cast<int>(folds);
  c.cv.seed = c.sub_seed("split");
  return c;
}

// Applies `key=value` overrides; the key is a dotted path ("cv.folds") or a
// JSON pointer ("/cv/folds"). Values parse as JSON when they can and are
// taken as strings otherwise.
inline void apply_override(Json& root, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw Error(ErrorCode::ConfigInvalid, "override '" + assignment + "' is not key=value");
  }
  std::string key = assignment.substr(0, eq);
  const std::string raw = assignment.substr(eq + 1);
  if (key.front() != '/') {
    std::replace(key.begin(), key.end(), '.', '/');
    key = "/" + key;
  }
  Json value;
  try {
    value = Json::parse(raw);
  } catch (const Json::exception&) {
    value = raw;
  }
  try {
    root[Json::json_pointer(key)] = value;
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::ConfigInvalid, key + ": " + e.what());
  }
}

inline PipelineConfig validate_config(const fs::path& path, const std::vector<std::string>& overrides = {}) {
  Json root = parse_json_file(path.string(), ErrorCode::ConfigInvalid);
  if (!root.is_object()) throw Error(ErrorCode::ConfigInvalid, "/: expected an object");
  for (const auto& o : overrides) apply_override(root, o);
  const fs::path base = path.has_parent_path() ? path.parent_path() : fs::path(".");
  return config_from_json(root, base);
}

}  // namespace mmner
