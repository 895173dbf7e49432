// mmner: multimodal NER command-line front end.

#include <iostream>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "mmner/atomic_file.hpp"
#include "mmner/config.hpp"
#include "mmner/corpus.hpp"
#include "mmner/eval.hpp"
#include "mmner/evidence.hpp"
#include "mmner/json_io.hpp"
#include "mmner/pipeline.hpp"
#include "mmner/version.hpp"

namespace {

using namespace mmner;

struct CommonOptions {
  std::string config;
  std::vector<std::string> overrides;
};

void add_config_options(CLI::App* cmd, CommonOptions& opts, bool required = true) {
  auto* opt = cmd->add_option("-c,--config", opts.config, "Pipeline config JSON");
  if (required) opt->required();
  cmd->add_option("--set", opts.overrides, "Override a config key (key=value, dotted or /pointer)");
}

PipelineConfig load_config(const CommonOptions& opts) { return validate_config(opts.config, opts.overrides); }

fs::path output_path(const std::string& flag, const fs::path& fallback) {
  return flag.empty() ? fallback : fs::path(flag);
}

int cmd_train_evidence(const CommonOptions& opts, const std::string& out) {
  const auto config = load_config(opts);
  if (!config.features.any_evidence()) throw Error(ErrorCode::ConfigInvalid, "/features: text and vision are both disabled");
  const EvidenceModel model = train_evidence(config);
  const fs::path target = output_path(out, config.evidence.model.value_or(config.outputDir / "evidence_model.json"));
  write_file_atomic(target, dump_json(evidence_model_to_json(model)));
  std::cout << "wrote " << target.string() << "\n";
  return 0;
}

int cmd_extract(const CommonOptions& opts, const std::string& input, const std::string& out) {
  const auto config = load_config(opts);
  LabeledCorpus corpus = input.empty() ? load_corpus(config) : load_conll(input);
  if (!input.empty() && config.tagMapping) corpus = map_tags(corpus, load_tag_mapping(config.tagMapping->string()));
  std::unique_ptr<EvidenceFeaturizer> featurizer;
  if (config.features.any_evidence()) {
    featurizer = std::make_unique<EvidenceFeaturizer>(config, obtain_evidence_model(config));
  }
  std::string text;
  for (const auto& sentence : corpus.sentences) {
    const auto rows = sentence_features(sentence, config.features, featurizer.get());
    for (size_t i = 0; i < sentence.size(); ++i) {
      text += sentence.tokens[i].surface + "\t" + sentence.tokens[i].goldTag;
      for (const auto& [name, value] : rows[i]) text += "\t" + name + ":" + format_double(value);
      text += "\n";
    }
    text += "\n";
  }
  const fs::path target = output_path(out, config.outputDir / "features.tsv");
  write_file_atomic(target, text);
  std::cout << "wrote " << target.string() << "\n";
  return 0;
}

int cmd_train(const CommonOptions& opts, const std::string& out) {
  const auto config = load_config(opts);
  const LabeledCorpus corpus = load_corpus(config);
  const PipelineModel model = train_pipeline(config, corpus);
  const fs::path target = output_path(out, config.outputDir / "model.json");
  write_file_atomic(target, dump_json(pipeline_model_to_json(model)));
  std::cout << "wrote " << target.string() << "\n";
  return 0;
}

int cmd_predict(const CommonOptions& opts, const std::string& modelPath, const std::string& input,
                const std::string& out) {
  const auto config = load_config(opts);
  const PipelineModel model = pipeline_model_from_json(parse_json_file(modelPath, ErrorCode::InvalidModel));
  const std::string text = read_text_file(input);
  const auto sentences = parse_conll_tokens(text);
  const auto tags = predict_pipeline(model, config, sentences);

  // Echo every input line, appending the predicted tag to token lines.
  std::string result;
  size_t s = 0, t = 0;
  for (const auto line : split_lines(text)) {
    result.append(line);
    if (is_conll_token_line(line)) {
      result += "\t" + tags[s][t];
      if (++t == tags[s].size()) {
        ++s;
        t = 0;
      }
    }
    result += "\n";
  }
  const fs::path target = output_path(out, config.outputDir / "predictions.conll");
  write_file_atomic(target, result);
  std::cout << "wrote " << target.string() << "\n";
  return 0;
}

// Scores a tagged file whose last column is the prediction and whose
// second-to-last column is the gold tag.
int cmd_evaluate(const std::string& input, const std::string& out) {
  const std::string text = read_text_file(input);
  std::vector<std::vector<std::string>> goldTags, predTags;
  std::set<std::string> classes;
  std::vector<std::string> g, p;
  auto flush = [&] {
    if (g.empty()) return;
    goldTags.push_back(std::move(g));
    predTags.push_back(std::move(p));
    g.clear();
    p.clear();
  };
  const auto lines = split_lines(text);
  for (size_t n = 0; n < lines.size(); ++n) {
    if (!is_conll_token_line(lines[n])) {
      if (lines[n].find_first_not_of(" \t") == std::string_view::npos) flush();
      continue;
    }
    const auto cols = detail::split_columns(lines[n]);
    const std::string where = input + ": line " + std::to_string(n + 1) + ": ";
    if (cols.size() < 3) throw Error(ErrorCode::MalformedLine, where + "expected token, gold and predicted columns");
    for (const auto col : {cols[cols.size() - 2], cols.back()}) {
      const auto tag = parse_tag(col);
      if (!tag) throw Error(ErrorCode::MalformedLine, where + "invalid tag '" + std::string(col) + "'");
      if (tag->prefix != 'O') classes.insert(tag->cls);
    }
    g.emplace_back(cols[cols.size() - 2]);
    p.emplace_back(cols.back());
  }
  flush();
  if (goldTags.empty()) throw Error(ErrorCode::EmptyCorpus, input + ": no sentences");
  for (auto& tags : goldTags) repair_bio(tags);
  const FoldScore s = score_sentences(goldTags, predTags, {classes.begin(), classes.end()});
  EvalReport report = pool_folds(Condition::Baseline, {s}, {classes.begin(), classes.end()});
  Json j = report_json(report);
  j.erase("condition");
  for (const auto& [c, score] : report.perClass) {
    std::cout << c << "\tP=" << score.precision << "\tR=" << score.recall << "\tF1=" << score.f1 << "\n";
  }
  std::cout << "micro\tP=" << report.micro.precision << "\tR=" << report.micro.recall << "\tF1=" << report.micro.f1
            << "\n";
  if (!out.empty()) write_file_atomic(out, dump_json(j));
  return 0;
}

int cmd_cross_validate(const CommonOptions& opts) {
  const auto config = load_config(opts);
  const CvResult cv = cross_validate(config);
  OutputTransaction tx;
  tx.stage(config.outputDir / "cv_report.json", dump_json(cv_report_json(cv, config.cv)));
  tx.stage(config.outputDir / "cv_report.csv", report_csv({cv.baseline, cv.augmented}));
  tx.commit();
  std::cout << "BASELINE  micro F1 = " << cv.baseline.micro.f1 << "\n";
  std::cout << "AUGMENTED micro F1 = " << cv.augmented.micro.f1 << "\n";
  std::cout << "wrote " << (config.outputDir / "cv_report.json").string() << " and cv_report.csv\n";
  return 0;
}

int cmd_cache_clear(const CommonOptions& opts, const std::string& cacheDir) {
  fs::path dir;
  if (!cacheDir.empty()) {
    dir = cacheDir;
  } else if (!opts.config.empty()) {
    const auto config = load_config(opts);
    if (!config.retrieval.cacheDir) throw Error(ErrorCode::ConfigInvalid, "/retrieval/cache: caching is disabled");
    dir = *config.retrieval.cacheDir;
  } else {
    throw CLI::RequiredError("--config or --cache-dir");
  }
  CacheStore store(dir);
  store.clear();
  std::cout << "cleared " << dir.string() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multimodal named entity recognition with image and text evidence features", "mmner"};
  app.set_version_flag("--version", std::string(mmner::kVersion));
  app.require_subcommand(1);

  CommonOptions common;
  std::string out, input, modelPath, cacheDir;

  auto* trainEvidence = app.add_subcommand("train-evidence", "Fit the text and vision evidence classifiers");
  add_config_options(trainEvidence, common);
  trainEvidence->add_option("-o,--out", out, "Evidence model output path");

  auto* extract = app.add_subcommand("extract", "Write per-token feature rows for inspection");
  add_config_options(extract, common);
  extract->add_option("-i,--input", input, "CoNLL input (defaults to the configured corpus)");
  extract->add_option("-o,--out", out, "Feature file output path");

  auto* train = app.add_subcommand("train", "Train the CRF on the configured corpus");
  add_config_options(train, common);
  train->add_option("-o,--out", out, "Model output path");

  auto* predict = app.add_subcommand("predict", "Tag a CoNLL file with a trained model");
  add_config_options(predict, common);
  predict->add_option("-m,--model", modelPath, "Model JSON")->required();
  predict->add_option("-i,--input", input, "CoNLL input")->required();
  predict->add_option("-o,--out", out, "Tagged output path");

  auto* evaluate = app.add_subcommand("evaluate", "Score a tagged file (gold and predicted tag columns)");
  evaluate->add_option("-i,--input", input, "Tagged CoNLL file")->required();
  evaluate->add_option("-o,--out", out, "Optional JSON report path");

  auto* crossValidate = app.add_subcommand("cross-validate", "Baseline vs. evidence-augmented k-fold comparison");
  add_config_options(crossValidate, common);

  auto* cache = app.add_subcommand("cache", "Evidence cache maintenance");
  cache->require_subcommand(1);
  auto* cacheClear = cache->add_subcommand("clear", "Delete every cached record and blob");
  add_config_options(cacheClear, common, false);
  cacheClear->add_option("--cache-dir", cacheDir, "Cache directory (instead of --config)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    std::cerr << "mmner: " << e.what() << "\n" << app.help();
    return 2;
  }

  try {
    if (*trainEvidence) return cmd_train_evidence(common, out);
    if (*extract) return cmd_extract(common, input, out);
    if (*train) return cmd_train(common, out);
    if (*predict) return cmd_predict(common, modelPath, input, out);
    if (*evaluate) return cmd_evaluate(input, out);
    if (*crossValidate) return cmd_cross_validate(common);
    if (*cacheClear) return cmd_cache_clear(common, cacheDir);
  } catch (const CLI::ParseError& e) {
    std::cerr << "mmner: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "mmner: error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
