#pragma once

#include <nlohmann/json.hpp>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "parlstance/bayes.hpp"
#include "parlstance/chat_client.hpp"
#include "parlstance/corpus.hpp"
#include "parlstance/error.hpp"
#include "parlstance/evaluation.hpp"
#include "parlstance/hash.hpp"
#include "parlstance/prediction.hpp"
#include "parlstance/prompt.hpp"
#include "parlstance/report.hpp"
#include "parlstance/split.hpp"
#include "parlstance/version.hpp"

namespace parlstance::experiment {

namespace fs = std::filesystem;

struct SplitSpec {
  SplitKind kind = SplitKind::random;
  std::uint64_t seed = 0;
  std::array<double, 3> ratios = {0.8, 0.1, 0.1};
  std::optional<Date> cutoff;
  double val_fraction_of_tail = 0.5;
};

struct BayesSpec {
  bool use_policy = false;
  double smoothing_alpha = 1.0;
  bayes::TTestConfig ttest;
};

struct PromptSpec {
  std::size_t shots = 0;
  prompt::PromptFlags flags;
  std::uint64_t shot_seed = 0;
  std::size_t word_budget = 400;
  prompt::PromptTemplates templates;
  chat::ChatClientConfig client;
};

struct ExternalSpec {
  fs::path path;
  eval::RowInfo row;
};

struct ExperimentConfig {
  nlohmann::json raw;  // effective config after overrides
  fs::path corpus_path;
  ColumnMapping mapping;
  SplitSpec split;
  std::optional<BayesSpec> bayes;
  std::optional<PromptSpec> prompt;
  std::optional<ExternalSpec> external;
  std::vector<double> length_bins = {0, 50, 100, 150, 200, 300, 400, 600, 800, 1000, 1500, 2000, 1e7};
  LowessConfig lowess;
  fs::path output_dir;

  std::string hash() const { return sha256_hex(raw.dump()); }
};

/// Applies "a.b.c=value" overrides. The value is parsed as JSON when it can
/// be, otherwise taken as a string.
inline void apply_override(nlohmann::json& cfg, const std::string& assignment) {
  auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0)
    throw ConfigError("override '" + assignment + "' is not of the form key.path=value");
  std::string path = assignment.substr(0, eq);
  std::string text = assignment.substr(eq + 1);
  nlohmann::json value;
  try {
    value = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error&) {
    value = text;
  }
  nlohmann::json* node = &cfg;
  std::size_t start = 0;
  while (true) {
    auto dot = path.find('.', start);
    std::string key = path.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (key.empty()) throw ConfigError("override '" + assignment + "' has an empty key");
    if (!node->is_object()) *node = nlohmann::json::object();
    if (dot == std::string::npos) {
      (*node)[key] = value;
      break;
    }
    node = &(*node)[key];
    start = dot + 1;
  }
}

inline ExperimentConfig parse_config(nlohmann::json raw, const fs::path& base_dir,
                                     const std::vector<std::string>& overrides = {}) {
  for (const auto& o : overrides) apply_override(raw, o);
  ExperimentConfig c;
  c.raw = raw;
  auto resolve = [&](const std::string& p) {
    fs::path path(p);
    return path.is_absolute() ? path : base_dir / path;
  };
  try {
    const auto& corpus = raw.at("corpus");
    c.corpus_path = resolve(corpus.at("path").get<std::string>());
    if (corpus.contains("mapping_file")) {
      auto file = resolve(corpus.at("mapping_file").get<std::string>());
      c.mapping = ColumnMapping::from_json(nlohmann::json::parse(read_file(file.string())));
    } else if (corpus.contains("mapping")) {
      c.mapping = ColumnMapping::from_json(corpus.at("mapping"));
    } else {
      c.mapping = ColumnMapping::canonical();
    }

    if (raw.contains("split")) {
      const auto& s = raw.at("split");
      c.split.kind = split_kind_from_string(s.value("kind", std::string("random")));
      c.split.seed = s.value("seed", std::uint64_t{0});
      if (s.contains("ratios")) {
        auto r = s.at("ratios").get<std::vector<double>>();
        if (r.size() != 3) throw ConfigError("split.ratios must have three entries");
        c.split.ratios = {r[0], r[1], r[2]};
      }
      if (s.contains("cutoff")) {
        auto cutoff = Date::parse(s.at("cutoff").get<std::string>());
        if (!cutoff) throw ConfigError("split.cutoff must be an ISO date");
        c.split.cutoff = *cutoff;
      }
      c.split.val_fraction_of_tail = s.value("val_fraction_of_tail", 0.5);
      if (c.split.kind == SplitKind::temporal && !c.split.cutoff)
        throw ConfigError("temporal split requires split.cutoff");
    }

    if (raw.contains("model")) {
      const auto& m = raw.at("model");
      if (!m.is_object() || m.size() != 1)
        throw ConfigError("model must name exactly one of bayes, prompt, predictions");
      if (m.contains("bayes")) {
        const auto& b = m.at("bayes");
        BayesSpec spec;
        spec.use_policy = b.value("use_policy", false);
        spec.smoothing_alpha = b.value("smoothing_alpha", 1.0);
        if (b.contains("ttest")) {
          const auto& t = b.at("ttest");
          spec.ttest.alpha = t.value("alpha", spec.ttest.alpha);
          spec.ttest.min_n = t.value("min_n", spec.ttest.min_n);
          spec.ttest.zero_variance_epsilon =
              t.value("zero_variance_epsilon", spec.ttest.zero_variance_epsilon);
        }
        spec.ttest.validate();
        c.bayes = spec;
      } else if (m.contains("prompt")) {
        const auto& p = m.at("prompt");
        PromptSpec spec;
        spec.shots = p.value("shots", std::size_t{0});
        if (spec.shots != 0 && spec.shots != 6) throw ConfigError("prompt.shots must be 0 or 6");
        spec.flags.include_party = p.value("include_party", false);
        spec.flags.include_policy = p.value("include_policy", false);
        if (spec.flags.include_policy && !spec.flags.include_party)
          throw ConfigError("prompt.include_policy requires prompt.include_party");
        spec.shot_seed = p.value("shot_seed", std::uint64_t{0});
        spec.word_budget = p.value("word_budget", std::size_t{400});
        if (p.contains("templates")) spec.templates = prompt::PromptTemplates::from_json(p.at("templates"));
        spec.client = chat::ChatClientConfig::from_json(p.value("client", nlohmann::json::object()));
        spec.client.cache_dir = resolve(spec.client.cache_dir).string();
        c.prompt = spec;
      } else if (m.contains("predictions")) {
        const auto& p = m.at("predictions");
        ExternalSpec spec;
        spec.path = resolve(p.at("path").get<std::string>());
        spec.row.section = p.value("section", std::string("External models"));
        spec.row.model = p.at("name").get<std::string>();
        spec.row.text = p.value("text", true);
        spec.row.party = p.value("party", false);
        spec.row.policy = p.value("policy", false);
        c.external = spec;
      } else {
        throw ConfigError("model must name exactly one of bayes, prompt, predictions");
      }
    }

    if (raw.contains("evaluation")) {
      const auto& e = raw.at("evaluation");
      if (e.contains("length_bins")) c.length_bins = e.at("length_bins").get<std::vector<double>>();
      for (std::size_t i = 1; i < c.length_bins.size(); ++i)
        if (!(c.length_bins[i] > c.length_bins[i - 1]))
          throw ConfigError("evaluation.length_bins must be strictly increasing");
      if (e.contains("lowess")) {
        const auto& l = e.at("lowess");
        c.lowess.bandwidth = l.value("bandwidth", c.lowess.bandwidth);
        c.lowess.robustness_iterations = l.value("robustness_iterations", c.lowess.robustness_iterations);
        c.lowess.min_cell_size = l.value("min_cell_size", c.lowess.min_cell_size);
      }
      try {
        c.lowess.validate();
      } catch (const ArgumentError& err) {
        throw ConfigError(err.what());
      }
    }
    c.output_dir = resolve(raw.at("output_dir").get<std::string>());
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("invalid config: ") + e.what());
  } catch (const SchemaError& e) {
    throw ConfigError(std::string("invalid column mapping: ") + e.what());
  }
  return c;
}

inline ExperimentConfig load_config(const fs::path& path, const std::vector<std::string>& overrides = {}) {
  nlohmann::json raw;
  try {
    raw = nlohmann::json::parse(read_file(path.string()));
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("config '" + path.string() + "' is not valid JSON: " + e.what());
  } catch (const IoError& e) {
    throw ConfigError(e.what());
  }
  return parse_config(std::move(raw), path.parent_path(), overrides);
}

/// Exclusive lock on an output directory, held for the lifetime of the
/// object.
class DirectoryLock {
public:
  explicit DirectoryLock(const fs::path& dir) : path_(dir / ".parlstance.lock") {
    fs::create_directories(dir);
    std::FILE* f = std::fopen(path_.c_str(), "wx");
    if (!f) throw IoError("output directory '" + dir.string() + "' is locked by another run (remove " +
                           path_.string() + " if no run is active)");
    std::fclose(f);
  }
  ~DirectoryLock() {
    std::error_code ec;
    fs::remove(path_, ec);
  }
  DirectoryLock(const DirectoryLock&) = delete;
  DirectoryLock& operator=(const DirectoryLock&) = delete;

private:
  fs::path path_;
};

/// Writes through a temporary file so a failed step never leaves a
/// half-written artifact in place of a good one.
inline void write_atomic(const fs::path& path, const std::string& body) {
  auto tmp = path;
  tmp += ".partial";
  report::write_text(tmp, body);
  fs::rename(tmp, path);
}

/// Records, per step, the config hash, status and artifact digests.
class Manifest {
public:
  explicit Manifest(fs::path dir) : path_(std::move(dir) / "manifest.json") {
    if (fs::exists(path_)) doc_ = nlohmann::ordered_json::parse(read_file(path_.string()));
    doc_["tool"] = kToolName;
    doc_["version"] = kToolVersion;
    if (!doc_.contains("steps")) doc_["steps"] = nlohmann::ordered_json::object();
  }

  void begin(const std::string& step, const std::string& config_hash) {
    doc_["config_sha256"] = config_hash;
    auto& s = doc_["steps"][step];
    s["config_sha256"] = config_hash;
    s["status"] = "incomplete";
    s.erase("error");
    save();
  }

  void complete(const std::string& step, const std::vector<fs::path>& artifacts) {
    auto& s = doc_["steps"][step];
    s["status"] = "complete";
    nlohmann::ordered_json files = nlohmann::ordered_json::object();
    for (const auto& a : artifacts)
      files[fs::relative(a, path_.parent_path()).generic_string()] = sha256_file(a.string());
    s["artifacts"] = files;
    save();
  }

  void fail(const std::string& step, const std::string& message) {
    auto& s = doc_["steps"][step];
    s["status"] = "incomplete";
    s["error"] = message;
    save();
  }

  const nlohmann::ordered_json& doc() const { return doc_; }

private:
  void save() const { write_atomic(path_, doc_.dump(2) + "\n"); }

  fs::path path_;
  nlohmann::ordered_json doc_;
};

/// The pipeline steps behind each CLI subcommand. Artifacts live in the
/// config's output directory:
///   ingest        corpus.jsonl, rejections.json
///   split         split.jsonl, split_meta.json
///   bayes fit     bayes_table.json
///   bayes predict predictions.jsonl
///   prompt eval   shots.json, predictions.jsonl, prompt_run.json
///   score         results.json
///   report        report/{results.json, table.txt, *.svg}
class Runner {
public:
  explicit Runner(ExperimentConfig cfg) : cfg_(std::move(cfg)) {}

  const ExperimentConfig& config() const { return cfg_; }
  fs::path out(const std::string& name) const { return cfg_.output_dir / name; }

  /// Runs `body` as step `name` under the directory lock with manifest
  /// bookkeeping; `body` returns the artifacts it wrote.
  template <typename F>
  std::vector<fs::path> step(const std::string& name, F&& body) {
    DirectoryLock lock(cfg_.output_dir);
    Manifest manifest(cfg_.output_dir);
    manifest.begin(name, cfg_.hash());
    try {
      auto artifacts = body();
      manifest.complete(name, artifacts);
      return artifacts;
    } catch (const std::exception& e) {
      manifest.fail(name, e.what());
      throw;
    }
  }

  std::vector<fs::path> ingest() {
    return step("ingest", [&] {
      auto result = load_corpus(cfg_.corpus_path.string(), cfg_.mapping);
      write_atomic(out("corpus.jsonl"), to_jsonl(result.corpus));
      auto rej = to_json(result.rejections);
      rej["source_path"] = cfg_.corpus_path.string();
      rej["accepted"] = result.corpus.size();
      write_atomic(out("rejections.json"), rej.dump(2) + "\n");
      return std::vector<fs::path>{out("corpus.jsonl"), out("rejections.json")};
    });
  }

  std::vector<fs::path> split() {
    return step("split", [&] {
      auto corpus = corpus_artifact();
      SplitAssignment s = cfg_.split.kind == SplitKind::random
                              ? random_split(corpus, cfg_.split.seed, cfg_.split.ratios)
                              : temporal_split(corpus, *cfg_.split.cutoff, cfg_.split.seed,
                                               cfg_.split.val_fraction_of_tail);
      write_atomic(out("split.jsonl"), to_jsonl(s));
      write_atomic(out("split_meta.json"), split_metadata(s).dump(2) + "\n");
      return std::vector<fs::path>{out("split.jsonl"), out("split_meta.json")};
    });
  }

  std::vector<fs::path> bayes_fit() {
    const auto& spec = require_bayes();
    return step("bayes fit", [&] {
      auto corpus = corpus_artifact();
      auto split = split_artifact();
      auto train = select_part(corpus, split, SplitPart::train);
      auto table = bayes::fit(train, spec.smoothing_alpha, spec.ttest, split.tag(SplitPart::train));
      write_atomic(out("bayes_table.json"), bayes::to_json(table).dump(2) + "\n");
      return std::vector<fs::path>{out("bayes_table.json")};
    });
  }

  std::vector<fs::path> bayes_predict() {
    const auto& spec = require_bayes();
    return step("bayes predict", [&] {
      auto corpus = corpus_artifact();
      auto split = split_artifact();
      auto table = table_artifact();
      auto test = select_part(corpus, split, SplitPart::test);
      write_atomic(out("predictions.jsonl"), to_jsonl(bayes::predict_all(table, test, spec.use_policy)));
      return std::vector<fs::path>{out("predictions.jsonl")};
    });
  }

  /// `transport` overrides the HTTP transport (used by tests).
  std::vector<fs::path> prompt_eval(chat::ChatTransport* transport = nullptr) {
    if (!cfg_.prompt) throw ConfigError("config has no model.prompt section");
    const auto& spec = *cfg_.prompt;
    return step("prompt eval", [&] {
      auto corpus = corpus_artifact();
      auto split = split_artifact();
      auto train = select_part(corpus, split, SplitPart::train);
      auto test = select_part(corpus, split, SplitPart::test);
      chat::PromptRecipe recipe;
      recipe.flags = spec.flags;
      recipe.templates = spec.templates;
      if (spec.shots == 6) {
        auto table = bayes::fit(train, 1.0, {}, split.tag(SplitPart::train));
        recipe.shots = prompt::select_shots(train, table, spec.shot_seed, {spec.flags, spec.word_budget});
      }
      nlohmann::ordered_json shots = nlohmann::ordered_json::array();
      for (const auto& s : recipe.shots)
        shots.push_back({{"example_id", s.example_id},
                         {"label", s.label},
                         {"challenge_tag", prompt::to_string(s.challenge_tag)},
                         {"rendered_text", s.rendered_text}});

      std::unique_ptr<chat::ChatTransport> http;
      if (!transport) {
        http = std::make_unique<chat::HttpChatTransport>(spec.client, chat::api_key_from_env(spec.client));
        transport = http.get();
      }
      auto run = chat::run_eval(spec.client, *transport, test, recipe);
      write_atomic(out("shots.json"), shots.dump(2) + "\n");
      write_atomic(out("predictions.jsonl"), to_jsonl(run.predictions));
      write_atomic(out("prompt_run.json"), chat::to_json(run).dump(2) + "\n");
      return std::vector<fs::path>{out("shots.json"), out("predictions.jsonl"), out("prompt_run.json")};
    });
  }

  std::vector<fs::path> score() {
    return step("score", [&] {
      auto corpus = corpus_artifact();
      auto split = split_artifact();
      auto test = select_part(corpus, split, SplitPart::test);
      fs::path pred_path = cfg_.external ? cfg_.external->path : out("predictions.jsonl");
      auto preds = read_predictions(pred_path.string());

      bayes::ProbabilityTable table;
      if (fs::exists(out("bayes_table.json"))) {
        table = table_artifact();
      } else {
        auto train = select_part(corpus, split, SplitPart::train);
        table = bayes::fit(train, 1.0, {}, split.tag(SplitPart::train));
      }

      eval::EvalReport r;
      r.row = row_info();
      r.split_kind = to_string(split.kind);
      r.summary = eval::summarize(eval::join(preds, test));
      r.by_length = eval::accuracy_by_speech_length(preds, test, cfg_.length_bins);
      r.by_uncertainty = eval::accuracy_by_prior_uncertainty(preds, test, table, cfg_.lowess);
      if (r.by_uncertainty->warning) r.warnings.push_back(*r.by_uncertainty->warning);
      write_atomic(out("results.json"), eval::to_json(r).dump(2) + "\n");
      return std::vector<fs::path>{out("results.json")};
    });
  }

  /// Aggregates results files (or directories containing results.json) into
  /// the report directory, and plots any attention matrices given.
  std::vector<fs::path> report(const std::vector<fs::path>& inputs,
                               const std::vector<fs::path>& attention = {}) {
    return step("report", [&] {
      std::vector<eval::EvalReport> reports;
      auto sources = inputs.empty() ? std::vector<fs::path>{out("results.json")} : inputs;
      for (auto p : sources) {
        if (fs::is_directory(p)) p /= "results.json";
        auto parsed = report::reports_from_json(nlohmann::json::parse(read_file(p.string())));
        reports.insert(reports.end(), parsed.begin(), parsed.end());
      }
      auto dir = out("report");
      auto written = report::render_report(reports, dir);
      for (const auto& a : attention) {
        auto map = report::attention_from_json(nlohmann::json::parse(read_file(a.string())));
        auto target = dir / ("attention_" + a.stem().string() + ".svg");
        report::write_text(target, report::plot_attention(map, a.stem().string()));
        written.push_back(target);
      }
      return written;
    });
  }

  eval::RowInfo row_info() const {
    if (cfg_.bayes) return {"Bayesian", "Bayesian", false, true, cfg_.bayes->use_policy};
    if (cfg_.prompt)
      return {"Prompted LLM (" + cfg_.prompt->client.model + ")",
              std::to_string(cfg_.prompt->shots) + "-shot Prompt", true,
              cfg_.prompt->flags.include_party, cfg_.prompt->flags.include_policy};
    if (cfg_.external) return cfg_.external->row;
    throw ConfigError("config has no model section");
  }

  Corpus corpus_artifact() const {
    require(out("corpus.jsonl"), "ingest");
    return load_canonical_corpus(out("corpus.jsonl").string());
  }

  SplitAssignment split_artifact() const {
    require(out("split.jsonl"), "split");
    return split_from_jsonl(read_file(out("split.jsonl").string()),
                            nlohmann::json::parse(read_file(out("split_meta.json").string())));
  }

  bayes::ProbabilityTable table_artifact() const {
    require(out("bayes_table.json"), "bayes fit");
    return bayes::table_from_json(nlohmann::json::parse(read_file(out("bayes_table.json").string())));
  }

private:
  const BayesSpec& require_bayes() const {
    if (!cfg_.bayes) throw ConfigError("config has no model.bayes section");
    return *cfg_.bayes;
  }

  static void require(const fs::path& p, const std::string& producer) {
    if (!fs::exists(p))
      throw IoError("missing artifact '" + p.string() + "'; run '" + producer + "' first");
  }

  ExperimentConfig cfg_;
};

}  // namespace parlstance::experiment
