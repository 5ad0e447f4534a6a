#pragma once

#include <nlohmann/json.hpp>

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "parlstance/bayes.hpp"
#include "parlstance/corpus.hpp"
#include "parlstance/error.hpp"
#include "parlstance/lowess.hpp"
#include "parlstance/prediction.hpp"

namespace parlstance::eval {

/// A gold example paired with its prediction.
struct Scored {
  const DebateExample* gold = nullptr;
  const PredictionRecord* pred = nullptr;

  bool correct() const { return !pred->abstained && pred->label == gold->vote; }
};

namespace detail {
inline std::string id_list(const std::vector<std::string>& ids) {
  constexpr std::size_t kShown = 20;
  std::string s;
  for (std::size_t i = 0; i < ids.size() && i < kShown; ++i) s += (i ? ", " : "") + ids[i];
  if (ids.size() > kShown) s += ", ... (" + std::to_string(ids.size()) + " total)";
  return s;
}
}  // namespace detail

/// Pairs predictions with gold examples, requiring a perfect id bijection.
/// Result follows gold order.
inline std::vector<Scored> join(std::span<const PredictionRecord> preds,
                                std::span<const DebateExample> gold) {
  std::unordered_map<std::string, std::size_t> gold_index;
  for (std::size_t i = 0; i < gold.size(); ++i) gold_index.emplace(gold[i].id, i);

  std::vector<const PredictionRecord*> by_gold(gold.size(), nullptr);
  std::vector<std::string> unknown, duplicate;
  for (const auto& p : preds) {
    auto it = gold_index.find(p.id);
    if (it == gold_index.end()) {
      unknown.push_back(p.id);
    } else if (by_gold[it->second]) {
      duplicate.push_back(p.id);
    } else {
      by_gold[it->second] = &p;
    }
  }
  std::vector<std::string> missing;
  for (std::size_t i = 0; i < gold.size(); ++i)
    if (!by_gold[i]) missing.push_back(gold[i].id);

  if (!unknown.empty() || !duplicate.empty() || !missing.empty()) {
    std::string msg = "prediction ids do not match the evaluated examples";
    if (!unknown.empty()) msg += "; unknown ids: " + detail::id_list(unknown);
    if (!duplicate.empty()) msg += "; duplicate ids: " + detail::id_list(duplicate);
    if (!missing.empty()) msg += "; ids without prediction: " + detail::id_list(missing);
    throw ScoringError(msg);
  }
  std::vector<Scored> out;
  out.reserve(gold.size());
  for (std::size_t i = 0; i < gold.size(); ++i) out.push_back({&gold[i], by_gold[i]});
  return out;
}

/// Fraction of correct labels; abstentions count as incorrect.
inline double accuracy(std::span<const PredictionRecord> preds, std::span<const DebateExample> gold) {
  auto scored = join(preds, gold);
  if (scored.empty()) return 0.0;
  std::size_t correct = 0;
  for (const auto& s : scored) correct += s.correct() ? 1 : 0;
  return static_cast<double>(correct) / static_cast<double>(scored.size());
}

struct AccuracySummary {
  std::size_t n = 0;
  std::size_t correct = 0;
  std::size_t abstained = 0;
  std::map<std::string, std::pair<std::size_t, std::size_t>> per_model_tag;  // tag -> (n, correct)

  double accuracy() const { return n ? static_cast<double>(correct) / static_cast<double>(n) : 0.0; }
  double abstention_rate() const {
    return n ? static_cast<double>(abstained) / static_cast<double>(n) : 0.0;
  }
  friend bool operator==(const AccuracySummary&, const AccuracySummary&) = default;
};

inline AccuracySummary summarize(const std::vector<Scored>& scored) {
  AccuracySummary s;
  for (const auto& item : scored) {
    ++s.n;
    bool ok = item.correct();
    s.correct += ok ? 1 : 0;
    s.abstained += item.pred->abstained ? 1 : 0;
    auto& tag = s.per_model_tag[item.pred->model_tag];
    ++tag.first;
    tag.second += ok ? 1 : 0;
  }
  return s;
}

struct Bin {
  double lo = 0.0;
  double hi = 0.0;
  std::size_t count = 0;
  std::size_t correct = 0;

  std::optional<double> accuracy() const {
    if (count == 0) return std::nullopt;
    return static_cast<double>(correct) / static_cast<double>(count);
  }
  friend bool operator==(const Bin&, const Bin&) = default;
};

/// Half-open bins [edge_i, edge_{i+1}).
struct BinnedSeries {
  std::string quantity;
  std::vector<double> edges;
  std::vector<Bin> bins;
  std::size_t out_of_range = 0;

  friend bool operator==(const BinnedSeries&, const BinnedSeries&) = default;
};

inline BinnedSeries bin_by(const std::vector<Scored>& scored, const std::vector<double>& edges,
                           std::string quantity, auto&& value_of) {
  if (edges.size() < 2) throw ArgumentError("need at least two bin edges");
  for (std::size_t i = 1; i < edges.size(); ++i)
    if (!(edges[i] > edges[i - 1])) throw ArgumentError("bin edges must be strictly increasing");
  BinnedSeries series;
  series.quantity = std::move(quantity);
  series.edges = edges;
  for (std::size_t i = 0; i + 1 < edges.size(); ++i) series.bins.push_back({edges[i], edges[i + 1], 0, 0});
  for (const auto& item : scored) {
    double v = value_of(*item.gold);
    auto it = std::upper_bound(edges.begin(), edges.end(), v);
    if (v < edges.front() || it == edges.end()) {
      ++series.out_of_range;
      continue;
    }
    auto& bin = series.bins[static_cast<std::size_t>(it - edges.begin()) - 1];
    ++bin.count;
    bin.correct += item.correct() ? 1 : 0;
  }
  return series;
}

/// Accuracy binned by whitespace word count of the raw speech.
inline BinnedSeries accuracy_by_speech_length(std::span<const PredictionRecord> preds,
                                              std::span<const DebateExample> gold,
                                              const std::vector<double>& edges) {
  return bin_by(join(preds, gold), edges, "speech_word_count", [](const DebateExample& ex) {
    return static_cast<double>(word_count(ex.speech_text));
  });
}

struct GroupPoint {
  std::string motion_party;
  std::string speaker_party;
  std::size_t count = 0;
  double x = 0.0;  // |p - 0.5| of the party-pair estimate
  double y = 0.0;  // group accuracy
  std::optional<double> fitted;

  friend bool operator==(const GroupPoint&, const GroupPoint&) = default;
};

struct UncertaintyCurve {
  double bandwidth = 0.5;
  std::size_t robustness_iterations = 0;
  std::size_t min_cell_size = 50;
  std::vector<GroupPoint> points;  // sorted by (motion_party, speaker_party)
  std::size_t excluded_groups = 0;
  std::optional<std::string> warning;

  friend bool operator==(const UncertaintyCurve&, const UncertaintyCurve&) = default;
};

/// Groups test examples by party pair, keeps groups with more than
/// `min_cell_size` examples and fits LOWESS to (|p - 0.5|, accuracy).
inline UncertaintyCurve accuracy_by_prior_uncertainty(std::span<const PredictionRecord> preds,
                                                      std::span<const DebateExample> gold,
                                                      const bayes::ProbabilityTable& table,
                                                      const LowessConfig& cfg = {}) {
  cfg.validate();
  auto scored = join(preds, gold);
  std::map<bayes::PartyKey, std::pair<std::size_t, std::size_t>> groups;  // (count, correct)
  for (const auto& item : scored) {
    auto& g = groups[{item.gold->motion_party, item.gold->speaker_party}];
    ++g.first;
    g.second += item.correct() ? 1 : 0;
  }
  UncertaintyCurve curve;
  curve.bandwidth = cfg.bandwidth;
  curve.robustness_iterations = cfg.robustness_iterations;
  curve.min_cell_size = cfg.min_cell_size;
  for (const auto& [key, g] : groups) {
    if (g.first <= cfg.min_cell_size) {
      ++curve.excluded_groups;
      continue;
    }
    GroupPoint pt;
    pt.motion_party = key.motion_party;
    pt.speaker_party = key.speaker_party;
    pt.count = g.first;
    pt.x = std::abs(bayes::estimate_party(table, key.motion_party, key.speaker_party) - 0.5);
    pt.y = static_cast<double>(g.second) / static_cast<double>(g.first);
    curve.points.push_back(std::move(pt));
  }
  if (curve.points.size() < 2) {
    curve.warning = "fewer than 2 party-pair groups exceed " + std::to_string(cfg.min_cell_size) +
                    " examples; LOWESS curve omitted";
    return curve;
  }
  std::vector<Point> xy;
  for (const auto& p : curve.points) xy.push_back({p.x, p.y});
  try {
    auto fitted = lowess(xy, cfg);
    for (std::size_t i = 0; i < fitted.size(); ++i) curve.points[i].fitted = fitted[i];
  } catch (const ArgumentError& e) {
    curve.warning = std::string("LOWESS curve omitted: ") + e.what();
  }
  return curve;
}

/// Table-row identity of a scored run.
struct RowInfo {
  std::string section = "Models";
  std::string model;
  bool text = false;
  bool party = false;
  bool policy = false;

  friend bool operator==(const RowInfo&, const RowInfo&) = default;
  friend auto operator<=>(const RowInfo&, const RowInfo&) = default;
};

struct EvalReport {
  RowInfo row;
  std::string split_kind;  // "random" or "temporal"
  AccuracySummary summary;
  std::optional<BinnedSeries> by_length;
  std::optional<UncertaintyCurve> by_uncertainty;
  std::vector<std::string> warnings;

  friend bool operator==(const EvalReport&, const EvalReport&) = default;
};

inline nlohmann::ordered_json optional_number(const std::optional<double>& v) {
  return v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json();
}

inline nlohmann::ordered_json to_json(const EvalReport& r) {
  nlohmann::ordered_json j;
  j["row"] = {{"section", r.row.section},
              {"model", r.row.model},
              {"text", r.row.text},
              {"party", r.row.party},
              {"policy", r.row.policy}};
  j["split_kind"] = r.split_kind;
  j["n"] = r.summary.n;
  j["correct"] = r.summary.correct;
  j["abstained"] = r.summary.abstained;
  j["accuracy"] = r.summary.accuracy();
  j["abstention_rate"] = r.summary.abstention_rate();
  auto& tags = j["per_model_tag"] = nlohmann::ordered_json::array();
  for (const auto& [tag, nc] : r.summary.per_model_tag)
    tags.push_back({{"model_tag", tag},
                    {"n", nc.first},
                    {"correct", nc.second},
                    {"accuracy", static_cast<double>(nc.second) / static_cast<double>(nc.first)}});
  if (r.by_length) {
    auto& b = j["by_speech_length"];
    b["quantity"] = r.by_length->quantity;
    b["edges"] = r.by_length->edges;
    b["out_of_range"] = r.by_length->out_of_range;
    b["bins"] = nlohmann::ordered_json::array();
    for (const auto& bin : r.by_length->bins)
      b["bins"].push_back({{"lo", bin.lo},
                           {"hi", bin.hi},
                           {"count", bin.count},
                           {"correct", bin.correct},
                           {"accuracy", optional_number(bin.accuracy())}});
  } else {
    j["by_speech_length"] = nullptr;
  }
  if (r.by_uncertainty) {
    const auto& c = *r.by_uncertainty;
    auto& u = j["by_prior_uncertainty"];
    u["bandwidth"] = c.bandwidth;
    u["robustness_iterations"] = c.robustness_iterations;
    u["min_cell_size"] = c.min_cell_size;
    u["excluded_groups"] = c.excluded_groups;
    u["warning"] = c.warning ? nlohmann::ordered_json(*c.warning) : nlohmann::ordered_json();
    u["points"] = nlohmann::ordered_json::array();
    for (const auto& p : c.points)
      u["points"].push_back({{"motion_party", p.motion_party},
                             {"speaker_party", p.speaker_party},
                             {"count", p.count},
                             {"x", p.x},
                             {"y", p.y},
                             {"fitted", optional_number(p.fitted)}});
  } else {
    j["by_prior_uncertainty"] = nullptr;
  }
  j["warnings"] = r.warnings;
  return j;
}

inline EvalReport report_from_json(const nlohmann::json& j) {
  EvalReport r;
  const auto& row = j.at("row");
  r.row = {row.at("section").get<std::string>(), row.at("model").get<std::string>(),
           row.at("text").get<bool>(), row.at("party").get<bool>(), row.at("policy").get<bool>()};
  r.split_kind = j.at("split_kind").get<std::string>();
  r.summary.n = j.at("n").get<std::size_t>();
  r.summary.correct = j.at("correct").get<std::size_t>();
  r.summary.abstained = j.at("abstained").get<std::size_t>();
  for (const auto& t : j.at("per_model_tag"))
    r.summary.per_model_tag[t.at("model_tag").get<std::string>()] = {
        t.at("n").get<std::size_t>(), t.at("correct").get<std::size_t>()};
  if (!j.at("by_speech_length").is_null()) {
    const auto& b = j.at("by_speech_length");
    BinnedSeries s;
    s.quantity = b.at("quantity").get<std::string>();
    s.edges = b.at("edges").get<std::vector<double>>();
    s.out_of_range = b.at("out_of_range").get<std::size_t>();
    for (const auto& bin : b.at("bins"))
      s.bins.push_back({bin.at("lo").get<double>(), bin.at("hi").get<double>(),
                        bin.at("count").get<std::size_t>(), bin.at("correct").get<std::size_t>()});
    r.by_length = std::move(s);
  }
  if (!j.at("by_prior_uncertainty").is_null()) {
    const auto& u = j.at("by_prior_uncertainty");
    UncertaintyCurve c;
    c.bandwidth = u.at("bandwidth").get<double>();
    c.robustness_iterations = u.at("robustness_iterations").get<std::size_t>();
    c.min_cell_size = u.at("min_cell_size").get<std::size_t>();
    c.excluded_groups = u.at("excluded_groups").get<std::size_t>();
    if (!u.at("warning").is_null()) c.warning = u.at("warning").get<std::string>();
    for (const auto& p : u.at("points")) {
      GroupPoint g;
      g.motion_party = p.at("motion_party").get<std::string>();
      g.speaker_party = p.at("speaker_party").get<std::string>();
      g.count = p.at("count").get<std::size_t>();
      g.x = p.at("x").get<double>();
      g.y = p.at("y").get<double>();
      if (!p.at("fitted").is_null()) g.fitted = p.at("fitted").get<double>();
      c.points.push_back(std::move(g));
    }
    r.by_uncertainty = std::move(c);
  }
  r.warnings = j.at("warnings").get<std::vector<std::string>>();
  return r;
}

}  // namespace parlstance::eval
