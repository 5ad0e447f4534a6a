#pragma once

#include <nlohmann/json.hpp>

#include <cmath>
#include <compare>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "parlstance/corpus.hpp"
#include "parlstance/error.hpp"
#include "parlstance/prediction.hpp"
#include "parlstance/stats.hpp"

namespace parlstance::bayes {

/// Vote evidence for one cell. Votes are binary, so the multiset of observed
/// votes is exactly k ones and n - k zeros.
struct CountCell {
  std::size_t n = 0;
  std::size_t k = 0;

  void add(int vote) {
    ++n;
    if (vote == 1) ++k;
  }

  CountCell& operator+=(const CountCell& other) {
    n += other.n;
    k += other.k;
    return *this;
  }

  std::vector<int> votes() const {
    std::vector<int> v(n, 0);
    std::fill(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(k), 1);
    return v;
  }

  friend bool operator==(const CountCell&, const CountCell&) = default;
};

struct PartyKey {
  std::string motion_party;
  std::string speaker_party;
  friend auto operator<=>(const PartyKey&, const PartyKey&) = default;
};

struct PolicyKey {
  std::string motion_party;
  std::string speaker_party;
  std::string policy_id;
  friend auto operator<=>(const PolicyKey&, const PolicyKey&) = default;
};

struct TTestConfig {
  double alpha = 0.05;  // two-sided
  std::size_t min_n = 2;
  double zero_variance_epsilon = 1e-9;

  void validate() const {
    if (!(alpha > 0.0 && alpha < 1.0)) throw ArgumentError("t-test alpha must lie in (0, 1)");
    if (min_n < 2) throw ArgumentError("t-test min_n must be at least 2");
    if (!(zero_variance_epsilon >= 0.0))
      throw ArgumentError("zero_variance_epsilon must be nonnegative");
  }

  friend bool operator==(const TTestConfig&, const TTestConfig&) = default;
};

/// Raw counts per (motion party, speaker party) and per (motion party,
/// speaker party, policy). Estimates are never stored; they are computed
/// from the counts on demand.
struct ProbabilityTable {
  std::map<PartyKey, CountCell> party_cells;
  std::map<PolicyKey, CountCell> policy_cells;
  double smoothing_alpha = 1.0;
  TTestConfig ttest;
  std::string fitted_on;

  friend bool operator==(const ProbabilityTable&, const ProbabilityTable&) = default;
};

inline ProbabilityTable fit(std::span<const DebateExample> train, double smoothing_alpha = 1.0,
                            TTestConfig ttest = {}, std::string fitted_on = {}) {
  if (train.empty()) throw ArgumentError("cannot fit a probability table on an empty train set");
  if (!(smoothing_alpha >= 0.0)) throw ArgumentError("smoothing_alpha must be nonnegative");
  ttest.validate();
  ProbabilityTable table;
  table.smoothing_alpha = smoothing_alpha;
  table.ttest = ttest;
  table.fitted_on = std::move(fitted_on);
  for (const auto& ex : train) {
    table.party_cells[{ex.motion_party, ex.speaker_party}].add(ex.vote);
    if (ex.policy_id)
      table.policy_cells[{ex.motion_party, ex.speaker_party, *ex.policy_id}].add(ex.vote);
  }
  return table;
}

/// Add-alpha estimate (k + a) / (n + 2a). With a = 0 an empty cell has no
/// defined estimate and 0.5 is returned.
inline double smoothed(const CountCell& cell, double alpha) {
  double denom = static_cast<double>(cell.n) + 2.0 * alpha;
  if (denom == 0.0) return 0.5;
  return (static_cast<double>(cell.k) + alpha) / denom;
}

inline CountCell party_cell(const ProbabilityTable& table, const std::string& motion_party,
                            const std::string& speaker_party) {
  auto it = table.party_cells.find({motion_party, speaker_party});
  return it == table.party_cells.end() ? CountCell{} : it->second;
}

/// Pr(V = 1 | motion party, speaker party).
inline double estimate_party(const ProbabilityTable& table, const std::string& motion_party,
                             const std::string& speaker_party) {
  return smoothed(party_cell(table, motion_party, speaker_party), table.smoothing_alpha);
}

/// Outcome of the one-sample t-test of a policy cell's votes against the
/// party-level mean.
struct GateTest {
  bool reject = false;
  bool zero_variance = false;
  std::optional<double> t_statistic;
  std::optional<double> critical_value;
  std::size_t df = 0;
};

inline GateTest ttest_gate(const CountCell& policy, double party_mean, const TTestConfig& cfg) {
  GateTest out;
  if (policy.n < cfg.min_n || policy.n < 2) return out;
  out.df = policy.n - 1;
  auto sample = stats::bernoulli_sample(policy.n, policy.k);
  double diff = sample.mean - party_mean;
  if (sample.sd == 0.0) {
    out.zero_variance = true;
    out.reject = std::abs(diff) > cfg.zero_variance_epsilon;
    return out;
  }
  double t = diff / (sample.sd / std::sqrt(static_cast<double>(policy.n)));
  double crit = stats::student_t_critical(cfg.alpha, static_cast<double>(out.df));
  out.t_statistic = t;
  out.critical_value = crit;
  out.reject = std::abs(t) > crit;
  return out;
}

struct GatedEstimate {
  double probability = 0.5;
  bool used_policy = false;
  GateTest test;
};

/// Policy-level estimate when the policy cell deviates significantly from the
/// party estimate, otherwise the party estimate.
inline GatedEstimate estimate_gated(const ProbabilityTable& table, const std::string& motion_party,
                                    const std::string& speaker_party,
                                    const std::optional<std::string>& policy_id) {
  GatedEstimate out;
  out.probability = estimate_party(table, motion_party, speaker_party);
  if (!policy_id) return out;
  auto it = table.policy_cells.find({motion_party, speaker_party, *policy_id});
  if (it == table.policy_cells.end()) return out;
  out.test = ttest_gate(it->second, out.probability, table.ttest);
  if (out.test.reject) {
    out.probability = smoothed(it->second, table.smoothing_alpha);
    out.used_policy = true;
  }
  return out;
}

inline std::string model_tag(const ProbabilityTable& table, bool use_policy) {
  std::string tag = use_policy ? "bayes-party-policy" : "bayes-party";
  if (!table.fitted_on.empty()) tag += "@" + table.fitted_on;
  return tag;
}

inline PredictionRecord predict(const ProbabilityTable& table, const DebateExample& example,
                                bool use_policy) {
  PredictionRecord rec;
  rec.id = example.id;
  rec.probability =
      use_policy
          ? estimate_gated(table, example.motion_party, example.speaker_party, example.policy_id)
                .probability
          : estimate_party(table, example.motion_party, example.speaker_party);
  rec.label = label_for(rec.probability);
  rec.model_tag = model_tag(table, use_policy);
  return rec;
}

inline std::vector<PredictionRecord> predict_all(const ProbabilityTable& table,
                                                 std::span<const DebateExample> examples,
                                                 bool use_policy) {
  std::vector<PredictionRecord> out;
  out.reserve(examples.size());
  for (const auto& ex : examples) out.push_back(predict(table, ex, use_policy));
  return out;
}

inline nlohmann::ordered_json to_json(const ProbabilityTable& table) {
  nlohmann::ordered_json j;
  j["format"] = "parlstance.probability_table";
  j["version"] = 1;
  j["fitted_on"] = table.fitted_on;
  j["smoothing_alpha"] = table.smoothing_alpha;
  j["ttest"] = {{"alpha", table.ttest.alpha},
                {"min_n", table.ttest.min_n},
                {"zero_variance_epsilon", table.ttest.zero_variance_epsilon}};
  auto& party = j["party_cells"] = nlohmann::ordered_json::array();
  for (const auto& [key, cell] : table.party_cells)
    party.push_back({{"motion_party", key.motion_party},
                     {"speaker_party", key.speaker_party},
                     {"n", cell.n},
                     {"k", cell.k}});
  auto& policy = j["policy_cells"] = nlohmann::ordered_json::array();
  for (const auto& [key, cell] : table.policy_cells)
    policy.push_back({{"motion_party", key.motion_party},
                      {"speaker_party", key.speaker_party},
                      {"policy_id", key.policy_id},
                      {"n", cell.n},
                      {"k", cell.k}});
  return j;
}

inline ProbabilityTable table_from_json(const nlohmann::json& j) {
  if (j.value("format", std::string()) != "parlstance.probability_table")
    throw ParseError("not a probability table document");
  ProbabilityTable t;
  t.fitted_on = j.value("fitted_on", std::string());
  t.smoothing_alpha = j.at("smoothing_alpha").get<double>();
  const auto& tt = j.at("ttest");
  t.ttest.alpha = tt.at("alpha").get<double>();
  t.ttest.min_n = tt.at("min_n").get<std::size_t>();
  t.ttest.zero_variance_epsilon = tt.at("zero_variance_epsilon").get<double>();
  t.ttest.validate();
  auto read_cell = [](const nlohmann::json& c) {
    CountCell cell{c.at("n").get<std::size_t>(), c.at("k").get<std::size_t>()};
    if (cell.k > cell.n) throw ParseError("count cell has k > n");
    return cell;
  };
  for (const auto& c : j.at("party_cells"))
    t.party_cells[{c.at("motion_party").get<std::string>(),
                   c.at("speaker_party").get<std::string>()}] = read_cell(c);
  for (const auto& c : j.at("policy_cells")) {
    PolicyKey key{c.at("motion_party").get<std::string>(), c.at("speaker_party").get<std::string>(),
                  c.at("policy_id").get<std::string>()};
    auto cell = read_cell(c);
    auto party = t.party_cells.find({key.motion_party, key.speaker_party});
    if (party == t.party_cells.end() || party->second.n < cell.n)
      throw ParseError("policy cell (" + key.motion_party + ", " + key.speaker_party + ", " +
                       key.policy_id + ") exceeds its party cell");
    t.policy_cells[key] = cell;
  }
  return t;
}

}  // namespace parlstance::bayes
