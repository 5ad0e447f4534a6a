#pragma once

#include <nlohmann/json.hpp>

#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "parlstance/corpus.hpp"
#include "parlstance/error.hpp"
#include "parlstance/rng.hpp"

namespace parlstance {

enum class SplitPart { train, validation, test };
enum class SplitKind { random, temporal };

inline const char* to_string(SplitPart p) {
  switch (p) {
    case SplitPart::train: return "train";
    case SplitPart::validation: return "validation";
    case SplitPart::test: return "test";
  }
  return "?";
}

inline const char* to_string(SplitKind k) { return k == SplitKind::random ? "random" : "temporal"; }

inline SplitPart split_part_from_string(const std::string& s) {
  if (s == "train") return SplitPart::train;
  if (s == "validation") return SplitPart::validation;
  if (s == "test") return SplitPart::test;
  throw ParseError("unknown split '" + s + "'");
}

inline SplitKind split_kind_from_string(const std::string& s) {
  if (s == "random") return SplitKind::random;
  if (s == "temporal") return SplitKind::temporal;
  throw ConfigError("unknown split kind '" + s + "'");
}

/// Partition of corpus ids into train / validation / test.
struct SplitAssignment {
  std::vector<std::pair<std::string, SplitPart>> split_of;  // corpus order
  std::uint64_t seed = 0;
  SplitKind kind = SplitKind::random;
  std::optional<Date> cutoff_date;

  std::array<std::size_t, 3> sizes() const {
    std::array<std::size_t, 3> s{0, 0, 0};
    for (const auto& [_, part] : split_of) ++s[static_cast<std::size_t>(part)];
    return s;
  }

  std::unordered_map<std::string, SplitPart> as_map() const {
    return {split_of.begin(), split_of.end()};
  }

  /// Identifier used to tag artifacts fitted on one part of this split.
  std::string tag(SplitPart part) const {
    std::string t = std::string(to_string(kind)) + ":seed=" + std::to_string(seed);
    if (cutoff_date) t += ":cutoff=" + cutoff_date->iso();
    return t + ":" + to_string(part);
  }

  friend bool operator==(const SplitAssignment&, const SplitAssignment&) = default;
};

/// Examples of `corpus` assigned to `part`, in corpus order.
inline std::vector<DebateExample> select_part(const Corpus& corpus, const SplitAssignment& split,
                                              SplitPart part) {
  auto parts = split.as_map();
  std::vector<DebateExample> out;
  for (const auto& ex : corpus.examples) {
    auto it = parts.find(ex.id);
    if (it == parts.end())
      throw IntegrityError("corpus id '" + ex.id + "' has no split assignment");
    if (it->second == part) out.push_back(ex);
  }
  return out;
}

namespace detail {
inline std::size_t floor_share(std::size_t n, double ratio) {
  // The small epsilon absorbs representation error in products such as
  // 10 * 0.3 whose exact value is an integer.
  return static_cast<std::size_t>(std::floor(static_cast<double>(n) * ratio + 1e-9));
}
}  // namespace detail

/// Uniform 3-way split. Validation and test receive floor(n * r) examples;
/// the remainder goes to train. The stable corpus order is shuffled by
/// SplitRng(seed), and the first positions of the permutation go to train,
/// then validation, then test.
inline SplitAssignment random_split(const Corpus& corpus, std::uint64_t seed,
                                    std::array<double, 3> ratios = {0.8, 0.1, 0.1}) {
  for (double r : ratios)
    if (!(r >= 0.0 && r <= 1.0)) throw ArgumentError("split ratios must lie in [0, 1]");
  if (std::abs(ratios[0] + ratios[1] + ratios[2] - 1.0) > 1e-9)
    throw ArgumentError("split ratios must sum to 1");
  if (corpus.empty()) throw ArgumentError("cannot split an empty corpus");

  const std::size_t n = corpus.size();
  const std::size_t n_val = detail::floor_share(n, ratios[1]);
  const std::size_t n_test = detail::floor_share(n, ratios[2]);
  const std::size_t n_train = n - n_val - n_test;

  SplitRng rng(seed);
  auto perm = rng.permutation(n);
  std::vector<SplitPart> part_of(n, SplitPart::train);
  for (std::size_t pos = 0; pos < n; ++pos) {
    SplitPart p = pos < n_train           ? SplitPart::train
                  : pos < n_train + n_val ? SplitPart::validation
                                          : SplitPart::test;
    part_of[perm[pos]] = p;
  }

  SplitAssignment out;
  out.seed = seed;
  out.kind = SplitKind::random;
  out.split_of.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.split_of.emplace_back(corpus.examples[i].id, part_of[i]);
  return out;
}

/// Train = every example dated on or before `cutoff`. The later tail is
/// shuffled by SplitRng(seed); floor(m * val_fraction_of_tail) of it goes to
/// validation, the rest to test.
inline SplitAssignment temporal_split(const Corpus& corpus, Date cutoff, std::uint64_t seed,
                                      double val_fraction_of_tail = 0.5) {
  if (!(val_fraction_of_tail >= 0.0 && val_fraction_of_tail <= 1.0))
    throw ArgumentError("val_fraction_of_tail must lie in [0, 1]");
  if (corpus.empty()) throw ArgumentError("cannot split an empty corpus");

  Date lo = corpus.examples.front().date;
  Date hi = lo;
  for (const auto& ex : corpus.examples) {
    lo = std::min(lo, ex.date);
    hi = std::max(hi, ex.date);
  }
  if (cutoff < lo || cutoff > hi)
    throw ArgumentError("cutoff " + cutoff.iso() + " outside corpus date range [" + lo.iso() +
                        ", " + hi.iso() + "]");

  std::unordered_map<std::string, bool> motion_in_train;
  std::vector<std::size_t> tail;
  std::vector<SplitPart> part_of(corpus.size(), SplitPart::train);
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    const auto& ex = corpus.examples[i];
    bool in_train = ex.date <= cutoff;
    auto [it, inserted] = motion_in_train.emplace(ex.motion_id, in_train);
    if (!inserted && it->second != in_train)
      throw IntegrityError("motion '" + ex.motion_id + "' has speeches on both sides of cutoff " +
                           cutoff.iso());
    if (!in_train) tail.push_back(i);
  }
  if (tail.empty())
    throw ArgumentError("no examples dated after cutoff " + cutoff.iso() + "; nothing to evaluate");

  SplitRng rng(seed);
  rng.shuffle(tail);
  const std::size_t n_val = detail::floor_share(tail.size(), val_fraction_of_tail);
  for (std::size_t pos = 0; pos < tail.size(); ++pos)
    part_of[tail[pos]] = pos < n_val ? SplitPart::validation : SplitPart::test;

  SplitAssignment out;
  out.seed = seed;
  out.kind = SplitKind::temporal;
  out.cutoff_date = cutoff;
  out.split_of.reserve(corpus.size());
  for (std::size_t i = 0; i < corpus.size(); ++i)
    out.split_of.emplace_back(corpus.examples[i].id, part_of[i]);
  return out;
}

/// JSON-lines body: one {"id", "split"} object per example, corpus order.
inline std::string to_jsonl(const SplitAssignment& split) {
  std::string out;
  for (const auto& [id, part] : split.split_of) {
    nlohmann::ordered_json j;
    j["id"] = id;
    j["split"] = to_string(part);
    out += j.dump();
    out += '\n';
  }
  return out;
}

inline nlohmann::ordered_json split_metadata(const SplitAssignment& split) {
  nlohmann::ordered_json j;
  j["kind"] = to_string(split.kind);
  j["seed"] = split.seed;
  j["cutoff_date"] = split.cutoff_date ? nlohmann::ordered_json(split.cutoff_date->iso())
                                       : nlohmann::ordered_json();
  auto s = split.sizes();
  j["sizes"] = {{"train", s[0]}, {"validation", s[1]}, {"test", s[2]}};
  return j;
}

inline SplitAssignment split_from_jsonl(const std::string& body, const nlohmann::json& meta) {
  SplitAssignment split;
  split.kind = split_kind_from_string(meta.at("kind").get<std::string>());
  split.seed = meta.at("seed").get<std::uint64_t>();
  if (meta.contains("cutoff_date") && !meta.at("cutoff_date").is_null())
    split.cutoff_date = Date::parse_iso_or_throw(meta.at("cutoff_date").get<std::string>());
  std::istringstream in(body);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto j = nlohmann::json::parse(line);
    split.split_of.emplace_back(j.at("id").get<std::string>(),
                                split_part_from_string(j.at("split").get<std::string>()));
  }
  return split;
}

}  // namespace parlstance
