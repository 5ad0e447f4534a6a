#pragma once

#include <nlohmann/json.hpp>

#include <algorithm>
#include <array>
#include <cctype>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "parlstance/bayes.hpp"
#include "parlstance/corpus.hpp"
#include "parlstance/error.hpp"
#include "parlstance/rng.hpp"

namespace parlstance::prompt {

struct PromptFlags {
  bool include_party = false;
  bool include_policy = false;

  void validate() const {
    if (include_policy && !include_party)
      throw BuildError("policy metadata requires party metadata");
  }

  friend bool operator==(const PromptFlags&, const PromptFlags&) = default;
};

/// Prompt wording. The defaults are the reference stance prompts; every part
/// can be overridden from a JSON document with the same keys.
struct PromptTemplates {
  std::string system =
      "You are a classification model that is really good at following instructions and "
      "produces brief answers that users can use as data right away. Please follow the user's "
      "instruction as precisely as you can.";
  // sic: "suppor" is kept from the reference zero-shot prompt.
  std::string zero_shot_instruction =
      "You will be presented with a motion and a speech from different representatives in the "
      "UK Parliament. Your task is to classify whether the speech supports or does not suppor "
      "the motion. Please respond with a 0 if the speech does not support the motion and a 1 if "
      "the speech does support the motion.";
  std::string few_shot_instruction =
      "You will be presented with a motion and a speech from different representatives in the "
      "UK Parliament. Your task is to classify whether the speech supports or does not support "
      "the motion. Please respond with a 0 if the speech does not support the motion and a 1 if "
      "the speech does support the motion.";
  std::string few_shot_examples_intro =
      "Here are some examples, where you are presented the motion, then the speech, and finally "
      "the correct answer which is either a 0 or a 1:";
  std::string few_shot_query_intro =
      "Now, please classify the following motion and speech with a 0 if the speech does not "
      "support the motion and a 1 if the speech does support the motion.";

  static PromptTemplates from_json(const nlohmann::json& j) {
    PromptTemplates t;
    t.system = j.value("system", t.system);
    t.zero_shot_instruction = j.value("zero_shot_instruction", t.zero_shot_instruction);
    t.few_shot_instruction = j.value("few_shot_instruction", t.few_shot_instruction);
    t.few_shot_examples_intro = j.value("few_shot_examples_intro", t.few_shot_examples_intro);
    t.few_shot_query_intro = j.value("few_shot_query_intro", t.few_shot_query_intro);
    return t;
  }
};

enum class ChallengeTag { intra_party_disagreement, inter_party_agreement, minority_party, plain };

inline const char* to_string(ChallengeTag t) {
  switch (t) {
    case ChallengeTag::intra_party_disagreement: return "intra_party_disagreement";
    case ChallengeTag::inter_party_agreement: return "inter_party_agreement";
    case ChallengeTag::minority_party: return "minority_party";
    case ChallengeTag::plain: return "plain";
  }
  return "?";
}

struct FewShotExample {
  std::string example_id;
  std::string rendered_text;
  int label = 0;
  ChallengeTag challenge_tag = ChallengeTag::plain;
  PromptFlags flags;

  friend bool operator==(const FewShotExample&, const FewShotExample&) = default;
};

struct PromptBundle {
  std::string system_text;
  std::string user_text;
  PromptFlags metadata_flags;
  std::vector<FewShotExample> shots;

  friend bool operator==(const PromptBundle&, const PromptBundle&) = default;
};

/// Keeps the first `max_words` whitespace-delimited words of `text`,
/// preserving the original spacing between them.
inline std::string truncate_words(std::string_view text, std::size_t max_words) {
  std::size_t words = 0;
  bool in_word = false;
  for (std::size_t i = 0; i < text.size(); ++i) {
    bool space = std::isspace(static_cast<unsigned char>(text[i])) != 0;
    if (!space && !in_word) {
      if (words == max_words) {
        std::size_t end = i;
        while (end > 0 && std::isspace(static_cast<unsigned char>(text[end - 1]))) --end;
        return std::string(text.substr(0, end));
      }
      ++words;
    }
    in_word = !space;
  }
  return std::string(text);
}

/// "Party of Motion / Party of Speech / Policy" block, or nullopt when the
/// flags request no metadata.
inline std::optional<std::string> metadata_block(const DebateExample& ex, const PromptFlags& flags) {
  flags.validate();
  if (!flags.include_party) return std::nullopt;
  std::string block = "Party of Motion: " + ex.motion_party + "\n\nParty of Speech: " +
                      ex.speaker_party;
  if (flags.include_policy) {
    if (!ex.policy_id)
      throw BuildError("example '" + ex.id + "' has no policy_id but policy metadata is enabled");
    block += "\n\nPolicy: " + *ex.policy_id;
  }
  return block;
}

/// Metadata (optional), motion and speech, separated by blank lines.
inline std::string render_case(const DebateExample& ex, const PromptFlags& flags,
                               std::string_view speech) {
  std::string out;
  if (auto meta = metadata_block(ex, flags)) out += *meta + "\n\n";
  out += "Motion: " + ex.motion_text + "\n\nSpeech: ";
  out += speech;
  return out;
}

inline std::string render_shot(const DebateExample& ex, const PromptFlags& flags,
                               std::size_t word_budget) {
  return render_case(ex, flags, truncate_words(ex.speech_text, word_budget)) +
         "\n\nCorrect Answer: " + std::to_string(ex.vote);
}

struct ShotOptions {
  PromptFlags flags;
  std::size_t word_budget = 400;
};

/// Which challenge categories an example falls into.
class ChallengeDetector {
public:
  ChallengeDetector(std::span<const DebateExample> train, const bayes::ProbabilityTable& table)
      : table_(table) {
    std::map<std::string, std::size_t> freq;
    for (const auto& ex : train) ++freq[ex.speaker_party];
    std::vector<std::pair<std::string, std::size_t>> ranked(freq.begin(), freq.end());
    // Most frequent first; ties broken by name so the result is stable.
    std::stable_sort(ranked.begin(), ranked.end(),
                     [](const auto& a, const auto& b) { return a.second > b.second; });
    for (std::size_t i = 0; i < ranked.size() && i < 2; ++i) major_.push_back(ranked[i].first);
  }

  /// Speaker votes against the majority direction of their party-pair cell.
  bool intra_party_disagreement(const DebateExample& ex) const {
    double p = bayes::estimate_party(table_, ex.motion_party, ex.speaker_party);
    return ex.vote != (p >= 0.5 ? 1 : 0);
  }

  /// Speaker from a different party than the motion's votes for it.
  bool inter_party_agreement(const DebateExample& ex) const {
    return ex.speaker_party != ex.motion_party && ex.vote == 1;
  }

  /// Speaker party outside the two most frequent parties in train.
  bool minority_party(const DebateExample& ex) const {
    return std::find(major_.begin(), major_.end(), ex.speaker_party) == major_.end();
  }

  bool matches(const DebateExample& ex, ChallengeTag tag) const {
    switch (tag) {
      case ChallengeTag::intra_party_disagreement: return intra_party_disagreement(ex);
      case ChallengeTag::inter_party_agreement: return inter_party_agreement(ex);
      case ChallengeTag::minority_party: return minority_party(ex);
      case ChallengeTag::plain: return true;
    }
    return false;
  }

  ChallengeTag primary_tag(const DebateExample& ex) const {
    for (auto tag : kChallenges)
      if (matches(ex, tag)) return tag;
    return ChallengeTag::plain;
  }

  static constexpr std::array<ChallengeTag, 3> kChallenges = {
      ChallengeTag::intra_party_disagreement, ChallengeTag::inter_party_agreement,
      ChallengeTag::minority_party};

private:
  const bayes::ProbabilityTable& table_;
  std::vector<std::string> major_;
};

/// Picks six training examples, three per label, covering every challenge
/// category at least once. Candidates are visited in a SplitRng(seed)
/// permutation of `train`; the returned shots keep that visiting order.
inline std::vector<FewShotExample> select_shots(std::span<const DebateExample> train,
                                                const bayes::ProbabilityTable& table,
                                                std::uint64_t seed, const ShotOptions& options = {}) {
  options.flags.validate();
  constexpr std::size_t kPerLabel = 3;
  std::array<std::size_t, 2> label_counts{0, 0};
  for (const auto& ex : train) ++label_counts[static_cast<std::size_t>(ex.vote)];
  if (label_counts[0] < kPerLabel || label_counts[1] < kPerLabel)
    throw SelectionError("train needs at least 3 examples of each label (has " +
                         std::to_string(label_counts[0]) + " with label 0, " +
                         std::to_string(label_counts[1]) + " with label 1)");

  ChallengeDetector detector(train, table);
  SplitRng rng(seed);
  auto order = rng.permutation(train.size());

  std::array<std::vector<std::size_t>, 3> candidates;  // ranks into `order`
  for (std::size_t rank = 0; rank < order.size(); ++rank)
    for (std::size_t c = 0; c < 3; ++c)
      if (detector.matches(train[order[rank]], ChallengeDetector::kChallenges[c]))
        candidates[c].push_back(rank);
  for (std::size_t c = 0; c < 3; ++c)
    if (candidates[c].empty())
      throw SelectionError(std::string("no training example for challenge category ") +
                           to_string(ChallengeDetector::kChallenges[c]));

  // Cover the scarcest category first, backtracking if two categories
  // compete for the same example.
  std::array<std::size_t, 3> cat_order{0, 1, 2};
  std::stable_sort(cat_order.begin(), cat_order.end(), [&](std::size_t a, std::size_t b) {
    return candidates[a].size() < candidates[b].size();
  });
  std::array<std::size_t, 3> chosen{};
  auto used = [&](std::size_t depth, std::size_t rank) {
    for (std::size_t d = 0; d < depth; ++d)
      if (chosen[d] == rank) return true;
    return false;
  };
  auto cover = [&](auto&& self, std::size_t depth) -> bool {
    if (depth == 3) return true;
    for (std::size_t rank : candidates[cat_order[depth]]) {
      if (used(depth, rank)) continue;
      chosen[depth] = rank;
      if (self(self, depth + 1)) return true;
    }
    return false;
  };
  if (!cover(cover, 0))
    throw SelectionError("challenge categories cannot be covered by distinct examples");

  std::map<std::size_t, ChallengeTag> picked;  // rank -> tag
  std::array<std::size_t, 2> per_label{0, 0};
  for (std::size_t d = 0; d < 3; ++d) {
    picked[chosen[d]] = ChallengeDetector::kChallenges[cat_order[d]];
    ++per_label[static_cast<std::size_t>(train[order[chosen[d]]].vote)];
  }
  for (std::size_t rank = 0; rank < order.size() && picked.size() < 2 * kPerLabel; ++rank) {
    if (picked.count(rank)) continue;
    auto label = static_cast<std::size_t>(train[order[rank]].vote);
    if (per_label[label] >= kPerLabel) continue;
    ++per_label[label];
    picked[rank] = detector.primary_tag(train[order[rank]]);
  }

  std::vector<FewShotExample> shots;
  for (const auto& [rank, tag] : picked) {
    const auto& ex = train[order[rank]];
    shots.push_back({ex.id, render_shot(ex, options.flags, options.word_budget), ex.vote, tag,
                     options.flags});
  }
  return shots;
}

inline PromptBundle build_prompt(const DebateExample& example,
                                 const std::vector<FewShotExample>& shots, const PromptFlags& flags,
                                 const PromptTemplates& templates = {}) {
  flags.validate();
  if (!shots.empty() && shots.size() != 6)
    throw BuildError("a prompt takes 0 or 6 shots, got " + std::to_string(shots.size()));
  for (const auto& s : shots)
    if (!(s.flags == flags))
      throw BuildError("shot '" + s.example_id + "' was rendered with different metadata flags");

  PromptBundle bundle;
  bundle.system_text = templates.system;
  bundle.metadata_flags = flags;
  bundle.shots = shots;
  std::string query = render_case(example, flags, example.speech_text);
  if (shots.empty()) {
    bundle.user_text = templates.zero_shot_instruction + "\n\n" + query;
  } else {
    std::string text = templates.few_shot_instruction + "\n\n" + templates.few_shot_examples_intro;
    for (const auto& s : shots) text += "\n\n" + s.rendered_text;
    text += "\n\n" + templates.few_shot_query_intro + "\n\n" + query;
    bundle.user_text = std::move(text);
  }
  return bundle;
}

/// First standalone 0 or 1 in the response, i.e. a '0' or '1' character
/// with no digit immediately before or after it. nullopt means abstention.
inline std::optional<int> try_parse_response(std::string_view raw) {
  auto is_digit = [](char c) { return c >= '0' && c <= '9'; };
  for (std::size_t i = 0; i < raw.size(); ++i) {
    char c = raw[i];
    if (c != '0' && c != '1') continue;
    bool before = i > 0 && is_digit(raw[i - 1]);
    bool after = i + 1 < raw.size() && is_digit(raw[i + 1]);
    if (!before && !after) return c - '0';
  }
  return std::nullopt;
}

inline int parse_response(std::string_view raw) {
  auto label = try_parse_response(raw);
  if (!label) throw ParseError("no standalone 0 or 1 in response");
  return *label;
}

}  // namespace parlstance::prompt
