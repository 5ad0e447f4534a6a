#pragma once

#include <string>
#include <vector>

#include "parlstance/hash.hpp"
#include "parlstance/prompt.hpp"
#include "support/synthetic.hpp"

// The fixed example and six shots behind tests/golden/*.txt.
namespace parlstance::testkit {

inline std::string golden(const std::string& name) {
  return read_file(std::string(PARLSTANCE_TEST_DATA) + "/golden/" + name);
}

inline DebateExample query_example() {
  auto ex = make_example("golden-1", "Labour", "Conservative", 1, "european-union-negative");
  ex.motion_text = "That this House calls on the Government to publish the treaty text before ratification.";
  ex.speech_text = "The Minister has had months to do this. Publish it, and let the House decide.";
  return ex;
}

inline std::vector<DebateExample> golden_shot_examples() {
  struct Row { const char *mp, *sp, *pol, *m, *s; int v; };
  const Row rows[] = {
      {"Labour", "Labour", "welfare-positive", "That this House regrets the cuts.", "We regret them deeply.", 1},
      {"Labour", "Conservative", "welfare-positive", "That this House regrets the cuts.", "The cuts were necessary.", 0},
      {"Conservative", "SNP", "scotland-positive", "That this House approves the settlement.",
       "Scotland deserves better than this.", 0},
      {"Conservative", "Labour", "defence-positive", "That this House supports the deployment.",
       "On this we stand with the Government.", 1},
      {"Liberal Democrat", "Liberal Democrat", "civil-liberties-positive", "That this House opposes the database.",
       "Our liberties matter.", 1},
      {"Conservative", "Conservative", "economy-positive", "That this House approves the Budget.",
       "I cannot in conscience vote for this Budget.", 0},
  };
  std::vector<DebateExample> out;
  int i = 0;
  for (const auto& r : rows) {
    auto ex = make_example("shot" + std::to_string(i++), r.mp, r.sp, r.v, std::string(r.pol));
    ex.motion_text = r.m;
    ex.speech_text = r.s;
    out.push_back(ex);
  }
  return out;
}

inline std::vector<prompt::FewShotExample> golden_shots(const prompt::PromptFlags& flags) {
  std::vector<prompt::FewShotExample> shots;
  for (const auto& ex : golden_shot_examples())
    shots.push_back({ex.id, prompt::render_shot(ex, flags, 400), ex.vote, prompt::ChallengeTag::plain, flags});
  return shots;
}

}  // namespace parlstance::testkit
