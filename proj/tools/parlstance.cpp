#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "parlstance/experiment.hpp"
#include "parlstance/version.hpp"

namespace {

constexpr int kExitFailure = 1;
constexpr int kExitUsage = 2;

int report_error(const std::string& kind, const std::string& message, int code) {
  nlohmann::ordered_json j;
  j["error"] = {{"kind", kind}, {"message", message}};
  std::cerr << j.dump() << std::endl;
  return code;
}

void print_artifacts(const std::vector<std::filesystem::path>& paths) {
  for (const auto& p : paths) std::cout << p.string() << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  using namespace parlstance;
  CLI::App app{"Stance detection experiments on parliamentary debates"};
  app.set_version_flag("--version", kToolVersion);
  app.require_subcommand(1);

  std::string config_path;
  std::vector<std::string> overrides;
  app.add_option("-c,--config", config_path, "Experiment config (JSON)")->required();
  app.add_option("--set", overrides, "Override a config value, e.g. --set split.seed=7")
      ->allow_extra_args(false);

  auto* ingest = app.add_subcommand("ingest", "Validate the raw corpus and write corpus.jsonl");
  auto* split = app.add_subcommand("split", "Write the train/validation/test assignment");
  auto* bayes = app.add_subcommand("bayes", "Party/policy Bayesian model");
  bayes->require_subcommand(1);
  auto* bayes_fit = bayes->add_subcommand("fit", "Fit the probability table on train");
  auto* bayes_predict = bayes->add_subcommand("predict", "Predict the test split");
  auto* prompt = app.add_subcommand("prompt", "Few-shot LLM evaluation");
  prompt->require_subcommand(1);
  auto* prompt_eval = prompt->add_subcommand("eval", "Prompt a chat-completion endpoint on the test split");
  auto* score = app.add_subcommand("score", "Score predictions against the test split");
  auto* report = app.add_subcommand("report", "Render the results table and plots");
  std::vector<std::string> inputs;
  std::vector<std::string> attention;
  report->add_option("inputs", inputs, "results.json files or run directories (default: this run)");
  report->add_option("--attention", attention, "Attention matrix JSON files to plot");
  auto* all = app.add_subcommand("all", "ingest, split, model, score and report in one go");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return report_error("usage_error", e.what(), kExitUsage);
  }

  experiment::ExperimentConfig cfg;
  try {
    cfg = experiment::load_config(config_path, overrides);
  } catch (const Error& e) {
    return report_error(e.kind(), e.what(), kExitUsage);
  }

  try {
    experiment::Runner runner(cfg);
    auto run_model = [&] {
      if (cfg.bayes) {
        print_artifacts(runner.bayes_fit());
        print_artifacts(runner.bayes_predict());
      } else if (cfg.prompt) {
        print_artifacts(runner.prompt_eval());
      }
    };
    if (*ingest) print_artifacts(runner.ingest());
    if (*split) print_artifacts(runner.split());
    if (*bayes_fit) print_artifacts(runner.bayes_fit());
    if (*bayes_predict) print_artifacts(runner.bayes_predict());
    if (*prompt_eval) print_artifacts(runner.prompt_eval());
    if (*score) print_artifacts(runner.score());
    if (*report) {
      std::vector<std::filesystem::path> in(inputs.begin(), inputs.end());
      std::vector<std::filesystem::path> att(attention.begin(), attention.end());
      print_artifacts(runner.report(in, att));
    }
    if (*all) {
      print_artifacts(runner.ingest());
      print_artifacts(runner.split());
      run_model();
      print_artifacts(runner.score());
      print_artifacts(runner.report({}));
    }
  } catch (const ConfigError& e) {
    return report_error(e.kind(), e.what(), kExitUsage);
  } catch (const Error& e) {
    return report_error(e.kind(), e.what(), kExitFailure);
  } catch (const std::exception& e) {
    return report_error("internal_error", e.what(), kExitFailure);
  }
  return 0;
}
