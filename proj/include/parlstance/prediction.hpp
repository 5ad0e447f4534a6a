#pragma once

#include <nlohmann/json.hpp>

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "parlstance/error.hpp"
#include "parlstance/hash.hpp"

namespace parlstance {

/// The interchange unit between model components and the scorer.
struct PredictionRecord {
  std::string id;
  double probability = 0.0;
  int label = 0;
  std::string model_tag;
  bool abstained = false;

  friend bool operator==(const PredictionRecord&, const PredictionRecord&) = default;
};

/// Hard label for a probability. Exactly 0.5 maps to 1.
inline int label_for(double probability) { return probability >= 0.5 ? 1 : 0; }

inline nlohmann::ordered_json to_json(const PredictionRecord& p) {
  nlohmann::ordered_json j;
  j["id"] = p.id;
  j["probability"] = p.probability;
  j["label"] = p.label;
  j["model_tag"] = p.model_tag;
  j["abstained"] = p.abstained;
  return j;
}

inline PredictionRecord prediction_from_json(const nlohmann::json& j) {
  PredictionRecord p;
  p.id = j.at("id").get<std::string>();
  p.probability = j.at("probability").get<double>();
  p.label = j.at("label").get<int>();
  p.model_tag = j.value("model_tag", std::string());
  p.abstained = j.value("abstained", false);
  if (!(p.probability >= 0.0 && p.probability <= 1.0))
    throw ParseError("prediction '" + p.id + "' has probability outside [0, 1]");
  if (p.label != 0 && p.label != 1)
    throw ParseError("prediction '" + p.id + "' has label outside {0, 1}");
  if (!p.abstained && p.label != label_for(p.probability))
    throw ParseError("prediction '" + p.id + "' label disagrees with its probability");
  return p;
}

inline std::string to_jsonl(const std::vector<PredictionRecord>& preds) {
  std::string out;
  for (const auto& p : preds) {
    out += to_json(p).dump();
    out += '\n';
  }
  return out;
}

inline std::vector<PredictionRecord> read_predictions(const std::string& path) {
  std::istringstream in(read_file(path));
  std::vector<PredictionRecord> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    try {
      out.push_back(prediction_from_json(nlohmann::json::parse(line)));
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(path + ":" + std::to_string(line_no) + ": " + e.what());
    } catch (const ParseError& e) {
      throw ParseError(path + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace parlstance
