#pragma once

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cctype>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "parlstance/csv.hpp"
#include "parlstance/date.hpp"
#include "parlstance/error.hpp"
#include "parlstance/hash.hpp"

namespace parlstance {

/// One speech given in response to a motion, labelled by the speaker's vote
/// (1 = voted for the motion).
struct DebateExample {
  std::string id;
  std::string motion_text;
  std::string speech_text;
  int vote = 0;
  std::string speaker_party;
  std::string motion_party;
  std::optional<std::string> policy_id;
  std::string motion_id;
  std::string speaker_id;
  Date date;

  friend bool operator==(const DebateExample&, const DebateExample&) = default;
};

struct Provenance {
  std::string source_path;
  std::string ingested_at;  // ISO 8601, UTC
};

struct Corpus {
  std::vector<DebateExample> examples;
  Provenance provenance;

  std::size_t size() const { return examples.size(); }
  bool empty() const { return examples.empty(); }

  /// Equality ignores the ingestion timestamp: two loads of the same file
  /// compare equal.
  friend bool operator==(const Corpus& a, const Corpus& b) {
    return a.examples == b.examples && a.provenance.source_path == b.provenance.source_path;
  }
};

struct Rejection {
  std::size_t line = 0;  // 1-based source line of the record
  std::string id;        // may be empty when the id itself was unreadable
  std::string reason;

  friend bool operator==(const Rejection&, const Rejection&) = default;
};

struct RejectionReport {
  std::vector<Rejection> rows;

  std::size_t count() const { return rows.size(); }
  friend bool operator==(const RejectionReport&, const RejectionReport&) = default;
};

struct IngestResult {
  Corpus corpus;
  RejectionReport rejections;
};

enum class SourceFormat { delimited, jsonl };

/// Where each DebateExample field lives in a raw export, and how to decode
/// the date and vote columns.
struct ColumnMapping {
  SourceFormat format = SourceFormat::delimited;
  char delimiter = ',';
  std::map<std::string, std::string> columns;  // DebateExample field -> source column
  std::string date_format = "%Y-%m-%d";
  std::map<std::string, int> vote_values = {{"0", 0}, {"1", 1}};

  static const std::vector<std::string>& required_fields() {
    static const std::vector<std::string> fields = {
        "id",           "motion_text", "speech_text", "vote",    "speaker_party",
        "motion_party", "motion_id",   "speaker_id",  "date"};
    return fields;
  }

  /// Identity mapping for the canonical JSON-lines corpus this library writes.
  static ColumnMapping canonical() {
    ColumnMapping m;
    m.format = SourceFormat::jsonl;
    for (const auto& f : required_fields()) m.columns[f] = f;
    m.columns["policy_id"] = "policy_id";
    return m;
  }

  std::optional<std::string> column_for(const std::string& field) const {
    auto it = columns.find(field);
    if (it == columns.end()) return std::nullopt;
    return it->second;
  }

  void validate() const {
    for (const auto& f : required_fields()) {
      auto it = columns.find(f);
      if (it == columns.end() || it->second.empty())
        throw SchemaError("column mapping has no source column for field '" + f + "'");
    }
    for (const auto& [field, _] : columns) {
      if (field != "policy_id" &&
          std::find(required_fields().begin(), required_fields().end(), field) ==
              required_fields().end())
        throw SchemaError("column mapping names unknown field '" + field + "'");
    }
    if (vote_values.empty()) throw SchemaError("vote mapping is empty");
    for (const auto& [token, value] : vote_values)
      if (value != 0 && value != 1)
        throw SchemaError("vote token '" + token + "' maps to " + std::to_string(value) +
                          ", expected 0 or 1");
    if (format == SourceFormat::delimited && (delimiter == '"' || delimiter == '\n'))
      throw SchemaError("invalid delimiter");
  }

  /// Reads a mapping from its JSON configuration form:
  ///   {"format": "csv"|"tsv"|"jsonl", "delimiter": ",", "columns": {...},
  ///    "date_format": "%d/%m/%Y", "vote_values": {"aye": 1, "no": 0}}
  static ColumnMapping from_json(const nlohmann::json& j) {
    ColumnMapping m;
    std::string format = j.value("format", std::string("csv"));
    if (format == "csv") {
      m.format = SourceFormat::delimited;
      m.delimiter = ',';
    } else if (format == "tsv") {
      m.format = SourceFormat::delimited;
      m.delimiter = '\t';
    } else if (format == "jsonl") {
      m.format = SourceFormat::jsonl;
    } else {
      throw SchemaError("unknown corpus format '" + format + "'");
    }
    if (j.contains("delimiter")) {
      auto d = j.at("delimiter").get<std::string>();
      if (d.size() != 1) throw SchemaError("delimiter must be a single character");
      m.delimiter = d[0];
    }
    if (!j.contains("columns")) throw SchemaError("column mapping lacks 'columns'");
    for (const auto& [field, column] : j.at("columns").items())
      m.columns[field] = column.get<std::string>();
    m.date_format = j.value("date_format", m.date_format);
    if (j.contains("vote_values")) {
      m.vote_values.clear();
      for (const auto& [token, value] : j.at("vote_values").items())
        m.vote_values[token] = value.get<int>();
    }
    m.validate();
    return m;
  }
};

namespace detail {

inline std::string trim(std::string_view s) {
  auto is_space = [](unsigned char c) { return std::isspace(c) != 0; };
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && is_space(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && is_space(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

inline std::string utc_now_iso() {
  auto now = std::chrono::floor<std::chrono::seconds>(std::chrono::system_clock::now());
  auto days = std::chrono::floor<std::chrono::days>(now);
  std::chrono::year_month_day ymd{days};
  std::chrono::hh_mm_ss hms{now - days};
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:%02d:%02dZ",
                static_cast<int>(ymd.year()), static_cast<unsigned>(ymd.month()),
                static_cast<unsigned>(ymd.day()), static_cast<int>(hms.hours().count()),
                static_cast<int>(hms.minutes().count()),
                static_cast<int>(hms.seconds().count()));
  return buf;
}

/// Raw record: field name -> cell text, or nullopt when the cell is absent.
using RawRecord = std::map<std::string, std::optional<std::string>>;

struct MotionSignature {
  std::string motion_text;
  std::string motion_party;
  std::optional<std::string> policy_id;
  Date date;
  friend bool operator==(const MotionSignature&, const MotionSignature&) = default;
};

}  // namespace detail

/// Validates and converts raw records. Rows that fail validation land in the
/// rejection report with a reason; duplicate ids abort ingestion.
inline IngestResult ingest_records(const std::vector<std::pair<std::size_t, detail::RawRecord>>& records,
                                   const ColumnMapping& mapping, const std::string& source_path) {
  IngestResult result;
  result.corpus.provenance = {source_path, detail::utc_now_iso()};
  std::unordered_map<std::string, detail::MotionSignature> motions;
  std::unordered_map<std::string, std::size_t> seen_ids;
  std::set<std::string> duplicates;

  for (const auto& [line, rec] : records) {
    auto cell = [&](const std::string& field) -> std::optional<std::string> {
      auto it = rec.find(field);
      if (it == rec.end()) return std::nullopt;
      return it->second;
    };
    auto reject = [&](std::string id, std::string reason) {
      result.rejections.rows.push_back({line, std::move(id), std::move(reason)});
    };

    if (auto err = cell("__error__")) {
      reject("", *err);
      continue;
    }
    DebateExample ex;
    std::string missing;
    for (const auto& f : ColumnMapping::required_fields()) {
      if (!cell(f)) {
        missing = f;
        break;
      }
    }
    std::string raw_id = cell("id").value_or("");
    if (!missing.empty()) {
      reject(raw_id, "missing value for field '" + missing + "'");
      continue;
    }
    ex.id = detail::trim(*cell("id"));
    if (ex.id.empty()) {
      reject(raw_id, "empty id");
      continue;
    }
    ex.motion_text = *cell("motion_text");
    ex.speech_text = *cell("speech_text");
    if (detail::trim(ex.motion_text).empty()) {
      reject(ex.id, "motion_text is empty");
      continue;
    }
    if (detail::trim(ex.speech_text).empty()) {
      reject(ex.id, "speech_text is empty");
      continue;
    }
    std::string vote_token = detail::trim(*cell("vote"));
    auto vote_it = mapping.vote_values.find(vote_token);
    if (vote_it == mapping.vote_values.end()) {
      reject(ex.id, "unmappable vote token '" + vote_token + "'");
      continue;
    }
    ex.vote = vote_it->second;
    ex.speaker_party = detail::trim(*cell("speaker_party"));
    ex.motion_party = detail::trim(*cell("motion_party"));
    if (ex.speaker_party.empty() || ex.motion_party.empty()) {
      reject(ex.id, "empty party");
      continue;
    }
    if (auto policy = cell("policy_id")) {
      auto trimmed = detail::trim(*policy);
      if (!trimmed.empty()) ex.policy_id = trimmed;
    }
    ex.motion_id = detail::trim(*cell("motion_id"));
    ex.speaker_id = detail::trim(*cell("speaker_id"));
    if (ex.motion_id.empty()) {
      reject(ex.id, "empty motion_id");
      continue;
    }
    std::string date_text = detail::trim(*cell("date"));
    auto date = Date::parse(date_text, mapping.date_format);
    if (!date) {
      reject(ex.id, "unparseable date '" + date_text + "' for format '" + mapping.date_format + "'");
      continue;
    }
    ex.date = *date;

    detail::MotionSignature sig{ex.motion_text, ex.motion_party, ex.policy_id, ex.date};
    auto [motion_it, inserted] = motions.emplace(ex.motion_id, sig);
    if (!inserted && !(motion_it->second == sig)) {
      reject(ex.id, "motion '" + ex.motion_id + "' metadata differs from its first occurrence");
      continue;
    }
    if (seen_ids.count(ex.id)) {
      duplicates.insert(ex.id);
      continue;
    }
    seen_ids.emplace(ex.id, result.corpus.examples.size());
    result.corpus.examples.push_back(std::move(ex));
  }

  if (!duplicates.empty()) {
    std::string list;
    for (const auto& d : duplicates) list += (list.empty() ? "" : ", ") + d;
    throw IngestionError("duplicate example ids: " + list);
  }
  return result;
}

inline IngestResult load_corpus(const std::string& path, const ColumnMapping& mapping) {
  mapping.validate();
  if (!std::filesystem::exists(path)) throw IoError("corpus file '" + path + "' does not exist");
  std::string text = read_file(path);
  std::vector<std::pair<std::size_t, detail::RawRecord>> records;

  if (mapping.format == SourceFormat::delimited) {
    std::vector<std::size_t> lines;
    auto rows = csv::parse(text, mapping.delimiter, &lines);
    if (rows.empty()) throw SchemaError("corpus file '" + path + "' has no header row");
    const auto& header = rows.front();
    std::map<std::string, std::size_t> field_index;
    for (const auto& [field, column] : mapping.columns) {
      auto it = std::find(header.begin(), header.end(), column);
      if (it == header.end()) {
        if (field == "policy_id") continue;
        throw SchemaError("source column '" + column + "' (field '" + field +
                          "') not found in header");
      }
      field_index[field] = static_cast<std::size_t>(it - header.begin());
    }
    for (std::size_t r = 1; r < rows.size(); ++r) {
      detail::RawRecord rec;
      for (const auto& [field, idx] : field_index) {
        if (idx < rows[r].size())
          rec[field] = rows[r][idx];
        else
          rec[field] = std::nullopt;
      }
      records.emplace_back(lines[r], std::move(rec));
    }
  } else {
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    bool checked_schema = false;
    while (std::getline(in, line)) {
      ++line_no;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (detail::trim(line).empty()) continue;
      nlohmann::json obj;
      try {
        obj = nlohmann::json::parse(line);
      } catch (const nlohmann::json::parse_error& e) {
        records.emplace_back(line_no, detail::RawRecord{{"__error__", "malformed JSON line"}});
        continue;
      }
      if (!obj.is_object()) {
        records.emplace_back(line_no, detail::RawRecord{{"__error__", "record is not a JSON object"}});
        continue;
      }
      if (!checked_schema) {
        for (const auto& f : ColumnMapping::required_fields()) {
          const auto& column = mapping.columns.at(f);
          if (!obj.contains(column))
            throw SchemaError("source key '" + column + "' (field '" + f +
                              "') not found in first record");
        }
        checked_schema = true;
      }
      detail::RawRecord rec;
      for (const auto& [field, column] : mapping.columns) {
        if (!obj.contains(column) || obj.at(column).is_null()) {
          rec[field] = std::nullopt;
        } else if (obj.at(column).is_string()) {
          rec[field] = obj.at(column).get<std::string>();
        } else {
          rec[field] = obj.at(column).dump();
        }
      }
      records.emplace_back(line_no, std::move(rec));
    }
  }
  return ingest_records(records, mapping, path);
}

inline nlohmann::ordered_json to_json(const DebateExample& ex) {
  nlohmann::ordered_json j;
  j["id"] = ex.id;
  j["motion_text"] = ex.motion_text;
  j["speech_text"] = ex.speech_text;
  j["vote"] = ex.vote;
  j["speaker_party"] = ex.speaker_party;
  j["motion_party"] = ex.motion_party;
  j["policy_id"] = ex.policy_id ? nlohmann::ordered_json(*ex.policy_id) : nlohmann::ordered_json();
  j["motion_id"] = ex.motion_id;
  j["speaker_id"] = ex.speaker_id;
  j["date"] = ex.date.iso();
  return j;
}

inline std::string to_jsonl(const Corpus& corpus) {
  std::string out;
  for (const auto& ex : corpus.examples) {
    out += to_json(ex).dump();
    out += '\n';
  }
  return out;
}

inline nlohmann::ordered_json to_json(const RejectionReport& report) {
  nlohmann::ordered_json j;
  j["count"] = report.count();
  j["rows"] = nlohmann::ordered_json::array();
  for (const auto& r : report.rows)
    j["rows"].push_back({{"line", r.line}, {"id", r.id}, {"reason", r.reason}});
  return j;
}

inline Corpus load_canonical_corpus(const std::string& path) {
  auto result = load_corpus(path, ColumnMapping::canonical());
  if (result.rejections.count() != 0)
    throw IntegrityError("canonical corpus '" + path + "' has " +
                         std::to_string(result.rejections.count()) + " invalid rows");
  return std::move(result.corpus);
}

/// Id -> position index over a corpus.
inline std::unordered_map<std::string, std::size_t> index_by_id(
    const std::vector<DebateExample>& examples) {
  std::unordered_map<std::string, std::size_t> idx;
  idx.reserve(examples.size());
  for (std::size_t i = 0; i < examples.size(); ++i) idx.emplace(examples[i].id, i);
  return idx;
}

inline std::size_t word_count(std::string_view text) {
  std::size_t count = 0;
  bool in_word = false;
  for (unsigned char c : text) {
    bool space = std::isspace(c) != 0;
    if (!space && !in_word) ++count;
    in_word = !space;
  }
  return count;
}

}  // namespace parlstance
