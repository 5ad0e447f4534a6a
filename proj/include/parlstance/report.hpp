#pragma once

#include <nlohmann/json.hpp>

#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "parlstance/error.hpp"
#include "parlstance/evaluation.hpp"
#include "parlstance/svg.hpp"

namespace parlstance::report {

struct TableRow {
  eval::RowInfo info;
  std::optional<double> random_accuracy;
  std::optional<double> temporal_accuracy;

  friend bool operator==(const TableRow&, const TableRow&) = default;
};

struct TableSection {
  std::string name;
  std::vector<TableRow> rows;
};

/// Merges per-split reports into table rows. A row is identified by its
/// RowInfo; sections and rows keep first-seen order.
inline std::vector<TableSection> build_table(std::span<const eval::EvalReport> reports) {
  std::vector<TableSection> sections;
  for (const auto& r : reports) {
    auto sec = std::find_if(sections.begin(), sections.end(),
                            [&](const TableSection& s) { return s.name == r.row.section; });
    if (sec == sections.end()) {
      sections.push_back({r.row.section, {}});
      sec = std::prev(sections.end());
    }
    auto row = std::find_if(sec->rows.begin(), sec->rows.end(),
                            [&](const TableRow& t) { return t.info == r.row; });
    if (row == sec->rows.end()) {
      sec->rows.push_back({r.row, std::nullopt, std::nullopt});
      row = std::prev(sec->rows.end());
    }
    if (r.split_kind == "random")
      row->random_accuracy = r.summary.accuracy();
    else if (r.split_kind == "temporal")
      row->temporal_accuracy = r.summary.accuracy();
    else
      throw ArgumentError("report has unknown split kind '" + r.split_kind + "'");
  }
  return sections;
}

inline const std::vector<std::string>& table_header() {
  static const std::vector<std::string> h = {"Model", "Text", "Part.", "Pol.", "Rand. Acc.",
                                             "Temp. Acc."};
  return h;
}

/// Row label followed by the five value columns.
inline std::vector<std::string> row_cells(const TableRow& row) {
  auto mark = [](bool b) { return std::string(b ? "\xE2\x9C\x93" : "\xE2\x9C\x97"); };
  auto acc = [](const std::optional<double>& v) {
    if (!v) return std::string("N/A");
    char buf[16];
    std::snprintf(buf, sizeof buf, "%.2f", *v);
    return std::string(buf);
  };
  return {row.info.model,  mark(row.info.text),        mark(row.info.party),
          mark(row.info.policy), acc(row.random_accuracy), acc(row.temporal_accuracy)};
}

namespace detail {
inline std::size_t display_width(const std::string& s) {
  std::size_t w = 0;
  for (unsigned char c : s)
    if ((c & 0xC0) != 0x80) ++w;
  return w;
}
inline std::string pad(const std::string& s, std::size_t width) {
  return s + std::string(width > display_width(s) ? width - display_width(s) : 0, ' ');
}
}  // namespace detail

inline std::string render_table(const std::vector<TableSection>& sections) {
  std::vector<std::size_t> widths;
  for (const auto& h : table_header()) widths.push_back(detail::display_width(h));
  for (const auto& sec : sections)
    for (const auto& row : sec.rows) {
      auto cells = row_cells(row);
      for (std::size_t i = 0; i < cells.size(); ++i)
        widths[i] = std::max(widths[i], detail::display_width(cells[i]));
    }
  auto line = [&](const std::vector<std::string>& cells) {
    std::string s;
    for (std::size_t i = 0; i < cells.size(); ++i) {
      s += i + 1 < cells.size() ? detail::pad(cells[i], widths[i]) + "  " : cells[i];
    }
    return s + "\n";
  };
  std::size_t total = 0;
  for (auto w : widths) total += w + 2;
  std::string rule(total - 2, '-');
  std::string out;
  for (const auto& sec : sections) {
    out += sec.name + "\n" + rule + "\n" + line(table_header()) + rule + "\n";
    for (const auto& row : sec.rows) out += line(row_cells(row));
    out += "\n";
  }
  return out;
}

inline std::string series_label(const eval::EvalReport& r) {
  std::string f = r.row.text ? "text" : "";
  if (r.row.party) f += f.empty() ? "party" : "+party";
  if (r.row.policy) f += "+policy";
  return r.row.model + " (" + f + ", " + r.split_kind + ")";
}

inline std::string plot_speech_length(std::span<const eval::EvalReport> reports) {
  svg::Chart chart("Model accuracy by speech length", "Word count", "Accuracy");
  double x_hi = 1;
  for (const auto& r : reports)
    if (r.by_length && !r.by_length->edges.empty()) x_hi = std::max(x_hi, r.by_length->edges.back());
  chart.set_x_range(0, x_hi);
  chart.set_y_range(0, 1);
  std::size_t color = 0;
  for (const auto& r : reports) {
    if (!r.by_length) continue;
    std::vector<std::pair<double, double>> pts;
    for (const auto& b : r.by_length->bins)
      if (auto a = b.accuracy()) pts.emplace_back(0.5 * (b.lo + b.hi), *a);
    chart.line(pts, color);
    chart.markers(pts, color);
    chart.legend(series_label(r), color);
    ++color;
  }
  return chart.render();
}

inline std::string plot_uncertainty(std::span<const eval::EvalReport> reports) {
  svg::Chart chart("Model accuracy by prior uncertainty", "|p - 0.5|", "Accuracy");
  chart.set_x_range(0, 0.5);
  chart.set_y_range(0, 1);
  std::size_t color = 0;
  for (const auto& r : reports) {
    if (!r.by_uncertainty) continue;
    std::vector<std::pair<double, double>> pts, curve;
    for (const auto& p : r.by_uncertainty->points) {
      pts.emplace_back(p.x, p.y);
      if (p.fitted) curve.emplace_back(p.x, *p.fitted);
    }
    std::sort(curve.begin(), curve.end());
    chart.markers(pts, color);
    chart.line(curve, color);
    chart.legend(series_label(r), color);
    ++color;
  }
  return chart.render();
}

inline void write_text(const std::filesystem::path& path, const std::string& body) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  out << body;
  if (!out) throw IoError("write to '" + path.string() + "' failed");
}

inline nlohmann::ordered_json results_json(std::span<const eval::EvalReport> reports) {
  nlohmann::ordered_json j;
  j["format"] = "parlstance.results";
  j["version"] = 1;
  j["reports"] = nlohmann::ordered_json::array();
  for (const auto& r : reports) j["reports"].push_back(eval::to_json(r));
  return j;
}

inline std::vector<eval::EvalReport> reports_from_json(const nlohmann::json& j) {
  std::vector<eval::EvalReport> out;
  if (j.contains("reports")) {
    for (const auto& r : j.at("reports")) out.push_back(eval::report_from_json(r));
  } else {
    out.push_back(eval::report_from_json(j));
  }
  return out;
}

/// Writes results.json, table.txt and the two analysis plots into `dir`.
/// Returns the written paths.
inline std::vector<std::filesystem::path> render_report(std::span<const eval::EvalReport> reports,
                                                        const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::vector<std::filesystem::path> written;
  auto emit = [&](const std::string& name, const std::string& body) {
    write_text(dir / name, body);
    written.push_back(dir / name);
  };
  emit("results.json", results_json(reports).dump(2) + "\n");
  emit("table.txt", render_table(build_table(reports)));
  bool any_length = std::any_of(reports.begin(), reports.end(),
                                [](const auto& r) { return r.by_length.has_value(); });
  bool any_curve = std::any_of(reports.begin(), reports.end(),
                               [](const auto& r) { return r.by_uncertainty.has_value(); });
  if (any_length) emit("accuracy_by_speech_length.svg", plot_speech_length(reports));
  if (any_curve) emit("accuracy_by_prior_uncertainty.svg", plot_uncertainty(reports));
  return written;
}

/// Attention matrix exported by the encoder trainer:
/// {"tokens": [...], "weights": [[...], ...]}.
struct AttentionMap {
  std::vector<std::string> tokens;
  std::vector<std::vector<double>> weights;
};

inline AttentionMap attention_from_json(const nlohmann::json& j) {
  AttentionMap m;
  m.tokens = j.at("tokens").get<std::vector<std::string>>();
  m.weights = j.at("weights").get<std::vector<std::vector<double>>>();
  if (m.weights.size() != m.tokens.size())
    throw ParseError("attention matrix has " + std::to_string(m.weights.size()) + " rows for " +
                     std::to_string(m.tokens.size()) + " tokens");
  for (std::size_t r = 0; r < m.weights.size(); ++r) {
    if (m.weights[r].size() != m.tokens.size())
      throw ParseError("attention row " + std::to_string(r) + " has wrong width");
    double sum = 0;
    for (double w : m.weights[r]) sum += w;
    if (std::abs(sum - 1.0) > 1e-5)
      throw ParseError("attention row " + std::to_string(r) + " does not sum to 1");
  }
  return m;
}

inline std::string plot_attention(const AttentionMap& m, const std::string& title) {
  return svg::heatmap(title, m.tokens, m.weights);
}

}  // namespace parlstance::report
