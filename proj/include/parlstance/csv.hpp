#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "parlstance/error.hpp"

namespace parlstance::csv {

using Row = std::vector<std::string>;

/// Splits delimited text into records. Quoting follows RFC 4180: a field
/// wrapped in double quotes may contain the delimiter, newlines and doubled
/// quotes. CRLF and LF line endings are both accepted, a leading UTF-8 BOM is
/// dropped and blank lines are skipped. `line_of` receives the 1-based source
/// line each record starts on.
inline std::vector<Row> parse(std::string_view text, char delimiter,
                              std::vector<std::size_t>* line_of = nullptr) {
  if (text.starts_with("\xEF\xBB\xBF")) text.remove_prefix(3);
  std::vector<Row> rows;
  Row row;
  std::string field;
  bool in_quotes = false;
  bool field_started = false;
  std::size_t line = 1;
  std::size_t row_line = 1;

  auto end_field = [&] {
    row.push_back(std::move(field));
    field.clear();
    field_started = false;
  };
  auto end_row = [&] {
    end_field();
    bool blank = row.size() == 1 && row[0].empty();
    if (!blank) {
      rows.push_back(std::move(row));
      if (line_of) line_of->push_back(row_line);
    }
    row.clear();
  };

  for (std::size_t i = 0; i < text.size(); ++i) {
    char c = text[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        if (c == '\n') ++line;
        field += c;
      }
      continue;
    }
    if (c == '"' && !field_started) {
      in_quotes = true;
      field_started = true;
    } else if (c == delimiter) {
      end_field();
    } else if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n') {
      continue;
    } else if (c == '\n') {
      end_row();
      ++line;
      row_line = line;
    } else {
      field += c;
      field_started = true;
    }
  }
  if (in_quotes) throw ParseError("unterminated quoted field starting near line " +
                                  std::to_string(row_line));
  if (field_started || !field.empty() || !row.empty()) end_row();
  return rows;
}

}  // namespace parlstance::csv
