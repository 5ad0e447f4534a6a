#pragma once

#include <chrono>
#include <cstdio>
#include <optional>
#include <string>
#include <string_view>

#include "parlstance/error.hpp"

namespace parlstance {

/// Day-granular calendar date. Ordering is chronological.
class Date {
public:
  constexpr Date() = default;
  constexpr explicit Date(std::chrono::year_month_day ymd) : ymd_(ymd) {}

  static std::optional<Date> from_ymd(int y, unsigned m, unsigned d) {
    std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{m},
                                    std::chrono::day{d}};
    if (!ymd.ok()) return std::nullopt;
    return Date{ymd};
  }

  /// Parses `text` against a strftime-like `pattern`. Supported directives
  /// are %Y (4 digits), %m and %d (1 or 2 digits) and %%; every other
  /// character must match literally. Returns nullopt on any mismatch or on
  /// an invalid calendar date.
  static std::optional<Date> parse(std::string_view text,
                                   std::string_view pattern = "%Y-%m-%d") {
    int year = -1;
    int month = -1;
    int day = -1;
    std::size_t pos = 0;
    auto read_number = [&](std::size_t min_digits, std::size_t max_digits,
                           int& out) {
      std::size_t start = pos;
      int value = 0;
      while (pos < text.size() && pos - start < max_digits && text[pos] >= '0' &&
             text[pos] <= '9') {
        value = value * 10 + (text[pos] - '0');
        ++pos;
      }
      if (pos - start < min_digits) return false;
      out = value;
      return true;
    };
    for (std::size_t i = 0; i < pattern.size(); ++i) {
      char c = pattern[i];
      if (c == '%' && i + 1 < pattern.size()) {
        char directive = pattern[++i];
        bool ok = true;
        switch (directive) {
          case 'Y': ok = read_number(4, 4, year); break;
          case 'm': ok = read_number(1, 2, month); break;
          case 'd': ok = read_number(1, 2, day); break;
          case '%': ok = pos < text.size() && text[pos++] == '%'; break;
          default: return std::nullopt;
        }
        if (!ok) return std::nullopt;
      } else {
        if (pos >= text.size() || text[pos] != c) return std::nullopt;
        ++pos;
      }
    }
    if (pos != text.size() || year < 0 || month < 0 || day < 0) return std::nullopt;
    return from_ymd(year, static_cast<unsigned>(month), static_cast<unsigned>(day));
  }

  static Date parse_iso_or_throw(std::string_view text) {
    auto d = parse(text);
    if (!d) throw ArgumentError("invalid ISO date '" + std::string(text) + "'");
    return *d;
  }

  std::string iso() const {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd_.year()),
                  static_cast<unsigned>(ymd_.month()), static_cast<unsigned>(ymd_.day()));
    return buf;
  }

  std::chrono::year_month_day ymd() const { return ymd_; }

  friend constexpr auto operator<=>(const Date&, const Date&) = default;
  friend constexpr bool operator==(const Date&, const Date&) = default;

private:
  std::chrono::year_month_day ymd_{std::chrono::year{1970}, std::chrono::month{1},
                                   std::chrono::day{1}};
};

}  // namespace parlstance
