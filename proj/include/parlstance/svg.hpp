#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

namespace parlstance::svg {

inline std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

inline std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

inline const char* palette(std::size_t i) {
  static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                 "#9467bd", "#8c564b", "#e377c2", "#17becf"};
  return colors[i % 8];
}

/// Minimal 2-D chart: linear axes, polylines, markers and a legend.
class Chart {
public:
  Chart(std::string title, std::string x_label, std::string y_label, double width = 720,
        double height = 440)
      : title_(std::move(title)), x_label_(std::move(x_label)), y_label_(std::move(y_label)),
        width_(width), height_(height) {}

  void set_x_range(double lo, double hi) { x_lo_ = lo, x_hi_ = hi; }
  void set_y_range(double lo, double hi) { y_lo_ = lo, y_hi_ = hi; }

  void line(const std::vector<std::pair<double, double>>& pts, std::size_t color, bool dashed = false) {
    if (pts.size() < 2) return;
    std::string d;
    for (const auto& [x, y] : pts) d += num(px(x)) + "," + num(py(y)) + " ";
    body_ += "<polyline fill=\"none\" stroke=\"" + std::string(palette(color)) +
             "\" stroke-width=\"2\"" + (dashed ? " stroke-dasharray=\"6,4\"" : "") + " points=\"" +
             d + "\"/>\n";
  }

  void markers(const std::vector<std::pair<double, double>>& pts, std::size_t color, double radius = 4) {
    for (const auto& [x, y] : pts)
      body_ += "<circle cx=\"" + num(px(x)) + "\" cy=\"" + num(py(y)) + "\" r=\"" + num(radius) +
               "\" fill=\"" + palette(color) + "\" fill-opacity=\"0.7\"/>\n";
  }

  void legend(const std::string& label, std::size_t color) { legend_.emplace_back(label, color); }

  std::string render() const {
    std::string s = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(width_) +
                    "\" height=\"" + num(height_) + "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    s += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    s += "<text x=\"" + num(width_ / 2) + "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">" +
         escape(title_) + "</text>\n";
    double x0 = kLeft, x1 = width_ - kRight, y0 = height_ - kBottom, y1 = kTop;
    s += "<line x1=\"" + num(x0) + "\" y1=\"" + num(y0) + "\" x2=\"" + num(x1) + "\" y2=\"" + num(y0) +
         "\" stroke=\"black\"/>\n";
    s += "<line x1=\"" + num(x0) + "\" y1=\"" + num(y0) + "\" x2=\"" + num(x0) + "\" y2=\"" + num(y1) +
         "\" stroke=\"black\"/>\n";
    for (int i = 0; i <= 5; ++i) {
      double xv = x_lo_ + (x_hi_ - x_lo_) * i / 5.0;
      double yv = y_lo_ + (y_hi_ - y_lo_) * i / 5.0;
      s += "<text x=\"" + num(px(xv)) + "\" y=\"" + num(y0 + 16) + "\" text-anchor=\"middle\">" +
           tick(xv) + "</text>\n";
      s += "<text x=\"" + num(x0 - 6) + "\" y=\"" + num(py(yv) + 4) + "\" text-anchor=\"end\">" +
           tick(yv) + "</text>\n";
      s += "<line x1=\"" + num(x0) + "\" y1=\"" + num(py(yv)) + "\" x2=\"" + num(x1) + "\" y2=\"" +
           num(py(yv)) + "\" stroke=\"#dddddd\"/>\n";
    }
    s += "<text x=\"" + num((x0 + x1) / 2) + "\" y=\"" + num(height_ - 12) +
         "\" text-anchor=\"middle\">" + escape(x_label_) + "</text>\n";
    s += "<text transform=\"translate(16," + num((y0 + y1) / 2) +
         ") rotate(-90)\" text-anchor=\"middle\">" + escape(y_label_) + "</text>\n";
    s += body_;
    for (std::size_t i = 0; i < legend_.size(); ++i) {
      double ly = kTop + 14 + 18.0 * static_cast<double>(i);
      s += "<rect x=\"" + num(x1 - 230) + "\" y=\"" + num(ly - 9) + "\" width=\"12\" height=\"12\" fill=\"" +
           palette(legend_[i].second) + "\"/>\n";
      s += "<text x=\"" + num(x1 - 212) + "\" y=\"" + num(ly + 1) + "\">" + escape(legend_[i].first) +
           "</text>\n";
    }
    s += "</svg>\n";
    return s;
  }

private:
  static constexpr double kLeft = 60, kRight = 20, kTop = 36, kBottom = 50;

  double px(double x) const {
    double span = x_hi_ - x_lo_;
    return kLeft + (span > 0 ? (x - x_lo_) / span : 0.5) * (width_ - kLeft - kRight);
  }
  double py(double y) const {
    double span = y_hi_ - y_lo_;
    return height_ - kBottom - (span > 0 ? (y - y_lo_) / span : 0.5) * (height_ - kTop - kBottom);
  }
  static std::string tick(double v) {
    char buf[32];
    if (std::abs(v) >= 100 || v == std::floor(v))
      std::snprintf(buf, sizeof buf, "%.0f", v);
    else
      std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
  }

  std::string title_, x_label_, y_label_;
  double width_, height_;
  double x_lo_ = 0, x_hi_ = 1, y_lo_ = 0, y_hi_ = 1;
  std::string body_;
  std::vector<std::pair<std::string, std::size_t>> legend_;
};

/// Row-major heatmap with labelled rows and columns; values in [0, 1] map
/// from white to dark blue after scaling by the matrix maximum.
inline std::string heatmap(const std::string& title, const std::vector<std::string>& labels,
                           const std::vector<std::vector<double>>& weights) {
  const double cell = 18, margin = 140;
  const double size = cell * static_cast<double>(labels.size());
  double max_w = 0;
  for (const auto& row : weights)
    for (double w : row) max_w = std::max(max_w, w);
  std::string s = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(size + margin + 20) +
                  "\" height=\"" + num(size + margin + 20) +
                  "\" font-family=\"sans-serif\" font-size=\"10\">\n";
  s += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  s += "<text x=\"10\" y=\"16\" font-size=\"13\">" + escape(title) + "</text>\n";
  for (std::size_t r = 0; r < weights.size(); ++r) {
    for (std::size_t c = 0; c < weights[r].size(); ++c) {
      double v = max_w > 0 ? weights[r][c] / max_w : 0;
      int shade = static_cast<int>(255 - 200 * std::clamp(v, 0.0, 1.0));
      char fill[16];
      std::snprintf(fill, sizeof fill, "#%02x%02xff", shade, shade);
      s += "<rect x=\"" + num(margin + cell * static_cast<double>(c)) + "\" y=\"" +
           num(margin + cell * static_cast<double>(r)) + "\" width=\"" + num(cell) + "\" height=\"" +
           num(cell) + "\" fill=\"" + fill + "\"/>\n";
    }
  }
  for (std::size_t i = 0; i < labels.size(); ++i) {
    double off = margin + cell * (static_cast<double>(i) + 0.7);
    s += "<text x=\"" + num(margin - 4) + "\" y=\"" + num(off) + "\" text-anchor=\"end\">" +
         escape(labels[i]) + "</text>\n";
    s += "<text transform=\"translate(" + num(off) + "," + num(margin - 4) +
         ") rotate(-60)\">" + escape(labels[i]) + "</text>\n";
  }
  s += "</svg>\n";
  return s;
}

}  // namespace parlstance::svg
