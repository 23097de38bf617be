#pragma once

// Minimal line-chart SVG: one polyline per series, axes with tick labels,
// a legend, optional log-scale y and dashed reference lines.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace l2o::svg {

struct Series {
  std::string name;
  std::vector<double> x, y;
  bool dashed = false;
};

struct ChartOptions {
  std::string title;
  std::string x_label = "x";
  std::string y_label = "y";
  bool log_y = false;
  int width = 720, height = 440;
};

namespace detail {

inline std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

inline std::string tick(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

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

inline const char* color(std::size_t i) {
  static const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#17becf"};
  return palette[i % 7];
}

}  // namespace detail

inline std::string line_chart(const std::vector<Series>& series, const ChartOptions& opt = {}) {
  if (series.empty()) throw std::invalid_argument("line_chart: no series");
  const double ml = 70, mr = 160, mt = 40, mb = 50;
  const double pw = opt.width - ml - mr, ph = opt.height - mt - mb;

  auto ty = [&](double v) { return opt.log_y ? std::log10(v) : v; };
  double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
  std::size_t points = 0;
  for (const auto& s : series) {
    if (s.x.size() != s.y.size()) throw std::invalid_argument("line_chart: x/y length mismatch in " + s.name);
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i]) || (opt.log_y && s.y[i] <= 0.0)) continue;
      x0 = std::min(x0, s.x[i]);
      x1 = std::max(x1, s.x[i]);
      y0 = std::min(y0, ty(s.y[i]));
      y1 = std::max(y1, ty(s.y[i]));
      ++points;
    }
  }
  if (points == 0) throw std::invalid_argument("line_chart: no plottable points");
  if (x1 == x0) x1 = x0 + 1.0;
  if (y1 == y0) {
    y0 -= 0.5;
    y1 += 0.5;
  }
  auto px = [&](double v) { return ml + (v - x0) / (x1 - x0) * pw; };
  auto py = [&](double v) { return mt + ph - (ty(v) - y0) / (y1 - y0) * ph; };

  using detail::num;
  std::string out = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(opt.width) +
                    "\" height=\"" + std::to_string(opt.height) + "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  out += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  if (!opt.title.empty())
    out += "<text x=\"" + num(ml + pw / 2) + "\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">" +
           detail::escape(opt.title) + "</text>\n";
  out += "<line class=\"axis\" x1=\"" + num(ml) + "\" y1=\"" + num(mt + ph) + "\" x2=\"" + num(ml + pw) + "\" y2=\"" +
         num(mt + ph) + "\" stroke=\"black\"/>\n";
  out += "<line class=\"axis\" x1=\"" + num(ml) + "\" y1=\"" + num(mt) + "\" x2=\"" + num(ml) + "\" y2=\"" +
         num(mt + ph) + "\" stroke=\"black\"/>\n";
  for (int k = 0; k <= 5; ++k) {
    const double fx = x0 + (x1 - x0) * k / 5.0;
    const double fy = y0 + (y1 - y0) * k / 5.0;
    const double label_y = opt.log_y ? std::pow(10.0, fy) : fy;
    out += "<text x=\"" + num(px(fx)) + "\" y=\"" + num(mt + ph + 16) + "\" text-anchor=\"middle\">" +
           detail::tick(fx) + "</text>\n";
    const double yy = mt + ph - (fy - y0) / (y1 - y0) * ph;
    out += "<text x=\"" + num(ml - 6) + "\" y=\"" + num(yy + 4) + "\" text-anchor=\"end\">" + detail::tick(label_y) +
           "</text>\n";
  }
  out += "<text class=\"xlabel\" x=\"" + num(ml + pw / 2) + "\" y=\"" + num(opt.height - 12.0) +
         "\" text-anchor=\"middle\">" + detail::escape(opt.x_label) + "</text>\n";
  out += "<text class=\"ylabel\" transform=\"translate(16," + num(mt + ph / 2) +
         ") rotate(-90)\" text-anchor=\"middle\">" + detail::escape(opt.y_label + (opt.log_y ? " (log)" : "")) +
         "</text>\n";

  for (std::size_t i = 0; i < series.size(); ++i) {
    const auto& s = series[i];
    std::string pts;
    for (std::size_t k = 0; k < s.x.size(); ++k) {
      if (!std::isfinite(s.x[k]) || !std::isfinite(s.y[k]) || (opt.log_y && s.y[k] <= 0.0)) continue;
      if (!pts.empty()) pts += ' ';
      pts += num(px(s.x[k])) + "," + num(py(s.y[k]));
    }
    out += "<polyline fill=\"none\" stroke=\"" + std::string(detail::color(i)) + "\" stroke-width=\"1.5\"";
    if (s.dashed) out += " stroke-dasharray=\"6,4\"";
    out += " points=\"" + pts + "\"/>\n";
    const double ly = mt + 14.0 + 18.0 * static_cast<double>(i);
    out += "<line x1=\"" + num(ml + pw + 12) + "\" y1=\"" + num(ly - 4) + "\" x2=\"" + num(ml + pw + 36) + "\" y2=\"" +
           num(ly - 4) + "\" stroke=\"" + detail::color(i) + "\"" + (s.dashed ? " stroke-dasharray=\"6,4\"" : "") +
           "/>\n";
    out += "<text class=\"legend\" x=\"" + num(ml + pw + 42) + "\" y=\"" + num(ly) + "\">" + detail::escape(s.name) +
           "</text>\n";
  }
  out += "</svg>\n";
  return out;
}

}  // namespace l2o::svg
