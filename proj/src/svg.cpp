#include "synthpanel/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

namespace synthpanel::svg {

namespace {

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

std::string tick_label(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3g", std::abs(v) < 1e-12 ? 0.0 : v);
  return buf;
}

std::string escape_xml(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out.push_back(c);
    }
  }
  return out;
}

struct Extent {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();

  void add(double v) {
    if (!std::isfinite(v)) return;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  void finish() {
    if (!std::isfinite(lo)) {
      lo = 0.0;
      hi = 1.0;
    }
    if (hi - lo < 1e-12) {
      lo -= 0.5;
      hi += 0.5;
    } else {
      const double pad = 0.05 * (hi - lo);
      lo -= pad;
      hi += pad;
    }
  }
};

}  // namespace

std::string render(const LineChart& chart, int width, int height) {
  const double left = 70, right = 20, top = 40, bottom = 50;
  const double plot_w = width - left - right;
  const double plot_h = height - top - bottom;

  Extent xs, ys;
  for (const auto& l : chart.lines) {
    for (double v : l.x) xs.add(v);
    for (double v : l.y) ys.add(v);
  }
  if (chart.band) {
    for (double v : chart.band->x) xs.add(v);
    for (double v : chart.band->lower) ys.add(v);
    for (double v : chart.band->upper) ys.add(v);
  }
  if (chart.zero_line) ys.add(0.0);
  if (chart.vertical_marker) xs.add(*chart.vertical_marker);
  xs.finish();
  ys.finish();
  auto px = [&](double x) { return left + (x - xs.lo) / (xs.hi - xs.lo) * plot_w; };
  auto py = [&](double y) { return top + (ys.hi - y) / (ys.hi - ys.lo) * plot_h; };

  std::string out;
  out += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(width) +
         "\" height=\"" + std::to_string(height) + "\" viewBox=\"0 0 " + std::to_string(width) +
         " " + std::to_string(height) + "\">\n";
  out += "<rect width=\"100%\" height=\"100%\" fill=\"#ffffff\"/>\n";
  out += "<text x=\"" + num(width / 2.0) + "\" y=\"22\" text-anchor=\"middle\" " +
         "font-family=\"sans-serif\" font-size=\"15\">" + escape_xml(chart.title) + "</text>\n";

  if (chart.band && !chart.band->x.empty()) {
    const Band& b = *chart.band;
    std::string pts;
    for (std::size_t i = 0; i < b.x.size(); ++i) {
      pts += num(px(b.x[i])) + "," + num(py(b.upper[i])) + " ";
    }
    for (std::size_t i = b.x.size(); i-- > 0;) {
      pts += num(px(b.x[i])) + "," + num(py(b.lower[i])) + " ";
    }
    pts.pop_back();
    out += "<polygon points=\"" + pts + "\" fill=\"" + b.color +
           "\" fill-opacity=\"0.6\" stroke=\"none\"/>\n";
  }

  // Axes and ticks.
  out += "<g stroke=\"#333333\" stroke-width=\"1\">\n";
  out += "<line x1=\"" + num(left) + "\" y1=\"" + num(top + plot_h) + "\" x2=\"" +
         num(left + plot_w) + "\" y2=\"" + num(top + plot_h) + "\"/>\n";
  out += "<line x1=\"" + num(left) + "\" y1=\"" + num(top) + "\" x2=\"" + num(left) +
         "\" y2=\"" + num(top + plot_h) + "\"/>\n";
  out += "</g>\n<g font-family=\"sans-serif\" font-size=\"11\" fill=\"#333333\">\n";
  for (int i = 0; i <= 4; ++i) {
    const double xv = xs.lo + (xs.hi - xs.lo) * i / 4.0;
    const double yv = ys.lo + (ys.hi - ys.lo) * i / 4.0;
    out += "<text x=\"" + num(px(xv)) + "\" y=\"" + num(top + plot_h + 16) +
           "\" text-anchor=\"middle\">" + tick_label(xv) + "</text>\n";
    out += "<text x=\"" + num(left - 6) + "\" y=\"" + num(py(yv) + 4) +
           "\" text-anchor=\"end\">" + tick_label(yv) + "</text>\n";
  }
  out += "<text x=\"" + num(left + plot_w / 2) + "\" y=\"" + num(height - 10.0) +
         "\" text-anchor=\"middle\">" + escape_xml(chart.x_label) + "</text>\n";
  out += "<text x=\"16\" y=\"" + num(top + plot_h / 2) + "\" text-anchor=\"middle\" " +
         "transform=\"rotate(-90 16 " + num(top + plot_h / 2) + ")\">" +
         escape_xml(chart.y_label) + "</text>\n</g>\n";

  if (chart.zero_line) {
    out += "<line x1=\"" + num(left) + "\" y1=\"" + num(py(0.0)) + "\" x2=\"" +
           num(left + plot_w) + "\" y2=\"" + num(py(0.0)) +
           "\" stroke=\"#888888\" stroke-dasharray=\"2,3\"/>\n";
  }
  if (chart.vertical_marker) {
    const double x = px(*chart.vertical_marker);
    out += "<line x1=\"" + num(x) + "\" y1=\"" + num(top) + "\" x2=\"" + num(x) + "\" y2=\"" +
           num(top + plot_h) + "\" stroke=\"#444444\"/>\n";
  }

  for (const auto& l : chart.lines) {
    std::string pts;
    for (std::size_t i = 0; i < std::min(l.x.size(), l.y.size()); ++i) {
      if (!std::isfinite(l.y[i])) continue;
      pts += num(px(l.x[i])) + "," + num(py(l.y[i])) + " ";
    }
    if (pts.empty()) continue;
    pts.pop_back();
    out += "<polyline points=\"" + pts + "\" fill=\"none\" stroke=\"" + l.color +
           "\" stroke-width=\"1.8\"" + (l.dashed ? " stroke-dasharray=\"6,4\"" : "") + "/>\n";
  }

  double legend_y = top + 12;
  for (const auto& l : chart.lines) {
    if (l.label.empty()) continue;
    out += "<line x1=\"" + num(left + plot_w - 150) + "\" y1=\"" + num(legend_y - 4) +
           "\" x2=\"" + num(left + plot_w - 128) + "\" y2=\"" + num(legend_y - 4) +
           "\" stroke=\"" + l.color + "\" stroke-width=\"2\"" +
           (l.dashed ? " stroke-dasharray=\"6,4\"" : "") + "/>\n";
    out += "<text x=\"" + num(left + plot_w - 122) + "\" y=\"" + num(legend_y) +
           "\" font-family=\"sans-serif\" font-size=\"11\">" + escape_xml(l.label) + "</text>\n";
    legend_y += 16;
  }
  out += "</svg>\n";
  return out;
}

std::string render_intervals(const std::string& title, const std::vector<Interval>& rows,
                             int width) {
  const double left = 180, right = 30, top = 40, row_h = 26;
  const int height = static_cast<int>(top + row_h * static_cast<double>(rows.size()) + 50);
  const double plot_w = width - left - right;
  Extent xs;
  xs.add(0.0);
  for (const auto& r : rows) {
    xs.add(r.value);
    xs.add(r.lower);
    xs.add(r.upper);
  }
  xs.finish();
  auto px = [&](double x) { return left + (x - xs.lo) / (xs.hi - xs.lo) * plot_w; };

  std::string out;
  out += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(width) +
         "\" height=\"" + std::to_string(height) + "\" viewBox=\"0 0 " + std::to_string(width) +
         " " + std::to_string(height) + "\">\n";
  out += "<rect width=\"100%\" height=\"100%\" fill=\"#ffffff\"/>\n";
  out += "<text x=\"" + num(width / 2.0) + "\" y=\"22\" text-anchor=\"middle\" " +
         "font-family=\"sans-serif\" font-size=\"15\">" + escape_xml(title) + "</text>\n";
  const double bottom_y = top + row_h * static_cast<double>(rows.size());
  out += "<line x1=\"" + num(px(0.0)) + "\" y1=\"" + num(top) + "\" x2=\"" + num(px(0.0)) +
         "\" y2=\"" + num(bottom_y) + "\" stroke=\"#888888\" stroke-dasharray=\"2,3\"/>\n";
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& r = rows[i];
    const double y = top + row_h * (static_cast<double>(i) + 0.5);
    out += "<text x=\"" + num(left - 10) + "\" y=\"" + num(y + 4) +
           "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"12\">" +
           escape_xml(r.label) + "</text>\n";
    out += "<rect x=\"" + num(px(r.lower)) + "\" y=\"" + num(y - 5) + "\" width=\"" +
           num(std::max(1.0, px(r.upper) - px(r.lower))) +
           "\" height=\"10\" fill=\"#bbbbbb\"/>\n";
    out += "<circle cx=\"" + num(px(r.value)) + "\" cy=\"" + num(y) +
           "\" r=\"4\" fill=\"#000000\"/>\n";
  }
  out += "<g font-family=\"sans-serif\" font-size=\"11\" fill=\"#333333\">\n";
  for (int i = 0; i <= 4; ++i) {
    const double xv = xs.lo + (xs.hi - xs.lo) * i / 4.0;
    out += "<text x=\"" + num(px(xv)) + "\" y=\"" + num(bottom_y + 18) +
           "\" text-anchor=\"middle\">" + tick_label(xv) + "</text>\n";
  }
  out += "</g>\n</svg>\n";
  return out;
}

}  // namespace synthpanel::svg
