#pragma once

#include <optional>
#include <string>
#include <vector>

namespace synthpanel::svg {

struct Line {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
  std::string color = "#000000";
  bool dashed = false;
};

struct Band {
  std::vector<double> x;
  std::vector<double> lower;
  std::vector<double> upper;
  std::string color = "#bbbbbb";
};

struct LineChart {
  std::string title;
  std::string x_label;
  std::string y_label;
  std::vector<Line> lines;
  std::optional<Band> band;
  /// Vertical marker, e.g. the last pre-intervention period.
  std::optional<double> vertical_marker;
  bool zero_line = false;
};

/// Static SVG document: shaded band polygon under the lines, axes with
/// five ticks each, and a legend.
std::string render(const LineChart& chart, int width = 720, int height = 420);

struct Interval {
  std::string label;
  double value = 0.0;
  double lower = 0.0;
  double upper = 0.0;
};

/// Dot-and-bar chart for averaged effects: one row per label.
std::string render_intervals(const std::string& title, const std::vector<Interval>& rows,
                             int width = 720);

}  // namespace synthpanel::svg
