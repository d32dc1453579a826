#pragma once

#include <string>
#include <vector>

namespace rmpc {

/// Hand-rolled, self-contained SVG plots (polylines, axes, legend). No
/// plotting dependency; output is deterministic for fixed input.
struct SvgSeries {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
};

struct SvgPlot {
  std::string title;
  std::string x_label;
  std::string y_label;
  bool log_y = false;
  std::vector<SvgSeries> series;

  void add(std::string label, std::vector<double> x, std::vector<double> y) {
    series.push_back({std::move(label), std::move(x), std::move(y)});
  }
  void write(const std::string& path) const;
  std::string render() const;
};

/// Grouped bars: one group per x tick, one bar per series.
struct SvgBarChart {
  std::string title;
  std::string x_label;
  std::string y_label;
  std::vector<std::string> group_labels;
  std::vector<std::pair<std::string, std::vector<double>>> series;

  void write(const std::string& path) const;
  std::string render() const;
};

}  // namespace rmpc
