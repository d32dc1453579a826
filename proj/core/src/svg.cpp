#include "rmpc/svg.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace rmpc {

namespace {

constexpr int kWidth = 720;
constexpr int kHeight = 440;
constexpr int kMarginL = 70, kMarginR = 160, kMarginT = 40, kMarginB = 55;

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd",
                          "#8c564b", "#17becf", "#7f7f7f", "#bcbd22", "#e377c2"};
constexpr int kPaletteSize = 10;

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

// Round limits outward to one significant tick step.
std::pair<double, double> nice_range(double lo, double hi) {
  if (!(hi > lo)) {
    const double pad = std::abs(lo) > 0 ? std::abs(lo) * 0.1 : 1.0;
    return {lo - pad, hi + pad};
  }
  return {lo, hi};
}

std::vector<double> ticks(double lo, double hi, int target = 6) {
  const double span = hi - lo;
  const double raw = span / target;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  double step = mag;
  for (double s : {1.0, 2.0, 5.0, 10.0}) {
    if (raw <= s * mag) {
      step = s * mag;
      break;
    }
  }
  std::vector<double> out;
  for (double t = std::ceil(lo / step) * step; t <= hi + 1e-12 * span; t += step)
    out.push_back(std::abs(t) < step * 1e-9 ? 0.0 : t);
  return out;
}

void write_file(const std::string& path, const std::string& body) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << body;
}

}  // namespace

std::string SvgPlot::render() const {
  double x_lo = std::numeric_limits<double>::infinity(), x_hi = -x_lo;
  double y_lo = x_lo, y_hi = -x_lo;
  for (const SvgSeries& s : series) {
    assert(s.x.size() == s.y.size());
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      const double yv = log_y ? std::log10(std::max(s.y[i], 1e-300)) : s.y[i];
      x_lo = std::min(x_lo, s.x[i]);
      x_hi = std::max(x_hi, s.x[i]);
      y_lo = std::min(y_lo, yv);
      y_hi = std::max(y_hi, yv);
    }
  }
  if (!std::isfinite(x_lo)) { x_lo = 0; x_hi = 1; y_lo = 0; y_hi = 1; }
  std::tie(x_lo, x_hi) = nice_range(x_lo, x_hi);
  std::tie(y_lo, y_hi) = nice_range(y_lo, y_hi);

  const double plot_w = kWidth - kMarginL - kMarginR;
  const double plot_h = kHeight - kMarginT - kMarginB;
  auto px = [&](double x) { return kMarginL + (x - x_lo) / (x_hi - x_lo) * plot_w; };
  auto py = [&](double y) { return kMarginT + plot_h - (y - y_lo) / (y_hi - y_lo) * plot_h; };

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\""
      << kHeight << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg << "<text x=\"" << kWidth / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">"
      << title << "</text>\n";

  // axes + grid
  for (double t : ticks(x_lo, x_hi)) {
    svg << "<line x1=\"" << fmt(px(t)) << "\" y1=\"" << kMarginT << "\" x2=\"" << fmt(px(t))
        << "\" y2=\"" << kMarginT + plot_h << "\" stroke=\"#dddddd\"/>\n";
    svg << "<text x=\"" << fmt(px(t)) << "\" y=\"" << kMarginT + plot_h + 18
        << "\" text-anchor=\"middle\">" << fmt(t) << "</text>\n";
  }
  for (double t : ticks(y_lo, y_hi)) {
    svg << "<line x1=\"" << kMarginL << "\" y1=\"" << fmt(py(t)) << "\" x2=\""
        << kMarginL + plot_w << "\" y2=\"" << fmt(py(t)) << "\" stroke=\"#dddddd\"/>\n";
    svg << "<text x=\"" << kMarginL - 6 << "\" y=\"" << fmt(py(t) + 4)
        << "\" text-anchor=\"end\">" << (log_y ? "1e" + fmt(t) : fmt(t)) << "</text>\n";
  }
  svg << "<rect x=\"" << kMarginL << "\" y=\"" << kMarginT << "\" width=\"" << plot_w
      << "\" height=\"" << plot_h << "\" fill=\"none\" stroke=\"black\"/>\n";
  svg << "<text x=\"" << kMarginL + plot_w / 2 << "\" y=\"" << kHeight - 12
      << "\" text-anchor=\"middle\">" << x_label << "</text>\n";
  svg << "<text x=\"16\" y=\"" << kMarginT + plot_h / 2
      << "\" text-anchor=\"middle\" transform=\"rotate(-90 16 " << kMarginT + plot_h / 2 << ")\">"
      << y_label << "</text>\n";

  for (std::size_t si = 0; si < series.size(); ++si) {
    const SvgSeries& s = series[si];
    const char* color = kPalette[si % kPaletteSize];
    svg << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      const double yv = log_y ? std::log10(std::max(s.y[i], 1e-300)) : s.y[i];
      svg << fmt(px(s.x[i])) << "," << fmt(py(yv)) << " ";
    }
    svg << "\"/>\n";
    const double ly = kMarginT + 14 + 18 * static_cast<double>(si);
    svg << "<line x1=\"" << kMarginL + plot_w + 10 << "\" y1=\"" << fmt(ly - 4) << "\" x2=\""
        << kMarginL + plot_w + 34 << "\" y2=\"" << fmt(ly - 4) << "\" stroke=\"" << color
        << "\" stroke-width=\"2\"/>\n";
    svg << "<text x=\"" << kMarginL + plot_w + 40 << "\" y=\"" << fmt(ly) << "\">" << s.label
        << "</text>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

void SvgPlot::write(const std::string& path) const { write_file(path, render()); }

std::string SvgBarChart::render() const {
  double y_hi = 0.0;
  for (const auto& [label, vals] : series)
    for (double v : vals) y_hi = std::max(y_hi, v);
  if (y_hi <= 0) y_hi = 1.0;
  y_hi *= 1.05;

  const double plot_w = kWidth - kMarginL - kMarginR;
  const double plot_h = kHeight - kMarginT - kMarginB;
  const std::size_t n_groups = group_labels.size();
  const std::size_t n_series = series.size();
  const double group_w = plot_w / static_cast<double>(n_groups);
  const double bar_w = group_w * 0.8 / static_cast<double>(n_series);

  auto py = [&](double y) { return kMarginT + plot_h - y / y_hi * plot_h; };

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\""
      << kHeight << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg << "<text x=\"" << kWidth / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">"
      << title << "</text>\n";
  for (double t : ticks(0, y_hi)) {
    svg << "<line x1=\"" << kMarginL << "\" y1=\"" << fmt(py(t)) << "\" x2=\""
        << kMarginL + plot_w << "\" y2=\"" << fmt(py(t)) << "\" stroke=\"#dddddd\"/>\n";
    svg << "<text x=\"" << kMarginL - 6 << "\" y=\"" << fmt(py(t) + 4)
        << "\" text-anchor=\"end\">" << fmt(t) << "</text>\n";
  }
  for (std::size_t g = 0; g < n_groups; ++g) {
    const double x0 = kMarginL + group_w * (static_cast<double>(g) + 0.1);
    for (std::size_t s = 0; s < n_series; ++s) {
      const double v = series[s].second[g];
      svg << "<rect x=\"" << fmt(x0 + bar_w * static_cast<double>(s)) << "\" y=\"" << fmt(py(v))
          << "\" width=\"" << fmt(bar_w * 0.92) << "\" height=\"" << fmt(plot_h - (py(v) - kMarginT))
          << "\" fill=\"" << kPalette[s % kPaletteSize] << "\"/>\n";
    }
    svg << "<text x=\"" << fmt(kMarginL + group_w * (static_cast<double>(g) + 0.5)) << "\" y=\""
        << kMarginT + plot_h + 18 << "\" text-anchor=\"middle\">" << group_labels[g]
        << "</text>\n";
  }
  svg << "<rect x=\"" << kMarginL << "\" y=\"" << kMarginT << "\" width=\"" << plot_w
      << "\" height=\"" << plot_h << "\" fill=\"none\" stroke=\"black\"/>\n";
  svg << "<text x=\"" << kMarginL + plot_w / 2 << "\" y=\"" << kHeight - 12
      << "\" text-anchor=\"middle\">" << x_label << "</text>\n";
  svg << "<text x=\"16\" y=\"" << kMarginT + plot_h / 2
      << "\" text-anchor=\"middle\" transform=\"rotate(-90 16 " << kMarginT + plot_h / 2 << ")\">"
      << y_label << "</text>\n";
  for (std::size_t s = 0; s < n_series; ++s) {
    const double ly = kMarginT + 14 + 18 * static_cast<double>(s);
    svg << "<rect x=\"" << kMarginL + plot_w + 10 << "\" y=\"" << fmt(ly - 10)
        << "\" width=\"12\" height=\"12\" fill=\"" << kPalette[s % kPaletteSize] << "\"/>\n";
    svg << "<text x=\"" << kMarginL + plot_w + 28 << "\" y=\"" << fmt(ly) << "\">"
        << series[s].first << "</text>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

void SvgBarChart::write(const std::string& path) const { write_file(path, render()); }

}  // namespace rmpc
