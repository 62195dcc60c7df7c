// Minimal deterministic SVG line/step plots. No timestamps, no randomness,
// fixed formatting: identical inputs render byte-identical files.
#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include <cdrift/common.hpp>

namespace cdrift {

struct SvgSeries {
  std::string label;
  std::vector<std::pair<double, double>> points;  // (x, y), x ascending
  bool step = false;                              // right-continuous steps
};

struct SvgPlotOptions {
  std::string title;
  std::string x_label;
  std::string y_label;
  std::vector<double> dashed_x;  // vertical dashed markers
  std::vector<double> dashed_y;  // horizontal dashed markers
  int width = 720;
  int height = 480;
  double y_min_hint = std::numeric_limits<double>::quiet_NaN();
  double y_max_hint = std::numeric_limits<double>::quiet_NaN();
};

namespace detail {

inline const char* series_color(std::size_t i) {
  static const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c",
                                   "#9467bd", "#ff7f0e", "#8c564b"};
  return kPalette[i % (sizeof(kPalette) / sizeof(kPalette[0]))];
}

inline std::string svg_num(double v) { return fmt_double(v, 6); }

}  // namespace detail

inline std::string render_svg_plot(const std::vector<SvgSeries>& series,
                                   const SvgPlotOptions& options) {
  const double margin_left = 64, margin_right = 16, margin_top = 32,
               margin_bottom = 48;
  const double plot_w = options.width - margin_left - margin_right;
  const double plot_h = options.height - margin_top - margin_bottom;

  double x_min = std::numeric_limits<double>::infinity(), x_max = -x_min;
  double y_min = std::numeric_limits<double>::infinity(), y_max = -y_min;
  for (const auto& s : series)
    for (const auto& [x, y] : s.points) {
      x_min = std::min(x_min, x);
      x_max = std::max(x_max, x);
      y_min = std::min(y_min, y);
      y_max = std::max(y_max, y);
    }
  for (double x : options.dashed_x) {
    x_min = std::min(x_min, x);
    x_max = std::max(x_max, x);
  }
  for (double y : options.dashed_y) {
    y_min = std::min(y_min, y);
    y_max = std::max(y_max, y);
  }
  if (!std::isfinite(x_min)) {
    x_min = 0.0;
    x_max = 1.0;
    y_min = 0.0;
    y_max = 1.0;
  }
  if (!std::isnan(options.y_min_hint)) y_min = options.y_min_hint;
  if (!std::isnan(options.y_max_hint)) y_max = options.y_max_hint;
  if (x_max == x_min) x_max = x_min + 1.0;
  if (y_max == y_min) y_max = y_min + 1.0;
  double x_pad = 0.03 * (x_max - x_min);
  double y_pad = 0.05 * (y_max - y_min);
  x_min -= x_pad;
  x_max += x_pad;
  y_min -= y_pad;
  y_max += y_pad;

  auto px = [&](double x) {
    return margin_left + (x - x_min) / (x_max - x_min) * plot_w;
  };
  auto py = [&](double y) {
    return margin_top + (y_max - y) / (y_max - y_min) * plot_h;
  };

  std::string svg;
  svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" +
         std::to_string(options.width) + "\" height=\"" +
         std::to_string(options.height) + "\">\n";
  svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";

  // Axes.
  svg += "<line x1=\"" + detail::svg_num(margin_left) + "\" y1=\"" +
         detail::svg_num(margin_top) + "\" x2=\"" + detail::svg_num(margin_left) +
         "\" y2=\"" + detail::svg_num(margin_top + plot_h) +
         "\" stroke=\"black\"/>\n";
  svg += "<line x1=\"" + detail::svg_num(margin_left) + "\" y1=\"" +
         detail::svg_num(margin_top + plot_h) + "\" x2=\"" +
         detail::svg_num(margin_left + plot_w) + "\" y2=\"" +
         detail::svg_num(margin_top + plot_h) + "\" stroke=\"black\"/>\n";

  // Ticks: five evenly spaced per axis.
  for (int i = 0; i <= 4; ++i) {
    double fx = x_min + (x_max - x_min) * i / 4.0;
    double fy = y_min + (y_max - y_min) * i / 4.0;
    svg += "<line x1=\"" + detail::svg_num(px(fx)) + "\" y1=\"" +
           detail::svg_num(margin_top + plot_h) + "\" x2=\"" +
           detail::svg_num(px(fx)) + "\" y2=\"" +
           detail::svg_num(margin_top + plot_h + 5) + "\" stroke=\"black\"/>\n";
    svg += "<text x=\"" + detail::svg_num(px(fx)) + "\" y=\"" +
           detail::svg_num(margin_top + plot_h + 20) +
           "\" font-size=\"11\" text-anchor=\"middle\">" + fmt_double(fx, 4) +
           "</text>\n";
    svg += "<line x1=\"" + detail::svg_num(margin_left - 5) + "\" y1=\"" +
           detail::svg_num(py(fy)) + "\" x2=\"" + detail::svg_num(margin_left) +
           "\" y2=\"" + detail::svg_num(py(fy)) + "\" stroke=\"black\"/>\n";
    svg += "<text x=\"" + detail::svg_num(margin_left - 8) + "\" y=\"" +
           detail::svg_num(py(fy) + 4) +
           "\" font-size=\"11\" text-anchor=\"end\">" + fmt_double(fy, 4) +
           "</text>\n";
  }

  // Dashed vertical markers (e.g. 20%-survival times).
  for (double x : options.dashed_x) {
    svg += "<line x1=\"" + detail::svg_num(px(x)) + "\" y1=\"" +
           detail::svg_num(margin_top) + "\" x2=\"" + detail::svg_num(px(x)) +
           "\" y2=\"" + detail::svg_num(margin_top + plot_h) +
           "\" stroke=\"#555555\" stroke-dasharray=\"6,4\"/>\n";
  }
  for (double y : options.dashed_y) {
    svg += "<line x1=\"" + detail::svg_num(margin_left) + "\" y1=\"" +
           detail::svg_num(py(y)) + "\" x2=\"" +
           detail::svg_num(margin_left + plot_w) + "\" y2=\"" +
           detail::svg_num(py(y)) +
           "\" stroke=\"#555555\" stroke-dasharray=\"6,4\"/>\n";
  }

  // Series.
  for (std::size_t si = 0; si < series.size(); ++si) {
    const auto& s = series[si];
    if (s.points.empty()) continue;
    std::string path = "M " + detail::svg_num(px(s.points[0].first)) + " " +
                       detail::svg_num(py(s.points[0].second));
    for (std::size_t i = 1; i < s.points.size(); ++i) {
      if (s.step)
        path += " L " + detail::svg_num(px(s.points[i].first)) + " " +
                detail::svg_num(py(s.points[i - 1].second));
      path += " L " + detail::svg_num(px(s.points[i].first)) + " " +
              detail::svg_num(py(s.points[i].second));
    }
    svg += "<path d=\"" + path + "\" fill=\"none\" stroke=\"" +
           detail::series_color(si) + "\" stroke-width=\"1.5\"/>\n";
    // Legend entry.
    double ly = margin_top + 14.0 * static_cast<double>(si) + 4.0;
    svg += "<line x1=\"" + detail::svg_num(margin_left + plot_w - 130) + "\" y1=\"" +
           detail::svg_num(ly) + "\" x2=\"" +
           detail::svg_num(margin_left + plot_w - 110) + "\" y2=\"" +
           detail::svg_num(ly) + "\" stroke=\"" + detail::series_color(si) +
           "\" stroke-width=\"1.5\"/>\n";
    svg += "<text x=\"" + detail::svg_num(margin_left + plot_w - 105) + "\" y=\"" +
           detail::svg_num(ly + 4) + "\" font-size=\"11\">" + s.label + "</text>\n";
  }

  // Labels and title.
  svg += "<text x=\"" + detail::svg_num(margin_left + plot_w / 2) + "\" y=\"18\" "
         "font-size=\"13\" text-anchor=\"middle\">" + options.title + "</text>\n";
  svg += "<text x=\"" + detail::svg_num(margin_left + plot_w / 2) + "\" y=\"" +
         detail::svg_num(static_cast<double>(options.height) - 8) +
         "\" font-size=\"12\" text-anchor=\"middle\">" + options.x_label +
         "</text>\n";
  svg += "<text x=\"14\" y=\"" + detail::svg_num(margin_top + plot_h / 2) +
         "\" font-size=\"12\" text-anchor=\"middle\" transform=\"rotate(-90 14 " +
         detail::svg_num(margin_top + plot_h / 2) + ")\">" + options.y_label +
         "</text>\n";
  svg += "</svg>\n";
  return svg;
}

}  // namespace cdrift
