// Copyright 2026 The EnKS Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#ifndef ENKS_SVG_HPP_
#define ENKS_SVG_HPP_

// Minimal SVG line charts: truth plus each filter's ensemble mean for a set
// of channels, on shared axes.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <set>
#include <string>
#include <vector>

#include "enks/common.hpp"
#include "enks/record.hpp"

namespace enks {

namespace detail {

inline std::string XmlEscape(const std::string& s) {
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

inline std::string Fixed(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

inline std::string Tick(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4g", v);
  return buf;
}

}  // namespace detail

inline std::string RenderLineChart(const RunRecord& record,
                                   const std::vector<std::string>& channels,
                                   const std::string& title = "") {
  detail::Require(!channels.empty(), "emit_linechart: empty channel set");
  std::set<std::string> present;
  for (const auto& row : record.rows) present.insert(row.channel);
  for (const auto& c : channels) {
    detail::Require(present.count(c) > 0, "emit_linechart: unknown channel '" + c + "'");
  }

  struct Series {
    std::string label;
    std::string color;
    bool dashed = false;
    std::vector<std::pair<double, double>> points;
  };
  static constexpr std::array<const char*, 6> kPalette = {
      "#d62728", "#1f77b4", "#9467bd", "#2ca02c", "#ff7f0e", "#8c564b"};

  std::vector<Series> series;
  for (const auto& channel : channels) {
    Series truth{"truth " + channel, "#000000", false, {}};
    std::vector<Series> filt;
    for (std::size_t f = 0; f < record.filters.size(); ++f) {
      filt.push_back({record.filters[f] + " " + channel,
                      kPalette[f % kPalette.size()], true, {}});
    }
    for (const auto& row : record.rows) {
      if (row.channel != channel) continue;
      truth.points.emplace_back(row.time, row.truth);
      for (std::size_t f = 0; f < filt.size(); ++f) {
        filt[f].points.emplace_back(row.time, row.mean[f]);
      }
    }
    series.push_back(std::move(truth));
    for (auto& s : filt) series.push_back(std::move(s));
  }

  double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin;
  double ymin = xmin, ymax = -xmin;
  for (const auto& s : series) {
    for (const auto& [x, y] : s.points) {
      if (!std::isfinite(x) || !std::isfinite(y)) continue;
      xmin = std::min(xmin, x);
      xmax = std::max(xmax, x);
      ymin = std::min(ymin, y);
      ymax = std::max(ymax, y);
    }
  }
  if (!std::isfinite(xmin)) xmin = 0.0, xmax = 1.0, ymin = 0.0, ymax = 1.0;
  if (xmax == xmin) xmax = xmin + 1.0;
  if (ymax == ymin) {
    ymin -= 1.0;
    ymax += 1.0;
  }

  constexpr double kWidth = 800, kHeight = 480;
  constexpr double kLeft = 80, kRight = 180, kTop = 40, kBottom = 60;
  const double plot_w = kWidth - kLeft - kRight;
  const double plot_h = kHeight - kTop - kBottom;
  auto px = [&](double x) { return kLeft + (x - xmin) / (xmax - xmin) * plot_w; };
  auto py = [&](double y) { return kTop + (ymax - y) / (ymax - ymin) * plot_h; };

  std::string svg;
  svg += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"800\" height=\"480\" "
         "viewBox=\"0 0 800 480\">\n";
  svg += "<rect x=\"0\" y=\"0\" width=\"800\" height=\"480\" fill=\"#ffffff\"/>\n";
  if (!title.empty()) {
    svg += "<text x=\"" + detail::Fixed(kLeft) + "\" y=\"24\" font-size=\"16\">" +
           detail::XmlEscape(title) + "</text>\n";
  }
  // Axes.
  svg += "<g class=\"axes\" stroke=\"#444444\" stroke-width=\"1\">\n";
  svg += "<line x1=\"" + detail::Fixed(kLeft) + "\" y1=\"" + detail::Fixed(kTop + plot_h) +
         "\" x2=\"" + detail::Fixed(kLeft + plot_w) + "\" y2=\"" +
         detail::Fixed(kTop + plot_h) + "\"/>\n";
  svg += "<line x1=\"" + detail::Fixed(kLeft) + "\" y1=\"" + detail::Fixed(kTop) +
         "\" x2=\"" + detail::Fixed(kLeft) + "\" y2=\"" + detail::Fixed(kTop + plot_h) +
         "\"/>\n";
  svg += "</g>\n";
  for (int i = 0; i <= 4; ++i) {
    const double fx = xmin + (xmax - xmin) * i / 4.0;
    const double fy = ymin + (ymax - ymin) * i / 4.0;
    svg += "<text x=\"" + detail::Fixed(px(fx)) + "\" y=\"" +
           detail::Fixed(kTop + plot_h + 18) +
           "\" font-size=\"11\" text-anchor=\"middle\">" + detail::Tick(fx) + "</text>\n";
    svg += "<text x=\"" + detail::Fixed(kLeft - 6) + "\" y=\"" + detail::Fixed(py(fy) + 4) +
           "\" font-size=\"11\" text-anchor=\"end\">" + detail::Tick(fy) + "</text>\n";
  }
  svg += "<text class=\"xlabel\" x=\"" + detail::Fixed(kLeft + plot_w / 2) + "\" y=\"" +
         detail::Fixed(kHeight - 16) +
         "\" font-size=\"13\" text-anchor=\"middle\">time</text>\n";
  svg += "<text class=\"ylabel\" x=\"18\" y=\"" + detail::Fixed(kTop + plot_h / 2) +
         "\" font-size=\"13\" text-anchor=\"middle\" transform=\"rotate(-90 18 " +
         detail::Fixed(kTop + plot_h / 2) + ")\">value</text>\n";

  double legend_y = kTop + 10;
  for (const auto& s : series) {
    svg += "<polyline fill=\"none\" stroke=\"" + s.color + "\" stroke-width=\"1.5\"";
    if (s.dashed) svg += " stroke-dasharray=\"6 3\"";
    svg += " data-label=\"" + detail::XmlEscape(s.label) + "\" points=\"";
    bool first = true;
    for (const auto& [x, y] : s.points) {
      if (!std::isfinite(x) || !std::isfinite(y)) continue;
      if (!first) svg += ' ';
      svg += detail::Fixed(px(x)) + "," + detail::Fixed(py(y));
      first = false;
    }
    svg += "\"/>\n";
    svg += "<text x=\"" + detail::Fixed(kLeft + plot_w + 10) + "\" y=\"" +
           detail::Fixed(legend_y) + "\" font-size=\"11\" fill=\"" + s.color + "\">" +
           detail::XmlEscape(s.label) + "</text>\n";
    legend_y += 14;
  }
  svg += "</svg>\n";
  return svg;
}

inline void EmitLineChart(const RunRecord& record,
                          const std::vector<std::string>& channels,
                          const std::string& path, const std::string& title = "") {
  const std::string svg = RenderLineChart(record, channels, title);
  std::ofstream file(path, std::ios::binary);
  if (!file) throw InvalidArgument("emit_linechart: cannot open " + path);
  file << svg;
}

}  // namespace enks

#endif  // ENKS_SVG_HPP_
