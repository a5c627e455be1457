// Copyright 2026 The Hedonic Index Authors
// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef HEDONIC_SVG_HPP_
#define HEDONIC_SVG_HPP_

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "hedonic/detail/csv.hpp"
#include "hedonic/error.hpp"

// Static SVG line charts. Output depends only on the inputs: coordinates are
// printed with fixed precision and series keep their given order.
namespace hedonic::svg {

struct Series {
  std::string name;
  std::vector<std::pair<double, double>> points;  // (x, y), drawn in order
};

struct LineChart {
  std::string title;
  std::string x_label;
  std::string y_label;
  std::vector<Series> series;
  /// Optional tick labels for integer x positions (e.g. YYYYMM months).
  std::vector<std::string> x_ticks;
  int width = 720;
  int height = 420;
};

namespace detail {

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

inline std::string num(double v) { return hedonic::detail::format_fixed(v, 2); }

/// Round step (1, 2 or 5 times a power of ten) giving about `target` ticks.
inline double nice_step(double span, int target) {
  const double raw = span / std::max(1, target);
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  for (double m : {1.0, 2.0, 5.0, 10.0})
    if (m * mag >= raw) return m * mag;
  return 10.0 * mag;
}

inline std::string tick_label(double v, double step) {
  const int digits = step >= 1.0 ? 0 : static_cast<int>(std::ceil(-std::log10(step)));
  return hedonic::detail::format_fixed(v, digits);
}

}  // namespace detail

inline constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd",
                                           "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};

inline std::string render(const LineChart& c) {
  using detail::num;
  double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
  for (const auto& s : c.series)
    for (auto [x, y] : s.points) {
      if (!std::isfinite(x) || !std::isfinite(y)) continue;
      x0 = std::min(x0, x);
      x1 = std::max(x1, x);
      y0 = std::min(y0, y);
      y1 = std::max(y1, y);
    }
  if (!std::isfinite(x0)) throw UndefinedError("chart '" + c.title + "' has no finite points");
  if (x1 == x0) x1 = x0 + 1.0;
  if (y1 == y0) {
    y0 -= 0.5;
    y1 += 0.5;
  }
  const double ystep = detail::nice_step(y1 - y0, 6);
  y0 = std::floor(y0 / ystep) * ystep;
  y1 = std::ceil(y1 / ystep) * ystep;

  const double left = 70, right = 170, top = 40, bottom = 55;
  const double pw = c.width - left - right, ph = c.height - top - bottom;
  auto px = [&](double x) { return left + (x - x0) / (x1 - x0) * pw; };
  auto py = [&](double y) { return top + (1.0 - (y - y0) / (y1 - y0)) * ph; };

  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << c.width << "\" height=\"" << c.height
     << "\" viewBox=\"0 0 " << c.width << ' ' << c.height << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << detail::num(c.width / 2.0) << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">"
     << detail::escape(c.title) << "</text>\n";

  // Grid and y ticks.
  for (double y = y0; y <= y1 + ystep * 1e-9; y += ystep) {
    os << "<line x1=\"" << num(left) << "\" y1=\"" << num(py(y)) << "\" x2=\"" << num(left + pw) << "\" y2=\""
       << num(py(y)) << "\" stroke=\"#e0e0e0\"/>\n";
    os << "<text x=\"" << num(left - 6) << "\" y=\"" << num(py(y) + 4) << "\" text-anchor=\"end\">"
       << detail::tick_label(std::fabs(y) < ystep * 1e-9 ? 0.0 : y, ystep) << "</text>\n";
  }
  // x ticks.
  const double xstep = std::max(1.0, detail::nice_step(x1 - x0, 8));
  for (double x = std::ceil(x0 / xstep) * xstep; x <= x1 + 1e-9; x += xstep) {
    std::string label = detail::tick_label(x, xstep);
    const double r = std::round(x);
    if (!c.x_ticks.empty() && r >= 0 && r < static_cast<double>(c.x_ticks.size()))
      label = c.x_ticks[static_cast<std::size_t>(r)];
    os << "<line x1=\"" << num(px(x)) << "\" y1=\"" << num(top + ph) << "\" x2=\"" << num(px(x)) << "\" y2=\""
       << num(top + ph + 4) << "\" stroke=\"black\"/>\n";
    os << "<text x=\"" << num(px(x)) << "\" y=\"" << num(top + ph + 17) << "\" text-anchor=\"middle\">"
       << detail::escape(label) << "</text>\n";
  }
  os << "<rect x=\"" << num(left) << "\" y=\"" << num(top) << "\" width=\"" << num(pw) << "\" height=\"" << num(ph)
     << "\" fill=\"none\" stroke=\"black\"/>\n";
  os << "<text x=\"" << num(left + pw / 2) << "\" y=\"" << num(c.height - 12.0) << "\" text-anchor=\"middle\">"
     << detail::escape(c.x_label) << "</text>\n";
  os << "<text transform=\"translate(16," << num(top + ph / 2) << ") rotate(-90)\" text-anchor=\"middle\">"
     << detail::escape(c.y_label) << "</text>\n";

  for (std::size_t k = 0; k < c.series.size(); ++k) {
    const auto& s = c.series[k];
    const char* color = kPalette[k % (sizeof(kPalette) / sizeof(kPalette[0]))];
    std::string pts;
    for (auto [x, y] : s.points) {
      if (!std::isfinite(x) || !std::isfinite(y)) continue;
      if (!pts.empty()) pts += ' ';
      pts += num(px(x)) + "," + num(py(y));
    }
    os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.8\" points=\"" << pts << "\"/>\n";
    if (s.points.size() <= 12)
      for (auto [x, y] : s.points)
        if (std::isfinite(x) && std::isfinite(y))
          os << "<circle cx=\"" << num(px(x)) << "\" cy=\"" << num(py(y)) << "\" r=\"2.5\" fill=\"" << color
             << "\"/>\n";
    const double ly = top + 10 + 16.0 * static_cast<double>(k);
    os << "<line x1=\"" << num(left + pw + 12) << "\" y1=\"" << num(ly) << "\" x2=\"" << num(left + pw + 30)
       << "\" y2=\"" << num(ly) << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
    os << "<text x=\"" << num(left + pw + 35) << "\" y=\"" << num(ly + 4) << "\">" << detail::escape(s.name)
       << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

}  // namespace hedonic::svg

#endif  // HEDONIC_SVG_HPP_
