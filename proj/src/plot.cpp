// Copyright 2026 The stepwidth Authors
// SPDX-License-Identifier: Apache-2.0

#include "stepwidth/plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace stepwidth {

namespace {

struct Rgb {
  int r, g, b;
};

constexpr Rgb kSmall{240, 200, 30};
constexpr Rgb kLarge{30, 140, 60};

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  return buf;
}

std::string color_for(WidthRatio w, WidthRatio lo, WidthRatio hi) {
  const double f = hi.eighths == lo.eighths ? 1.0 : static_cast<double>(w.eighths - lo.eighths) / (hi.eighths - lo.eighths);
  auto mix = [f](int a, int b) { return static_cast<int>(std::lround(a + f * (b - a))); };
  char buf[8];
  std::snprintf(buf, sizeof buf, "#%02x%02x%02x", mix(kSmall.r, kLarge.r), mix(kSmall.g, kLarge.g),
                mix(kSmall.b, kLarge.b));
  return buf;
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
  out << text;
  if (!out) throw std::runtime_error("failed writing '" + path.string() + "'");
}

}  // namespace

std::string strategy_csv(const Strategy& s) {
  std::ostringstream out;
  out << "step,width_ratio\n";
  for (std::size_t i = 0; i < s.size(); ++i) out << i << ',' << s[i].value() << '\n';
  return out.str();
}

std::string strategy_svg(const Strategy& s, std::span<const WidthRatio> options) {
  if (s.size() == 0) throw std::invalid_argument("cannot plot an empty strategy");
  WidthRatio lo = *std::min_element(s.widths.begin(), s.widths.end());
  WidthRatio hi = *std::max_element(s.widths.begin(), s.widths.end());
  if (!options.empty()) {
    lo = std::min(lo, *std::min_element(options.begin(), options.end()));
    hi = std::max(hi, *std::max_element(options.begin(), options.end()));
  }
  using L = PlotLayout;
  const double step_w = L::kBarWidth / static_cast<double>(s.size());
  const double total_h = L::kGraphTop + L::kGraphHeight + 40.0;

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << fmt(L::kLeft * 2 + L::kBarWidth) << "\" height=\""
      << fmt(total_h) << "\">\n";
  svg << "<rect x=\"0\" y=\"0\" width=\"100%\" height=\"100%\" fill=\"#ffffff\" class=\"background\"/>\n";
  svg << "<text x=\"" << fmt(L::kLeft) << "\" y=\"20\" font-size=\"12\">width per step (yellow = "
      << lo.to_string() << ", green = " << hi.to_string() << ")</text>\n";

  for (std::size_t begin = 0; begin < s.size();) {
    std::size_t end = begin;
    while (end < s.size() && s[end] == s[begin]) ++end;
    svg << "<rect class=\"bar\" x=\"" << fmt(L::kLeft + begin * step_w) << "\" y=\"" << fmt(L::kBarTop)
        << "\" width=\"" << fmt((end - begin) * step_w) << "\" height=\"" << fmt(L::kBarHeight) << "\" fill=\""
        << color_for(s[begin], lo, hi) << "\" data-steps=\"" << begin << ":" << end << "\" data-width=\""
        << s[begin].to_string() << "\"/>\n";
    begin = end;
  }

  const double bottom = L::kGraphTop + L::kGraphHeight;
  svg << "<line class=\"axis\" x1=\"" << fmt(L::kLeft) << "\" y1=\"" << fmt(bottom) << "\" x2=\""
      << fmt(L::kLeft + L::kBarWidth) << "\" y2=\"" << fmt(bottom) << "\" stroke=\"#000000\"/>\n";
  svg << "<line class=\"axis\" x1=\"" << fmt(L::kLeft) << "\" y1=\"" << fmt(L::kGraphTop) << "\" x2=\""
      << fmt(L::kLeft) << "\" y2=\"" << fmt(bottom) << "\" stroke=\"#000000\"/>\n";
  svg << "<text x=\"" << fmt(L::kLeft - 35) << "\" y=\"" << fmt(L::kGraphTop + 4) << "\" font-size=\"10\">1.0</text>\n";
  svg << "<text x=\"" << fmt(L::kLeft - 35) << "\" y=\"" << fmt(bottom + 4) << "\" font-size=\"10\">0.0</text>\n";
  svg << "<text x=\"" << fmt(L::kLeft) << "\" y=\"" << fmt(bottom + 20) << "\" font-size=\"10\">step 0</text>\n";
  svg << "<text x=\"" << fmt(L::kLeft + L::kBarWidth - 60) << "\" y=\"" << fmt(bottom + 20)
      << "\" font-size=\"10\">step " << s.size() - 1 << "</text>\n";

  svg << "<polyline class=\"width-line\" fill=\"none\" stroke=\"#1f4e9c\" stroke-width=\"1.5\" points=\"";
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i) svg << ' ';
    svg << fmt(L::kLeft + (i + 0.5) * step_w) << ',' << fmt(bottom - s[i].value() * L::kGraphHeight);
  }
  svg << "\"/>\n</svg>\n";
  return svg.str();
}

void plot_strategy(const Strategy& s, std::span<const WidthRatio> options, const std::filesystem::path& base) {
  const std::string svg = strategy_svg(s, options);
  auto svg_path = base;
  svg_path += ".svg";
  auto csv_path = base;
  csv_path += ".csv";
  write_file(svg_path, svg);
  write_file(csv_path, strategy_csv(s));
}

}  // namespace stepwidth
