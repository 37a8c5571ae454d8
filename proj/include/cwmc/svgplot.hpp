#pragma once

#include <string>
#include <vector>

namespace cwmc {

struct SvgSeries {
  std::vector<double> x;
  std::vector<double> y;
  std::string label;
};

struct SvgPlotOptions {
  std::string title;
  std::string xlabel;
  std::string ylabel;
  bool logx = false;
  bool logy = false;
  int width = 860;
  int height = 520;
};

// Writes a line plot with axis ticks and a legend. Log axes use base-10
// ticks; nonpositive values are invalid on a log axis and throw.
void write_svg_lines(const std::string& path, const std::vector<SvgSeries>& series,
                     const SvgPlotOptions& opts);

}  // namespace cwmc
