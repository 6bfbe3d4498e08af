#pragma once

#include <string>
#include <utility>
#include <vector>

namespace nop::bench {

struct Series {
  std::string name;
  std::vector<std::pair<double, double>> points;  // sorted by x
};

struct ChartSpec {
  std::string title;
  std::string x_label;
  std::string y_label;
  double y_min = 0.0;
  /// Upper y limit; raised to fit the data when smaller.
  double y_max = 1.0;
  int width = 640;
  int height = 400;
};

/// Standalone SVG line chart with markers and a legend.
std::string line_chart_svg(const ChartSpec& spec, const std::vector<Series>& series);

}  // namespace nop::bench
