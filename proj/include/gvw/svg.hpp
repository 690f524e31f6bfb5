#pragma once

#include <string>
#include <vector>

namespace gvw {

struct PlotSeries {
  std::string name;
  std::vector<double> x;
  std::vector<double> y;
};

struct PlotSpec {
  std::string title;
  std::string x_label;
  std::string y_label;
  std::vector<PlotSeries> series;
};

/// Line chart in a fixed 800x600 viewBox with linear axes and one polyline
/// per series. Non-finite points are skipped.
std::string render_svg(const PlotSpec& plot);

}  // namespace gvw
