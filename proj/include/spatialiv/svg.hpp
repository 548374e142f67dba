#ifndef SPATIALIV_SVG_HPP
#define SPATIALIV_SVG_HPP

#include <string>
#include <vector>

namespace spatialiv {

struct PlotSeries {
  std::vector<double> x;
  std::vector<double> y;
  std::vector<double> lo;  // optional band / whiskers, same length as y
  std::vector<double> hi;
};

struct PlotLabels {
  std::string title;
  std::string x_label;
  std::string y_label;
};

/// Line with a shaded interval band.
std::string svg_line_band(const PlotSeries& s, const PlotLabels& labels);
/// Points with vertical interval whiskers.
std::string svg_points_whiskers(const PlotSeries& s, const PlotLabels& labels);

}  // namespace spatialiv

#endif
