#include "spatialiv/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace spatialiv {

namespace {

constexpr double kWidth = 640, kHeight = 420, kLeft = 70, kRight = 20, kTop = 40, kBottom = 50;

struct Frame {
  double x0, x1, y0, y1;

  double px(double x) const { return kLeft + (x - x0) / (x1 - x0) * (kWidth - kLeft - kRight); }
  double py(double y) const { return kHeight - kBottom - (y - y0) / (y1 - y0) * (kHeight - kTop - kBottom); }
};

Frame frame_for(const PlotSeries& s) {
  Frame f{0, 1, 0, 1};
  if (s.x.empty() || s.y.empty()) return f;
  auto [xmin, xmax] = std::minmax_element(s.x.begin(), s.x.end());
  f.x0 = *xmin;
  f.x1 = *xmax;
  double lo = *std::min_element(s.y.begin(), s.y.end());
  double hi = *std::max_element(s.y.begin(), s.y.end());
  for (double v : s.lo) {
    if (std::isfinite(v)) lo = std::min(lo, v);
  }
  for (double v : s.hi) {
    if (std::isfinite(v)) hi = std::max(hi, v);
  }
  f.y0 = lo;
  f.y1 = hi;
  if (f.x1 <= f.x0) {
    f.x0 -= 0.5;
    f.x1 += 0.5;
  }
  if (f.y1 <= f.y0) {
    f.y0 -= 0.5;
    f.y1 += 0.5;
  }
  const double pad = 0.05 * (f.y1 - f.y0);
  f.y0 -= pad;
  f.y1 += pad;
  return f;
}

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '<') out += "&lt;";
    else if (c == '>') out += "&gt;";
    else if (c == '&') out += "&amp;";
    else out += c;
  }
  return out;
}

void header(std::ostringstream& out, const Frame& f, const PlotLabels& labels) {
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
      << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<text x=\"" << kWidth / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">"
      << escape(labels.title) << "</text>\n";
  const double left = kLeft, right = kWidth - kRight, top = kTop, bottom = kHeight - kBottom;
  out << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << right - left << "\" height=\""
      << bottom - top << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (int k = 0; k <= 4; ++k) {
    const double xv = f.x0 + (f.x1 - f.x0) * k / 4.0;
    const double yv = f.y0 + (f.y1 - f.y0) * k / 4.0;
    out << "<text x=\"" << num(f.px(xv)) << "\" y=\"" << bottom + 16 << "\" text-anchor=\"middle\">"
        << num(xv) << "</text>\n";
    out << "<text x=\"" << left - 6 << "\" y=\"" << num(f.py(yv) + 4) << "\" text-anchor=\"end\">"
        << num(yv) << "</text>\n";
  }
  out << "<text x=\"" << (left + right) / 2 << "\" y=\"" << kHeight - 12 << "\" text-anchor=\"middle\">"
      << escape(labels.x_label) << "</text>\n";
  out << "<text x=\"16\" y=\"" << (top + bottom) / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 16 "
      << (top + bottom) / 2 << ")\">" << escape(labels.y_label) << "</text>\n";
}

}  // namespace

std::string svg_line_band(const PlotSeries& s, const PlotLabels& labels) {
  const Frame f = frame_for(s);
  std::ostringstream out;
  header(out, f, labels);
  if (!s.lo.empty() && s.lo.size() == s.y.size()) {
    out << "<polygon fill=\"#9ecae1\" fill-opacity=\"0.6\" stroke=\"none\" points=\"";
    for (std::size_t i = 0; i < s.x.size(); ++i) out << num(f.px(s.x[i])) << "," << num(f.py(s.hi[i])) << " ";
    for (std::size_t i = s.x.size(); i-- > 0;) out << num(f.px(s.x[i])) << "," << num(f.py(s.lo[i])) << " ";
    out << "\"/>\n";
  }
  out << "<polyline fill=\"none\" stroke=\"#08519c\" stroke-width=\"2\" points=\"";
  for (std::size_t i = 0; i < s.x.size(); ++i) out << num(f.px(s.x[i])) << "," << num(f.py(s.y[i])) << " ";
  out << "\"/>\n</svg>\n";
  return out.str();
}

std::string svg_points_whiskers(const PlotSeries& s, const PlotLabels& labels) {
  const Frame f = frame_for(s);
  std::ostringstream out;
  header(out, f, labels);
  for (std::size_t i = 0; i < s.x.size(); ++i) {
    const double x = f.px(s.x[i]);
    if (i < s.lo.size() && i < s.hi.size() && std::isfinite(s.lo[i]) && std::isfinite(s.hi[i])) {
      out << "<line x1=\"" << num(x) << "\" x2=\"" << num(x) << "\" y1=\"" << num(f.py(s.lo[i]))
          << "\" y2=\"" << num(f.py(s.hi[i])) << "\" stroke=\"black\"/>\n";
    }
    if (std::isfinite(s.y[i])) {
      out << "<circle cx=\"" << num(x) << "\" cy=\"" << num(f.py(s.y[i])) << "\" r=\"4\" fill=\"#08519c\"/>\n";
    }
  }
  out << "</svg>\n";
  return out.str();
}

}  // namespace spatialiv
