#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

namespace aepg {

struct PlotSeries {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
};

namespace detail {

inline std::string fmt_coord(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

inline std::string fmt_tick(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3g", v);
  return buf;
}

}  // namespace detail

// Minimal deterministic SVG line plot (no plotting dependency). The y axis
// uses a log scale when every value is positive and log_y is requested,
// otherwise it falls back to linear.
inline std::string render_line_plot_svg(const std::vector<PlotSeries>& series,
                                        const std::string& x_label,
                                        const std::string& y_label,
                                        bool log_y = true) {
  constexpr double width = 720, height = 480;
  constexpr double ml = 80, mr = 160, mt = 30, mb = 55;
  const double pw = width - ml - mr, ph = height - mt - mb;

  double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin;
  double ymin = xmin, ymax = -xmin;
  bool any = false, all_positive = true;
  for (const auto& s : series)
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      any = true;
      xmin = std::min(xmin, s.x[i]);
      xmax = std::max(xmax, s.x[i]);
      ymin = std::min(ymin, s.y[i]);
      ymax = std::max(ymax, s.y[i]);
      if (s.y[i] <= 0.0) all_positive = false;
    }
  if (!any) {
    xmin = 0, xmax = 1, ymin = 0, ymax = 1;
  }
  const bool use_log = log_y && all_positive && any && ymin > 0.0;
  const auto ty = [&](double y) { return use_log ? std::log10(y) : y; };
  double ty_min = ty(ymin), ty_max = ty(ymax);
  if (xmax <= xmin) xmax = xmin + 1.0;
  if (ty_max <= ty_min) ty_max = ty_min + 1.0;

  const auto sx = [&](double x) { return ml + pw * (x - xmin) / (xmax - xmin); };
  const auto sy = [&](double y) {
    return mt + ph * (1.0 - (ty(y) - ty_min) / (ty_max - ty_min));
  };

  static const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                  "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"};

  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width
     << "\" height=\"" << height << "\">\n";
  os << "<rect width=\"" << width << "\" height=\"" << height
     << "\" fill=\"white\"/>\n";
  os << "<rect x=\"" << ml << "\" y=\"" << mt << "\" width=\"" << pw
     << "\" height=\"" << ph << "\" fill=\"none\" stroke=\"black\"/>\n";

  // ticks
  for (int k = 0; k <= 4; ++k) {
    const double fx = xmin + (xmax - xmin) * k / 4.0;
    const double px = sx(fx);
    os << "<line x1=\"" << detail::fmt_coord(px) << "\" y1=\"" << mt + ph
       << "\" x2=\"" << detail::fmt_coord(px) << "\" y2=\"" << mt + ph + 5
       << "\" stroke=\"black\"/>\n";
    os << "<text x=\"" << detail::fmt_coord(px) << "\" y=\"" << mt + ph + 20
       << "\" font-size=\"11\" text-anchor=\"middle\">" << detail::fmt_tick(fx)
       << "</text>\n";

    const double fy = ty_min + (ty_max - ty_min) * k / 4.0;
    const double vy = use_log ? std::pow(10.0, fy) : fy;
    const double py = mt + ph * (1.0 - static_cast<double>(k) / 4.0);
    os << "<line x1=\"" << ml - 5 << "\" y1=\"" << detail::fmt_coord(py)
       << "\" x2=\"" << ml << "\" y2=\"" << detail::fmt_coord(py)
       << "\" stroke=\"black\"/>\n";
    os << "<text x=\"" << ml - 8 << "\" y=\"" << detail::fmt_coord(py + 4)
       << "\" font-size=\"11\" text-anchor=\"end\">" << detail::fmt_tick(vy)
       << "</text>\n";
  }

  os << "<text x=\"" << ml + pw / 2 << "\" y=\"" << height - 12
     << "\" font-size=\"13\" text-anchor=\"middle\">" << x_label << "</text>\n";
  os << "<text x=\"18\" y=\"" << mt + ph / 2
     << "\" font-size=\"13\" text-anchor=\"middle\" transform=\"rotate(-90 18 "
     << mt + ph / 2 << ")\">" << y_label << (use_log ? " (log)" : "")
     << "</text>\n";

  for (std::size_t si = 0; si < series.size(); ++si) {
    const auto& s = series[si];
    const char* color = palette[si % 8];
    os << "<polyline fill=\"none\" stroke=\"" << color
       << "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (i) os << ' ';
      os << detail::fmt_coord(sx(s.x[i])) << ',' << detail::fmt_coord(sy(s.y[i]));
    }
    os << "\"/>\n";

    const double ly = mt + 16 + 18.0 * static_cast<double>(si);
    os << "<line x1=\"" << ml + pw + 10 << "\" y1=\"" << detail::fmt_coord(ly - 4)
       << "\" x2=\"" << ml + pw + 30 << "\" y2=\"" << detail::fmt_coord(ly - 4)
       << "\" stroke=\"" << color << "\" stroke-width=\"1.5\"/>\n";
    os << "<text x=\"" << ml + pw + 35 << "\" y=\"" << detail::fmt_coord(ly)
       << "\" font-size=\"11\">" << s.label << "</text>\n";
  }

  os << "</svg>\n";
  return os.str();
}

}  // namespace aepg
