#pragma once

#include "adlsense/error.hpp"
#include "adlsense/risk_scoring.hpp"
#include "adlsense/time.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace adlsense {

/// Fixed palette: resident = blue, risky template = red, history = grey.
enum class SeriesColour { resident, risky, historical };

inline std::string_view to_string(SeriesColour c) {
  switch (c) {
    case SeriesColour::resident: return "resident";
    case SeriesColour::risky: return "risky";
    case SeriesColour::historical: return "historical";
  }
  return "?";
}

inline std::string_view hex_of(SeriesColour c) {
  switch (c) {
    case SeriesColour::resident: return "#1f77b4";
    case SeriesColour::risky: return "#d62728";
    case SeriesColour::historical: return "#7f7f7f";
  }
  return "#000000";
}

struct RadarSeries {
  std::string label;
  FactorScores scores{};
  SeriesColour colour = SeriesColour::resident;
  double fill_opacity = 0.25;
};

/// The first series is drawn on top; legend entries follow series order.
struct RadarSpec {
  std::vector<RadarSeries> series;
  int size_px = 640;
  int ring_count = 5;
};

struct Point {
  double x = 0.0;
  double y = 0.0;
};

/// Axis 0 points straight up; axes proceed clockwise every 60 degrees.
inline Point axis_point(std::size_t factor_index, double score, Point center, double radius) {
  const double angle = (-90.0 + 60.0 * static_cast<double>(factor_index)) * std::numbers::pi / 180.0;
  return Point{center.x + score * radius * std::cos(angle), center.y + score * radius * std::sin(angle)};
}

struct RadarGeometry {
  Point center;
  double radius = 0.0;
};

inline constexpr int kRadarMargin = 60;

inline RadarGeometry radar_geometry(int size_px) {
  const double half = size_px / 2.0;
  return RadarGeometry{Point{half, half}, half - kRadarMargin};
}

namespace detail {

inline std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  std::string s = buf;
  if (s == "-0.000") s = "0.000";
  return s;
}

inline std::string xml_escape(std::string_view in) {
  std::string out;
  out.reserve(in.size());
  for (char c : in) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      case '\'': out += "&apos;"; break;
      default: out += c;
    }
  }
  return out;
}

inline std::string points_attr(const std::vector<Point>& pts) {
  std::string s;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    if (i) s += ' ';
    s += num(pts[i].x) + "," + num(pts[i].y);
  }
  return s;
}

inline void svg_open(std::ostringstream& out, int width, int height, std::string_view title) {
  out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
      << "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" << width << "\" height=\"" << height
      << "\" viewBox=\"0 0 " << width << ' ' << height << "\" font-family=\"sans-serif\">\n"
      << "  <title>" << xml_escape(title) << "</title>\n"
      << "  <rect class=\"background\" x=\"0\" y=\"0\" width=\"" << width << "\" height=\"" << height
      << "\" fill=\"#ffffff\"/>\n";
}

}  // namespace detail

inline void validate(const RadarSpec& spec) {
  if (spec.series.empty()) fail(ErrorCode::EmptySeries, "radar chart needs at least one series");
  if (spec.size_px <= 2 * kRadarMargin) fail(ErrorCode::Validation, "radar size too small");
  if (spec.ring_count < 1) fail(ErrorCode::Validation, "ring_count must be >= 1");
  for (const auto& s : spec.series) {
    for (const auto& v : s.scores) {
      if (v && !(*v >= 0.0 && *v <= 1.0)) fail(ErrorCode::Validation, "series '" + s.label + "' has a score outside [0,1]");
    }
    if (!(s.fill_opacity >= 0.0 && s.fill_opacity <= 1.0)) fail(ErrorCode::Validation, "fill opacity outside [0,1]");
  }
}

/// Six-axis radar chart. Missing scores are drawn at the centre and called
/// out with a '*' marker on the axis label plus a footnote.
inline std::string render_radar(const RadarSpec& spec) {
  validate(spec);
  const auto g = radar_geometry(spec.size_px);
  std::ostringstream out;
  detail::svg_open(out, spec.size_px, spec.size_px, "Fall risk radar");

  out << "  <g class=\"rings\" fill=\"none\" stroke=\"#cccccc\" stroke-width=\"1\">\n";
  for (int r = 1; r <= spec.ring_count; ++r) {
    std::vector<Point> ring;
    for (std::size_t i = 0; i < kFactorCount; ++i) {
      ring.push_back(axis_point(i, static_cast<double>(r) / spec.ring_count, g.center, g.radius));
    }
    out << "    <polygon class=\"ring\" points=\"" << detail::points_attr(ring) << "\"/>\n";
  }
  out << "  </g>\n";

  out << "  <g class=\"axes\" stroke=\"#999999\" stroke-width=\"1\">\n";
  for (std::size_t i = 0; i < kFactorCount; ++i) {
    Point end = axis_point(i, 1.0, g.center, g.radius);
    out << "    <line class=\"axis\" x1=\"" << detail::num(g.center.x) << "\" y1=\"" << detail::num(g.center.y)
        << "\" x2=\"" << detail::num(end.x) << "\" y2=\"" << detail::num(end.y) << "\"/>\n";
  }
  out << "  </g>\n";

  std::vector<std::pair<std::string, std::vector<std::string>>> missing;
  for (const auto& s : spec.series) {
    std::vector<std::string> names;
    for (auto f : kAllFactors) {
      if (!s.scores[index_of(f)]) names.emplace_back(to_string(f));
    }
    if (!names.empty()) missing.emplace_back(s.label, std::move(names));
  }

  out << "  <g class=\"labels\" font-size=\"14\" fill=\"#333333\">\n";
  for (auto f : kAllFactors) {
    const std::size_t i = index_of(f);
    Point p = axis_point(i, 1.0 + 22.0 / g.radius, g.center, g.radius);
    const char* anchor = std::fabs(p.x - g.center.x) < 1.0 ? "middle" : (p.x > g.center.x ? "start" : "end");
    bool has_gap = false;
    for (const auto& s : spec.series) has_gap = has_gap || !s.scores[i];
    out << "    <text class=\"axis-label\" x=\"" << detail::num(p.x) << "\" y=\"" << detail::num(p.y + 5.0)
        << "\" text-anchor=\"" << anchor << "\">" << to_string(f) << (has_gap ? "*" : "") << "</text>\n";
  }
  out << "  </g>\n";

  out << "  <g class=\"series\">\n";
  for (std::size_t n = spec.series.size(); n-- > 0;) {
    const auto& s = spec.series[n];
    std::vector<Point> pts;
    for (std::size_t i = 0; i < kFactorCount; ++i) pts.push_back(axis_point(i, s.scores[i].value_or(0.0), g.center, g.radius));
    out << "    <polygon class=\"series\" data-label=\"" << detail::xml_escape(s.label) << "\" data-colour=\""
        << to_string(s.colour) << "\" points=\"" << detail::points_attr(pts) << "\" fill=\"" << hex_of(s.colour)
        << "\" fill-opacity=\"" << detail::num(s.fill_opacity) << "\" stroke=\"" << hex_of(s.colour)
        << "\" stroke-width=\"2\"/>\n";
    for (std::size_t i = 0; i < kFactorCount; ++i) {
      if (s.scores[i]) continue;
      Point gap = axis_point(i, 0.0, g.center, g.radius);
      out << "    <circle class=\"null-marker\" cx=\"" << detail::num(gap.x) << "\" cy=\"" << detail::num(gap.y)
          << "\" r=\"4\" fill=\"none\" stroke=\"" << hex_of(s.colour) << "\"/>\n";
    }
  }
  out << "  </g>\n";

  out << "  <g class=\"legend\" font-size=\"13\" fill=\"#333333\">\n";
  for (std::size_t n = 0; n < spec.series.size(); ++n) {
    const auto& s = spec.series[n];
    const int y = 12 + 20 * static_cast<int>(n);
    out << "    <rect class=\"legend-swatch\" x=\"12\" y=\"" << y << "\" width=\"14\" height=\"14\" fill=\""
        << hex_of(s.colour) << "\"/>\n"
        << "    <text class=\"legend-label\" x=\"32\" y=\"" << y + 12 << "\">" << detail::xml_escape(s.label)
        << "</text>\n";
  }
  out << "  </g>\n";

  if (!missing.empty()) {
    int y = spec.size_px - 12 - 16 * static_cast<int>(missing.size() - 1);
    for (const auto& [label, names] : missing) {
      std::string joined;
      for (const auto& name : names) joined += (joined.empty() ? "" : ", ") + name;
      out << "  <text class=\"footnote\" x=\"12\" y=\"" << y << "\" font-size=\"11\" fill=\"#555555\">* "
          << detail::xml_escape(label) << ": no data for " << joined << "</text>\n";
      y += 16;
    }
  }
  out << "</svg>\n";
  return out.str();
}

struct TrendPointScores {
  Date date{};
  FactorScores scores{};
};

struct TrendLayout {
  int width = 640;
  int height = 320;
  int left = 50;
  int right = 20;
  int top = 30;
  int bottom = 40;

  double plot_width() const { return width - left - right; }
  double plot_height() const { return height - top - bottom; }
  double y_of(double score) const { return top + (1.0 - score) * plot_height(); }
};

/// One factor's score over time on a fixed [0,1] scale. Missing days break
/// the line; the template level, when given, is a dashed reference line.
inline std::string render_trend(const std::vector<TrendPointScores>& series, RiskFactor factor,
                                std::optional<double> template_level = std::nullopt, const TrendLayout& layout = {}) {
  if (series.empty()) fail(ErrorCode::EmptySeries, "trend chart needs at least one point");
  const std::size_t fi = index_of(factor);
  const int span = days_between(series.front().date, series.back().date);
  auto x_of = [&](Date d) {
    if (span <= 0) return layout.left + layout.plot_width() / 2.0;
    return layout.left + layout.plot_width() * days_between(series.front().date, d) / static_cast<double>(span);
  };

  std::ostringstream out;
  detail::svg_open(out, layout.width, layout.height, std::string(to_string(factor)) + " trend");
  out << "  <text class=\"chart-title\" x=\"" << layout.left << "\" y=\"20\" font-size=\"14\">" << to_string(factor)
      << "</text>\n";
  out << "  <g class=\"frame\" stroke=\"#999999\" stroke-width=\"1\" font-size=\"11\" fill=\"#333333\">\n";
  for (double tick : {0.0, 0.5, 1.0}) {
    const double y = layout.y_of(tick);
    out << "    <line class=\"gridline\" x1=\"" << layout.left << "\" y1=\"" << detail::num(y) << "\" x2=\""
        << layout.width - layout.right << "\" y2=\"" << detail::num(y) << "\" stroke=\"#eeeeee\"/>\n"
        << "    <text class=\"tick\" x=\"" << layout.left - 6 << "\" y=\"" << detail::num(y + 4)
        << "\" text-anchor=\"end\" stroke=\"none\">" << detail::num(tick).substr(0, 3) << "</text>\n";
  }
  out << "    <text class=\"date-label\" x=\"" << layout.left << "\" y=\"" << layout.height - 12
      << "\" stroke=\"none\">" << format_date(series.front().date) << "</text>\n";
  out << "    <text class=\"date-label\" x=\"" << layout.width - layout.right << "\" y=\"" << layout.height - 12
      << "\" text-anchor=\"end\" stroke=\"none\">" << format_date(series.back().date) << "</text>\n";
  out << "  </g>\n";

  if (template_level) {
    const double y = layout.y_of(std::clamp(*template_level, 0.0, 1.0));
    out << "  <line class=\"template\" x1=\"" << layout.left << "\" y1=\"" << detail::num(y) << "\" x2=\""
        << layout.width - layout.right << "\" y2=\"" << detail::num(y) << "\" stroke=\"" << hex_of(SeriesColour::risky)
        << "\" stroke-dasharray=\"6 4\"/>\n";
  }

  std::vector<std::vector<Point>> segments(1);
  for (const auto& p : series) {
    const auto& s = p.scores[fi];
    if (!s) {
      if (!segments.back().empty()) segments.emplace_back();
      continue;
    }
    segments.back().push_back(Point{x_of(p.date), layout.y_of(*s)});
  }
  for (const auto& seg : segments) {
    if (seg.size() < 2) continue;
    out << "  <polyline class=\"trend\" points=\"" << detail::points_attr(seg) << "\" fill=\"none\" stroke=\""
        << hex_of(SeriesColour::resident) << "\" stroke-width=\"2\"/>\n";
  }
  for (const auto& p : series) {
    const auto& s = p.scores[fi];
    if (!s) continue;
    out << "  <circle class=\"point\" data-date=\"" << format_date(p.date) << "\" cx=\"" << detail::num(x_of(p.date))
        << "\" cy=\"" << detail::num(layout.y_of(*s)) << "\" r=\"3\" fill=\"" << hex_of(SeriesColour::resident)
        << "\"/>\n";
  }
  out << "</svg>\n";
  return out.str();
}

}  // namespace adlsense
