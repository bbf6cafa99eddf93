#pragma once

#include <algorithm>
#include <cstdio>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "bscan/calibration.hpp"
#include "bscan/dataset.hpp"
#include "bscan/detection.hpp"

namespace bscan {

using Json = nlohmann::ordered_json;

inline Json to_json(const CalibrationResult& cal) {
  Json th = Json::array();
  for (const auto& t : cal.thresholds) th.push_back({{"ell", t.ell}, {"level", t.level}, {"q", t.q}});
  return Json{{"alpha", cal.alpha},
              {"alpha_tilde", cal.alpha_tilde},
              {"weight_scheme", std::string(to_string(cal.weight_scheme))},
              {"thresholds", th},
              {"union_rate", cal.union_rate},
              {"n_perms", cal.n_perms},
              {"seed", cal.seed}};
}

inline Json to_json(const Detection& d) {
  const auto& r = d.rect;
  return Json{{"ell", d.ell},       {"i", r.i},
              {"j", r.j},           {"k", r.k},
              {"m", r.m},           {"n", r.n},
              {"x_lo", d.coords.x_lo}, {"x_hi", d.coords.x_hi},
              {"y_lo", d.coords.y_lo}, {"y_hi", d.coords.y_hi},
              {"n_in", r.counts.n_in}, {"ones_in", r.counts.ones_in},
              {"t", d.t_value},     {"threshold", d.threshold}};
}

inline Json to_json(const std::vector<Detection>& ds) {
  Json out = Json::array();
  for (const auto& d : ds) out.push_back(to_json(d));
  return out;
}

struct MethodReport {
  std::string method;  // "blocked" or "conventional"
  double alpha = 0.0;
  std::optional<CalibrationResult> calibration;
  std::optional<double> critical_value;
  std::vector<Detection> detections;
  std::vector<Detection> minimal;
};

inline Json to_json(const MethodReport& rep) {
  Json out{{"alpha", rep.alpha}, {"method", rep.method}};
  if (rep.calibration) {
    out["alpha_tilde"] = rep.calibration->alpha_tilde;
    out["calibration"] = to_json(*rep.calibration);
  }
  if (rep.critical_value) out["critical_value"] = *rep.critical_value;
  out["detections"] = to_json(rep.detections);
  out["minimal"] = to_json(rep.minimal);
  return out;
}

namespace detail {

inline std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

}  // namespace detail

// Scatter plot of the labelled points with one panel per report; each panel outlines its
// minimal rectangles. Only minimal rectangles are drawn as <rect> elements.
inline void write_svg(std::ostream& out, const Dataset& data, const std::vector<const MethodReport*>& panels) {
  constexpr double size = 480.0, margin = 30.0, title = 20.0;
  const auto xs = data.xs();
  const auto ys = data.ys();
  double x0 = 0, x1 = 1, y0 = 0, y1 = 1;
  if (!xs.empty()) {
    x0 = *std::min_element(xs.begin(), xs.end());
    x1 = *std::max_element(xs.begin(), xs.end());
    y0 = *std::min_element(ys.begin(), ys.end());
    y1 = *std::max_element(ys.begin(), ys.end());
  }
  const double span_x = x1 > x0 ? x1 - x0 : 1.0;
  const double span_y = y1 > y0 ? y1 - y0 : 1.0;
  const std::size_t count = std::max<std::size_t>(1, panels.size());
  const double panel_w = size + 2 * margin;
  const double total_w = panel_w * static_cast<double>(count);
  const double total_h = size + 2 * margin + title;

  out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << detail::fmt(total_w) << "\" height=\""
      << detail::fmt(total_h) << "\" viewBox=\"0 0 " << detail::fmt(total_w) << ' ' << detail::fmt(total_h)
      << "\">\n";
  for (std::size_t p = 0; p < count; ++p) {
    const double ox = panel_w * static_cast<double>(p) + margin;
    const double oy = margin + title;
    auto px = [&](double x) { return ox + (x - x0) / span_x * size; };
    auto py = [&](double y) { return oy + size - (y - y0) / span_y * size; };
    const MethodReport* rep = p < panels.size() ? panels[p] : nullptr;
    out << "<g>\n";
    if (rep)
      out << "<text x=\"" << detail::fmt(ox) << "\" y=\"" << detail::fmt(margin) << "\" font-family=\"sans-serif\""
          << " font-size=\"14\">" << rep->method << " (" << rep->minimal.size() << " minimal)</text>\n";
    for (std::size_t u = 0; u < xs.size(); ++u)
      out << "<circle cx=\"" << detail::fmt(px(xs[u])) << "\" cy=\"" << detail::fmt(py(ys[u]))
          << "\" r=\"1.8\" fill=\"" << (data.labels()[u] ? "#d62728" : "#000000") << "\"/>\n";
    if (rep)
      for (const auto& d : rep->minimal) {
        const double left = px(d.coords.x_lo), right = px(d.coords.x_hi);
        const double top = py(d.coords.y_hi), bottom = py(d.coords.y_lo);
        out << "<rect x=\"" << detail::fmt(left) << "\" y=\"" << detail::fmt(top) << "\" width=\""
            << detail::fmt(right - left) << "\" height=\"" << detail::fmt(bottom - top)
            << "\" fill=\"none\" stroke=\"#1f77b4\" stroke-width=\"1.5\"/>\n";
      }
    out << "</g>\n";
  }
  out << "</svg>\n";
}

}  // namespace bscan
