#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <istream>
#include <numeric>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "bscan/error.hpp"

namespace bscan {

struct LabeledPoint {
  double x = 0.0;
  double y = 0.0;
  std::uint8_t label = 0;
};

// round(r) with ties upward, as a signed index.
inline long long round_half_up(double r) { return static_cast<long long>(std::floor(r + 0.5)); }

// 1-based index of the order statistic X_(r): round(r) clamped to [1, n].
inline std::size_t order_index(double r, std::size_t n) {
  const long long idx = round_half_up(r);
  if (idx < 1) return 1;
  if (static_cast<unsigned long long>(idx) > n) return n;
  return static_cast<std::size_t>(idx);
}

// Order statistic over an ascending sequence, 1-based real index with clamping.
inline double order_stat(std::span<const double> sorted, double r) {
  if (sorted.empty()) throw ValidationError("order statistic of an empty sequence");
  return sorted[order_index(r, sorted.size()) - 1];
}

// Immutable point store, sorted by x (ties by y, then input order).
class Dataset {
 public:
  explicit Dataset(std::vector<LabeledPoint> points) {
    for (const auto& p : points) {
      if (!std::isfinite(p.x) || !std::isfinite(p.y))
        throw ValidationError("point coordinates must be finite");
      if (p.label > 1) throw ValidationError("labels must be 0 or 1");
    }
    std::stable_sort(points.begin(), points.end(), [](const LabeledPoint& a, const LabeledPoint& b) {
      if (a.x != b.x) return a.x < b.x;
      return a.y < b.y;
    });
    points_ = std::move(points);
    xs_.reserve(points_.size());
    ys_.reserve(points_.size());
    labels_.reserve(points_.size());
    for (const auto& p : points_) {
      xs_.push_back(p.x);
      ys_.push_back(p.y);
      labels_.push_back(p.label);
      ones_ += p.label;
    }
  }

  std::size_t size() const noexcept { return points_.size(); }
  bool empty() const noexcept { return points_.empty(); }
  std::size_t n_total() const noexcept { return points_.size(); }
  std::size_t ones_total() const noexcept { return ones_; }
  double pbar() const noexcept {
    return points_.empty() ? 0.0 : static_cast<double>(ones_) / static_cast<double>(points_.size());
  }
  bool degenerate() const noexcept { return ones_ == 0 || ones_ == points_.size(); }

  std::span<const LabeledPoint> points() const noexcept { return points_; }
  std::span<const double> xs() const noexcept { return xs_; }
  std::span<const double> ys() const noexcept { return ys_; }
  std::span<const std::uint8_t> labels() const noexcept { return labels_; }

  // Same geometry, new labels (indexed in this dataset's x-sorted order).
  Dataset with_labels(std::span<const std::uint8_t> labels) const {
    if (labels.size() != size()) throw ValidationError("label vector length does not match dataset");
    Dataset out = *this;
    out.ones_ = 0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
      if (labels[i] > 1) throw ValidationError("labels must be 0 or 1");
      out.points_[i].label = labels[i];
      out.labels_[i] = labels[i];
      out.ones_ += labels[i];
    }
    return out;
  }

 private:
  std::vector<LabeledPoint> points_;
  std::vector<double> xs_;
  std::vector<double> ys_;
  std::vector<std::uint8_t> labels_;
  std::size_t ones_ = 0;
};

// x-coordinate of X_(r), r a real 1-based index.
inline double order_stat_x(const Dataset& data, double r) { return order_stat(data.xs(), r); }

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

inline std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const auto pos = line.find(',', start);
    out.push_back(trim(line.substr(start, pos == std::string_view::npos ? line.npos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

inline double parse_coordinate(std::string_view field, std::size_t row, const char* name) {
  double v = 0.0;
  if (!field.empty() && field.front() == '+') field.remove_prefix(1);
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
  if (field.empty() || ec != std::errc() || ptr != field.data() + field.size() || !std::isfinite(v))
    throw ParseError(row, std::string("non-numeric ") + name + " '" + std::string(field) + "'");
  return v;
}

}  // namespace detail

// Reads `x,y,label` CSV. Column order follows the header; extra columns are ignored.
inline Dataset ingest_csv(std::istream& in) {
  std::string line;
  std::size_t row = 0;
  bool have_header = false;
  std::size_t cx = 0, cy = 0, cl = 0, width = 0;
  std::vector<LabeledPoint> points;

  while (std::getline(in, line)) {
    ++row;
    std::string_view view = detail::trim(line);
    if (row == 1 && view.size() >= 3 && static_cast<unsigned char>(view[0]) == 0xEF) view.remove_prefix(3);
    if (view.empty()) continue;
    const auto fields = detail::split_commas(view);
    if (!have_header) {
      bool fx = false, fy = false, fl = false;
      for (std::size_t c = 0; c < fields.size(); ++c) {
        if (fields[c] == "x") cx = c, fx = true;
        else if (fields[c] == "y") cy = c, fy = true;
        else if (fields[c] == "label") cl = c, fl = true;
      }
      if (!fx || !fy || !fl) throw ParseError(row, "header must name columns x, y and label");
      width = fields.size();
      have_header = true;
      continue;
    }
    if (fields.size() < width) throw ParseError(row, "missing column");
    LabeledPoint p;
    p.x = detail::parse_coordinate(fields[cx], row, "x");
    p.y = detail::parse_coordinate(fields[cy], row, "y");
    if (fields[cl] == "0") p.label = 0;
    else if (fields[cl] == "1") p.label = 1;
    else throw ParseError(row, "label must be 0 or 1, got '" + std::string(fields[cl]) + "'");
    points.push_back(p);
  }
  if (points.empty()) throw EmptyInput();
  return Dataset(std::move(points));
}

// Writes the dataset in sorted order with round-trip precision.
inline void write_csv(std::ostream& out, std::span<const LabeledPoint> points) {
  char buf[64];
  out << "x,y,label\n";
  for (const auto& p : points) {
    auto r = std::to_chars(buf, buf + sizeof buf, p.x);
    out.write(buf, r.ptr - buf);
    out << ',';
    r = std::to_chars(buf, buf + sizeof buf, p.y);
    out.write(buf, r.ptr - buf);
    out << ',' << static_cast<int>(p.label) << '\n';
  }
}

}  // namespace bscan
