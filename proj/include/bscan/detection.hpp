#pragma once

#include <algorithm>
#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <unordered_set>
#include <vector>

#include "bscan/approx_enum.hpp"
#include "bscan/calibration.hpp"
#include "bscan/dataset.hpp"
#include "bscan/error.hpp"
#include "bscan/statistic.hpp"

namespace bscan {

struct Detection {
  ApproxRect rect;
  double t_value = 0.0;
  int ell = 0;
  double threshold = 0.0;
  Box coords;
};

// Statistic of a non-empty enumerated rectangle; rectangles holding every point score 0.
inline double rect_statistic(const Counts& c, bool two_sided) {
  if (c.n_in == 0 || c.n_in >= c.n_total) return 0.0;
  return two_sided ? detail::llr_terms(c.n_in, c.ones_in, c.n_total, c.ones_total)
                   : detail::llr_one_sided(c.n_in, c.ones_in, c.n_total, c.ones_total);
}

// Every enumerated rectangle whose statistic exceeds threshold_of(ell). Within a block a
// realized rectangle reached by several index tuples is reported once, under its first tuple
// in enumeration order. Output follows enumeration order.
inline std::vector<Detection> scan_exceedances(const Dataset& data, const BlockRange& range,
                                               const std::function<double(int)>& threshold_of,
                                               bool two_sided) {
  if (data.degenerate()) throw DegenerateLabels();
  std::vector<Detection> out;
  struct KeyHash {
    std::size_t operator()(const std::array<std::uint32_t, 4>& k) const noexcept {
      std::uint64_t h = 1469598103934665603ull;
      for (auto v : k) h = (h ^ v) * 1099511628211ull;
      return static_cast<std::size_t>(h);
    }
  };
  for (int ell = range.first; ell <= range.last; ++ell) {
    const double q = threshold_of(ell);
    std::unordered_set<std::array<std::uint32_t, 4>, KeyHash> seen;
    enumerate_block(data, BlockSpec::at(ell), [&](const ApproxRect& r) {
      if (r.empty) return;
      const double t = rect_statistic(r.counts, two_sided);
      if (!(t > q)) return;
      const std::array<std::uint32_t, 4> key{
          static_cast<std::uint32_t>(r.x_lo_rank), static_cast<std::uint32_t>(r.x_hi_rank),
          static_cast<std::uint32_t>(r.y_lo_rank), static_cast<std::uint32_t>(r.y_hi_rank)};
      if (!seen.insert(key).second) return;
      out.push_back(Detection{r, t, ell, q, r.box});
    });
  }
  return out;
}

// Rectangles exceeding their block's critical value q_ell(alpha_tilde / w(ell)).
inline std::vector<Detection> blocked_scan(const Dataset& data, const CalibrationResult& cal) {
  const auto range = block_range(data.size());
  if (!(range == cal.blocks)) throw BlockMismatch();
  return scan_exceedances(data, range, [&](int ell) { return cal.threshold(ell); }, cal.two_sided);
}

// Empirical (1 - alpha)-quantile of the per-permutation maxima across all blocks.
inline double global_critical_value(const PermutationTable& table, double alpha) {
  if (table.n_perms == 0) throw ValidationError("empty permutation table");
  std::vector<double> overall(table.n_perms);
  for (std::size_t p = 0; p < table.n_perms; ++p) {
    const auto row = table.row(p);
    overall[p] = *std::max_element(row.begin(), row.end());
  }
  std::sort(overall.begin(), overall.end());
  return overall[quantile_index(alpha, table.n_perms) - 1];
}

// Single global critical value over the same rectangle family.
inline std::vector<Detection> conventional_scan(const Dataset& data, const PermutationTable& table,
                                                double alpha) {
  const auto range = block_range(data.size());
  if (!(range == table.blocks)) throw BlockMismatch();
  const double q = global_critical_value(table, alpha);
  return scan_exceedances(data, range, [q](int) { return q; }, table.two_sided);
}

// Detections whose coordinate box strictly contains no other detection's box. Identical
// boxes are kept once. Ordered by ell descending, then t descending.
inline std::vector<Detection> minimal_rects(const std::vector<Detection>& detections) {
  std::vector<std::size_t> idx(detections.size());
  for (std::size_t u = 0; u < idx.size(); ++u) idx[u] = u;
  auto width = [&](std::size_t u) { return detections[u].coords.x_hi - detections[u].coords.x_lo; };
  auto height = [&](std::size_t u) { return detections[u].coords.y_hi - detections[u].coords.y_lo; };
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    const double sa = detections[a].coords.semi_perimeter(), sb = detections[b].coords.semi_perimeter();
    if (sa != sb) return sa < sb;
    if (width(a) != width(b)) return width(a) < width(b);
    return height(a) < height(b);
  });

  // Any box containing a detection contains a minimal one, so checking accepted boxes suffices.
  std::vector<std::size_t> kept;
  for (const std::size_t u : idx) {
    const Box& b = detections[u].coords;
    bool covered = false;
    for (const std::size_t v : kept) {
      if (b.contains(detections[v].coords)) {
        covered = true;
        break;
      }
    }
    if (!covered) kept.push_back(u);
  }
  // Guard against rounding in the sort key.
  std::vector<Detection> out;
  for (const std::size_t u : kept) {
    bool covered = false;
    for (const std::size_t v : kept)
      if (v != u && detections[u].coords.contains(detections[v].coords) &&
          !(detections[u].coords == detections[v].coords)) {
        covered = true;
        break;
      }
    if (!covered) out.push_back(detections[u]);
  }
  std::stable_sort(out.begin(), out.end(), [](const Detection& a, const Detection& b) {
    if (a.ell != b.ell) return a.ell > b.ell;
    return a.t_value > b.t_value;
  });
  return out;
}

}  // namespace bscan
