#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <vector>

#include "bscan/approx_enum.hpp"
#include "bscan/dataset.hpp"
#include "bscan/error.hpp"
#include "bscan/statistic.hpp"

namespace bscan {

// Rank-interval rectangle: x ranks index the dataset's x-order, y ranks its global y-order.
// Each interval covers whole runs of tied coordinates.
struct BruteRect {
  std::size_t x_lo_rank = 1, x_hi_rank = 1;
  std::size_t y_lo_rank = 1, y_hi_rank = 1;
  Counts counts;
};

struct BruteMax {
  double t = 0.0;
  BruteRect rect;
};

inline constexpr std::size_t brute_force_limit = 80;

namespace detail {

// First and last 1-based rank of each distinct value of a sorted sequence; value index per rank.
struct DistinctRuns {
  std::vector<std::size_t> first, last, run_of;
};

inline DistinctRuns distinct_runs(const std::vector<double>& sorted) {
  DistinctRuns d;
  d.run_of.resize(sorted.size());
  for (std::size_t r = 0; r < sorted.size(); ++r) {
    if (r == 0 || sorted[r] != sorted[r - 1]) {
      d.first.push_back(r + 1);
      d.last.push_back(r + 1);
    }
    d.last.back() = r + 1;
    d.run_of[r] = d.first.size();
  }
  return d;
}

}  // namespace detail

// Exhaustive one-sided scan over every axis-aligned rectangle, cut between distinct coordinates.
// Ties keep the lexicographically smallest (x_lo, x_hi, y_lo, y_hi). Constant labels give 0.
inline BruteMax brute_force_max(const Dataset& data) {
  const std::size_t n = data.size();
  if (n > brute_force_limit) throw TooLarge(n, brute_force_limit);

  const auto xs = data.xs();
  const auto ys = data.ys();
  const auto labels = data.labels();
  std::vector<double> sx(xs.begin(), xs.end()), sy(ys.begin(), ys.end());
  std::sort(sx.begin(), sx.end());
  std::sort(sy.begin(), sy.end());
  const auto rx = detail::distinct_runs(sx);
  const auto ry = detail::distinct_runs(sy);
  const std::size_t gx = rx.first.size(), gy = ry.first.size();

  // cnt[a][c], ones[a][c]: points whose x run index is <= a and y run index is <= c.
  const std::size_t w = gy + 1;
  std::vector<std::uint32_t> cnt((gx + 1) * w, 0), ones((gx + 1) * w, 0);
  for (std::size_t p = 0; p < n; ++p) {
    const std::size_t a = rx.run_of[static_cast<std::size_t>(std::lower_bound(sx.begin(), sx.end(), xs[p]) - sx.begin())];
    const std::size_t c = ry.run_of[static_cast<std::size_t>(std::lower_bound(sy.begin(), sy.end(), ys[p]) - sy.begin())];
    cnt[a * w + c] += 1;
    ones[a * w + c] += labels[p];
  }
  for (std::size_t a = 1; a <= gx; ++a)
    for (std::size_t c = 1; c <= gy; ++c) {
      cnt[a * w + c] += cnt[(a - 1) * w + c] + cnt[a * w + c - 1] - cnt[(a - 1) * w + c - 1];
      ones[a * w + c] += ones[(a - 1) * w + c] + ones[a * w + c - 1] - ones[(a - 1) * w + c - 1];
    }
  auto box_sum = [w](const std::vector<std::uint32_t>& t, std::size_t a, std::size_t b, std::size_t c,
                     std::size_t d) {
    return t[b * w + d] - t[(a - 1) * w + d] - t[b * w + c - 1] + t[(a - 1) * w + c - 1];
  };

  BruteMax best;
  best.rect = BruteRect{1, n, 1, n, Counts{n, data.ones_total(), n, data.ones_total()}};
  if (data.degenerate()) return best;  // every rectangle scores 0
  bool found = false;
  for (std::size_t a = 1; a <= gx; ++a)
    for (std::size_t b = a; b <= gx; ++b)
      for (std::size_t c = 1; c <= gy; ++c)
        for (std::size_t d = c; d <= gy; ++d) {
          const std::size_t in = box_sum(cnt, a, b, c, d);
          if (in == 0 || in >= n) continue;
          const std::size_t x = box_sum(ones, a, b, c, d);
          const double t = detail::llr_one_sided(in, x, n, data.ones_total());
          if (!found || t > best.t) {
            best.t = t;
            best.rect = BruteRect{rx.first[a - 1], rx.last[b - 1], ry.first[c - 1], ry.last[d - 1],
                                  Counts{in, x, n, data.ones_total()}};
            found = true;
          }
        }
  return best;
}

// Log pmf of the hypergeometric law at x, computed from log-gamma in extended precision.
inline long double hypergeom_log_pmf(const HypergeomParams& h, long long x) {
  auto lchoose = [](long double a, long double b) {
    return std::lgamma(a + 1.0L) - std::lgamma(b + 1.0L) - std::lgamma(a - b + 1.0L);
  };
  const auto nt = static_cast<long double>(h.n_total);
  const auto r = static_cast<long double>(h.reds);
  const auto d = static_cast<long double>(h.draws);
  const auto xx = static_cast<long double>(x);
  return lchoose(r, xx) + lchoose(nt - r, d - xx) - lchoose(nt, d);
}

inline constexpr std::size_t exact_tail_limit = 2000;

// Exact P(X >= x) (upper) or P(X <= x) (lower) by pmf summation, normalized by the total mass.
inline double exact_tail(const HypergeomParams& h, TailSide side) {
  if (h.n_total > exact_tail_limit) throw TooLarge(h.n_total, exact_tail_limit);
  if (side == TailSide::two_sided_L) throw InvalidSide("exact tail is defined for the upper or lower side");
  h.validate();
  const long long lo = h.support_min(), hi = h.support_max();
  std::vector<long double> lp(static_cast<std::size_t>(hi - lo + 1));
  long double top = -INFINITY;
  for (long long v = lo; v <= hi; ++v) {
    lp[static_cast<std::size_t>(v - lo)] = hypergeom_log_pmf(h, v);
    top = std::max(top, lp[static_cast<std::size_t>(v - lo)]);
  }
  long double total = 0.0L, tail = 0.0L;
  for (long long v = lo; v <= hi; ++v) {
    const long double p = std::exp(lp[static_cast<std::size_t>(v - lo)] - top);
    total += p;
    if ((side == TailSide::upper && v >= h.x) || (side == TailSide::lower && v <= h.x)) tail += p;
  }
  return static_cast<double>(tail / total);
}

struct ApproxMatch {
  ApproxRect best;         // enumerated rectangle inside the query with the most points
  std::size_t query_count = 0;
  double ratio = 0.0;      // F_N(R \ R') / F_N(R)
};

// Best contained rectangle of the query's block. The block is the ell with
// 2^{-ell-1} < F_N(R) <= 2^{-ell}; it must lie in the dataset's block range.
inline ApproxMatch approx_quality(const Dataset& data, const Box& query) {
  const std::size_t n_total = data.size();
  const auto xs = data.xs();
  const auto ys = data.ys();
  std::size_t inside = 0;
  for (std::size_t p = 0; p < n_total; ++p) inside += query.contains_point(xs[p], ys[p]) ? 1 : 0;
  if (inside == 0) throw ValidationError("query rectangle holds no points");

  const double f = static_cast<double>(inside) / static_cast<double>(n_total);
  int ell = 0;
  while (std::ldexp(1.0, -(ell + 1)) >= f) ++ell;
  const auto range = block_range(n_total);
  if (!range.contains(ell))
    throw ValidationError("query mass " + std::to_string(f) + " lies outside the block range");

  const BlockSpec block = BlockSpec::at(ell);
  ApproxMatch out;
  out.query_count = inside;
  std::size_t best_n = 0;
  const long long n_span = block.n_span();
  const long long k_span = block.k_span();

  for (int i = 0; i <= block.i_max(); ++i) {
    const long long j_max = block.j_max(i);
    for (long long j = 0; j <= j_max; ++j) {
      Strip strip;
      bool open = false;
      for (long long k = j + 1; k <= j + k_span; ++k) {
        std::size_t lo = 0, hi = 0;
        if (!strip_bounds(data, block, i, j, k, lo, hi)) continue;
        if (xs[lo] < query.x_lo) break;  // same lower end for every k
        if (xs[hi] > query.x_hi) break;  // hi grows with k
        if (open && strip.lo() == lo && hi >= strip.hi()) {
          strip.extend(data, hi);
        } else {
          strip.reset(data, lo, hi);
          open = true;
        }
        // y ranks inside the query: [first, last], 1-based.
        const auto sys = strip.ys();
        const std::size_t first =
            static_cast<std::size_t>(std::lower_bound(sys.begin(), sys.end(), query.y_lo) - sys.begin()) + 1;
        const std::size_t last =
            static_cast<std::size_t>(std::upper_bound(sys.begin(), sys.end(), query.y_hi) - sys.begin());
        if (last < first || last - first + 1 <= best_n) continue;
        const std::size_t sz = strip.size();
        const double step = block.y_step(i, sz);
        // First m whose lower grid rank can reach `first`.
        long long m = std::max(0LL, static_cast<long long>(std::floor((static_cast<double>(first) - 2.0) / step)));
        const long long m_max = block.m_max(i);
        for (; m <= m_max; ++m) {
          const std::size_t ra = detail::grid_rank(static_cast<double>(m) * step + 1.0, sz);
          if (ra == 0) continue;
          const std::size_t a = strip.tie_first(ra);
          if (a < first) continue;
          if (a > last) break;
          for (long long nn = m + n_span; nn >= m + 1; --nn) {
            std::size_t wa = 0, wb = 0;
            if (!window_bounds(strip, step, m, nn, wa, wb)) continue;
            if (wb > last) continue;
            const std::size_t len = wb - wa + 1;
            if (len > best_n) {
              best_n = len;
              ApproxRect r;
              r.ell = ell;
              r.i = i;
              r.j = j;
              r.k = k;
              r.m = m;
              r.n = nn;
              r.x_lo_rank = lo + 1;
              r.x_hi_rank = hi + 1;
              r.y_lo_rank = wa;
              r.y_hi_rank = wb;
              r.counts = rect_counts(strip.cumulative(), wa, wb, n_total, data.ones_total());
              r.box = Box{xs[lo], xs[hi], sys[wa - 1], sys[wb - 1]};
              r.empty = false;
              out.best = r;
            }
            break;
          }
        }
      }
    }
  }
  if (best_n == 0) throw NoContainedRect();
  out.ratio = static_cast<double>(inside - best_n) / static_cast<double>(inside);
  return out;
}

}  // namespace bscan
