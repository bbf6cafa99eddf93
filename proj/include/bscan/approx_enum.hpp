#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numeric>
#include <span>
#include <unordered_map>
#include <vector>

#include "bscan/dataset.hpp"
#include "bscan/statistic.hpp"

namespace bscan {

// Parameters of block ell: scale s = 2^-ell, relative resolution eps = ell^{-1/2} / 6.
struct BlockSpec {
  int ell = 3;
  double s = 0.125;
  double eps = 0.0;
  double inv_eps = 0.0;  // 6 sqrt(ell), kept separately so floors of 1/eps stay exact

  static BlockSpec at(int ell) {
    if (ell < 1 || ell > 60) throw ValidationError("block index out of range");
    BlockSpec b;
    b.ell = ell;
    b.s = std::ldexp(1.0, -ell);
    b.inv_eps = 6.0 * std::sqrt(static_cast<double>(ell));
    b.eps = 1.0 / b.inv_eps;
    return b;
  }

  int i_max() const noexcept { return ell; }
  // floor((eps s 2^i)^{-1})
  long long j_max(int i) const noexcept {
    return static_cast<long long>(std::floor(std::ldexp(inv_eps, ell - i)));
  }
  // floor(1/eps)
  long long k_span() const noexcept { return static_cast<long long>(std::floor(inv_eps)); }
  // floor(2^i / eps)
  long long m_max(int i) const noexcept {
    return static_cast<long long>(std::floor(std::ldexp(inv_eps, i)));
  }
  // floor(2/eps)
  long long n_span() const noexcept { return static_cast<long long>(std::floor(2.0 * inv_eps)); }
  // eps s 2^i N: rank spacing of the x-grid at level i.
  double x_step(int i, std::size_t n_total) const noexcept {
    return std::ldexp(static_cast<double>(n_total), i - ell) / inv_eps;
  }
  // eps 2^-i N_jk: rank spacing of the y-grid inside a strip.
  double y_step(int i, std::size_t strip_size) const noexcept {
    return std::ldexp(static_cast<double>(strip_size), -i) / inv_eps;
  }
};

// Inclusive range of block indices [first, last]; empty when last < first.
struct BlockRange {
  int first = 3;
  int last = 2;

  bool empty() const noexcept { return last < first; }
  std::size_t size() const noexcept { return empty() ? 0 : static_cast<std::size_t>(last - first + 1); }
  bool contains(int ell) const noexcept { return ell >= first && ell <= last; }
  friend bool operator==(const BlockRange&, const BlockRange&) = default;
};

// [3, floor(log2(N / (2 ln N)))]
inline BlockRange block_range(std::size_t n_total) {
  BlockRange r;
  if (n_total < 3) return r;
  const double n = static_cast<double>(n_total);
  r.last = static_cast<int>(std::floor(std::log2(n / (2.0 * std::log(n)))));
  if (r.last < r.first) r.last = r.first - 1;
  return r;
}

// Closed axis-parallel rectangle in data coordinates.
struct Box {
  double x_lo = 0.0, x_hi = 0.0, y_lo = 0.0, y_hi = 0.0;

  bool contains(const Box& o) const noexcept {
    return x_lo <= o.x_lo && o.x_hi <= x_hi && y_lo <= o.y_lo && o.y_hi <= y_hi;
  }
  bool contains_point(double x, double y) const noexcept {
    return x_lo <= x && x <= x_hi && y_lo <= y && y <= y_hi;
  }
  bool intersects(const Box& o) const noexcept {
    return x_lo <= o.x_hi && o.x_lo <= x_hi && y_lo <= o.y_hi && o.y_lo <= y_hi;
  }
  double semi_perimeter() const noexcept { return (x_hi - x_lo) + (y_hi - y_lo); }
  friend bool operator==(const Box&, const Box&) = default;
};

// One enumerated rectangle. Ranks are 1-based; x ranks index the dataset's x-order,
// y ranks index the strip's y-order. Both rank ranges are expanded over coordinate ties.
struct ApproxRect {
  int ell = 0;
  int i = 0;
  long long j = 0, k = 0, m = 0, n = 0;
  std::size_t x_lo_rank = 1, x_hi_rank = 0;
  std::size_t y_lo_rank = 1, y_hi_rank = 0;
  Counts counts;
  Box box;
  bool empty = true;
};

// Points whose x falls in one grid interval, sorted by y, with label prefix sums.
// A strip can grow to the right; the added points are sorted and merged in.
class Strip {
 public:
  Strip() = default;

  // Builds the strip over x-order positions [lo, hi] (0-based, inclusive).
  Strip(const Dataset& data, std::size_t lo, std::size_t hi) { reset(data, lo, hi); }

  void reset(const Dataset& data, std::size_t lo, std::size_t hi) {
    lo_ = lo;
    hi_ = lo;
    order_.clear();
    grow(data, lo, hi);
  }

  // Extends the upper bound to new_hi >= hi().
  void extend(const Dataset& data, std::size_t new_hi) {
    if (new_hi > hi_) grow(data, hi_ + 1, new_hi);
  }

  std::size_t size() const noexcept { return order_.size(); }
  std::size_t lo() const noexcept { return lo_; }
  std::size_t hi() const noexcept { return hi_; }
  std::span<const std::uint32_t> order() const noexcept { return order_; }
  std::span<const double> ys() const noexcept { return ys_; }
  std::span<const std::uint32_t> cumulative() const noexcept { return cum_; }
  bool has_ties() const noexcept { return has_ties_; }
  // First and last 1-based strip rank sharing the y-coordinate of rank r.
  std::size_t tie_first(std::size_t r) const noexcept { return has_ties_ ? tie_first_[r - 1] : r; }
  std::size_t tie_last(std::size_t r) const noexcept { return has_ties_ ? tie_last_[r - 1] : r; }

 private:
  void grow(const Dataset& data, std::size_t from, std::size_t to) {
    const auto ys = data.ys();
    const auto labels = data.labels();
    auto by_y = [&](std::uint32_t a, std::uint32_t b) {
      if (ys[a] != ys[b]) return ys[a] < ys[b];
      return a < b;
    };
    const std::size_t old = order_.size();
    order_.resize(old + (to - from + 1));
    std::iota(order_.begin() + static_cast<std::ptrdiff_t>(old), order_.end(), static_cast<std::uint32_t>(from));
    std::sort(order_.begin() + static_cast<std::ptrdiff_t>(old), order_.end(), by_y);
    if (old > 0) {
      merged_.resize(order_.size());
      std::merge(order_.begin(), order_.begin() + static_cast<std::ptrdiff_t>(old),
                 order_.begin() + static_cast<std::ptrdiff_t>(old), order_.end(), merged_.begin(), by_y);
      order_.swap(merged_);
    }
    hi_ = to;

    const std::size_t sz = order_.size();
    ys_.resize(sz);
    cum_.resize(sz + 1);
    cum_[0] = 0;
    has_ties_ = false;
    for (std::size_t t = 0; t < sz; ++t) {
      ys_[t] = ys[order_[t]];
      cum_[t + 1] = cum_[t] + labels[order_[t]];
      if (t > 0 && ys_[t] == ys_[t - 1]) has_ties_ = true;
    }
    if (!has_ties_) return;
    tie_first_.resize(sz);
    tie_last_.resize(sz);
    for (std::size_t t = 0; t < sz; ++t)
      tie_first_[t] = (t > 0 && ys_[t] == ys_[t - 1]) ? tie_first_[t - 1] : static_cast<std::uint32_t>(t + 1);
    for (std::size_t t = sz; t-- > 0;)
      tie_last_[t] = (t + 1 < sz && ys_[t] == ys_[t + 1]) ? tie_last_[t + 1] : static_cast<std::uint32_t>(t + 1);
  }

  std::size_t lo_ = 0, hi_ = 0;
  std::vector<std::uint32_t> order_, merged_;
  std::vector<double> ys_;
  std::vector<std::uint32_t> cum_;
  bool has_ties_ = false;
  std::vector<std::uint32_t> tie_first_, tie_last_;
};

// Counts of the strip window [y_lo_rank, y_hi_rank] (1-based) in constant time.
inline Counts rect_counts(std::span<const std::uint32_t> cumulative, std::size_t y_lo_rank,
                          std::size_t y_hi_rank, std::size_t n_total, std::size_t ones_total) {
  Counts c{0, 0, n_total, ones_total};
  if (y_hi_rank < y_lo_rank || y_lo_rank == 0) return c;
  c.n_in = y_hi_rank - y_lo_rank + 1;
  c.ones_in = cumulative[y_hi_rank] - cumulative[y_lo_rank - 1];
  return c;
}

namespace detail {

// Rounded grid rank min(round(r), cap); 0 when r rounds below 1.
inline std::size_t grid_rank(double r, std::size_t cap) {
  const long long v = round_half_up(r);
  if (v < 1) return 0;
  return std::min(static_cast<std::size_t>(v), cap);
}

}  // namespace detail

// Tie-expanded x-order range of strip (i, j, k); returns false for an empty strip.
// Bounds are 0-based inclusive.
inline bool strip_bounds(const Dataset& data, const BlockSpec& block, int i, long long j,
                         long long k, std::size_t& lo, std::size_t& hi) {
  const std::size_t n = data.size();
  const double step = block.x_step(i, n);
  const std::size_t lo_rank = detail::grid_rank(static_cast<double>(j) * step + 1.0, n);
  const std::size_t hi_rank = detail::grid_rank(static_cast<double>(k) * step, n);
  if (hi_rank < lo_rank || lo_rank == 0) return false;
  const auto xs = data.xs();
  lo = static_cast<std::size_t>(std::lower_bound(xs.begin(), xs.end(), xs[lo_rank - 1]) - xs.begin());
  hi = static_cast<std::size_t>(std::upper_bound(xs.begin(), xs.end(), xs[hi_rank - 1]) - xs.begin()) - 1;
  return true;
}

// Tie-expanded y window (m, n) of a strip with grid spacing `step`; returns false when empty.
inline bool window_bounds(const Strip& strip, double step, long long m, long long n,
                          std::size_t& a, std::size_t& b) {
  const std::size_t sz = strip.size();
  const std::size_t ra = detail::grid_rank(static_cast<double>(m) * step + 1.0, sz);
  const std::size_t rb = detail::grid_rank(static_cast<double>(n) * step, sz);
  if (rb < ra || ra == 0) return false;
  a = strip.tie_first(ra);
  b = strip.tie_last(rb);
  return true;
}

inline bool window_bounds(const Strip& strip, const BlockSpec& block, int i, long long m,
                          long long n, std::size_t& a, std::size_t& b) {
  return window_bounds(strip, block.y_step(i, strip.size()), m, n, a, b);
}

// Walks the (i, j, k) strips of a block in lexicographic order. For fixed (i, j) the strips
// are nested and grow with k, so each one is built by merging onto its predecessor.
// on_strip(i, j, k, strip) is called for non-empty strips, on_empty(i, j, k) otherwise.
template <typename OnStrip, typename OnEmpty>
void for_each_strip(const Dataset& data, const BlockSpec& block, OnStrip&& on_strip, OnEmpty&& on_empty) {
  const long long k_span = block.k_span();
  Strip strip;
  for (int i = 0; i <= block.i_max(); ++i) {
    const long long j_max = block.j_max(i);
    for (long long j = 0; j <= j_max; ++j) {
      bool open = false;
      for (long long k = j + 1; k <= j + k_span; ++k) {
        std::size_t lo = 0, hi = 0;
        if (!strip_bounds(data, block, i, j, k, lo, hi)) {
          on_empty(i, j, k);
          continue;
        }
        if (open && strip.lo() == lo && hi >= strip.hi()) {
          strip.extend(data, hi);
        } else {
          strip.reset(data, lo, hi);
          open = true;
        }
        on_strip(i, j, k, static_cast<const Strip&>(strip));
      }
    }
  }
}

// Visits every (i, j, k, m, n) tuple of `block` exactly once, in lexicographic order.
// Tuples whose strip or window is empty are visited with empty = true and zero counts.
// Returns the number of tuples visited.
template <typename Visitor>
std::size_t enumerate_block(const Dataset& data, const BlockSpec& block, Visitor&& visit) {
  const std::size_t n_total = data.size();
  const std::size_t ones_total = data.ones_total();
  const auto xs = data.xs();
  const long long n_span = block.n_span();
  std::size_t visited = 0;

  ApproxRect rect;
  rect.ell = block.ell;
  auto set_empty = [&] {
    rect.empty = true;
    rect.y_lo_rank = 1;
    rect.y_hi_rank = 0;
    rect.counts = Counts{0, 0, n_total, ones_total};
  };

  for_each_strip(
      data, block,
      [&](int i, long long j, long long k, const Strip& strip) {
        rect.i = i;
        rect.j = j;
        rect.k = k;
        rect.x_lo_rank = strip.lo() + 1;
        rect.x_hi_rank = strip.hi() + 1;
        rect.box.x_lo = xs[strip.lo()];
        rect.box.x_hi = xs[strip.hi()];
        const auto cum = strip.cumulative();
        const auto sys = strip.ys();
        const double step = block.y_step(i, strip.size());
        const long long m_max = block.m_max(i);
        for (long long m = 0; m <= m_max; ++m) {
          rect.m = m;
          for (long long n = m + 1; n <= m + n_span; ++n) {
            rect.n = n;
            std::size_t a = 0, b = 0;
            if (window_bounds(strip, step, m, n, a, b)) {
              rect.empty = false;
              rect.y_lo_rank = a;
              rect.y_hi_rank = b;
              rect.counts = rect_counts(cum, a, b, n_total, ones_total);
              rect.box.y_lo = sys[a - 1];
              rect.box.y_hi = sys[b - 1];
            } else {
              set_empty();
            }
            visit(static_cast<const ApproxRect&>(rect));
            ++visited;
          }
        }
      },
      [&](int i, long long j, long long k) {
        rect.i = i;
        rect.j = j;
        rect.k = k;
        rect.x_lo_rank = 1;
        rect.x_hi_rank = 0;
        rect.box = Box{};
        set_empty();
        const long long m_max = block.m_max(i);
        for (long long m = 0; m <= m_max; ++m) {
          rect.m = m;
          for (long long n = m + 1; n <= m + n_span; ++n) {
            rect.n = n;
            visit(static_cast<const ApproxRect&>(rect));
            ++visited;
          }
        }
      });
  return visited;
}

// Number of (i, j, k, m, n) tuples in a block; equals enumerate_block's return value.
inline std::size_t block_tuple_count(const BlockSpec& block) {
  std::size_t total = 0;
  const auto k_span = static_cast<std::size_t>(block.k_span());
  const auto n_span = static_cast<std::size_t>(block.n_span());
  for (int i = 0; i <= block.i_max(); ++i)
    total += static_cast<std::size_t>(block.j_max(i) + 1) * k_span *
             static_cast<std::size_t>(block.m_max(i) + 1) * n_span;
  return total;
}

// Total rectangle count over all blocks for this dataset: the sum of enumerate_block counts.
inline std::size_t count_all(const Dataset& data) {
  const auto range = block_range(data.size());
  std::size_t total = 0;
  for (int ell = range.first; ell <= range.last; ++ell) total += block_tuple_count(BlockSpec::at(ell));
  return total;
}

// Running per-length extremes of the 1-count over windows. For a fixed window size the
// one-sided statistic is nondecreasing in the 1-count and the two-sided one is maximal at
// an extreme, so these extremes determine the maximum over all windows.
class LengthExtremes {
 public:
  explicit LengthExtremes(std::size_t n_total)
      : most_(n_total + 1, -1), fewest_(n_total + 1, std::numeric_limits<std::int32_t>::max()) {}

  void clear() {
    std::fill(most_.begin(), most_.end(), -1);
    std::fill(fewest_.begin(), fewest_.end(), std::numeric_limits<std::int32_t>::max());
  }

  void add(std::size_t len, std::int32_t ones) noexcept {
    if (ones > most_[len]) most_[len] = ones;
    if (ones < fewest_[len]) fewest_[len] = ones;
  }

  void add_upper(std::size_t len, std::int32_t ones) noexcept {
    if (ones > most_[len]) most_[len] = ones;
  }

  // Maximum statistic over everything added; windows holding all N points are ignored.
  double max_statistic(std::size_t ones_total, bool two_sided) const {
    const std::size_t n_total = most_.size() - 1;
    double best = 0.0;
    for (std::size_t len = 1; len < n_total; ++len) {
      if (most_[len] < 0) continue;
      double t = two_sided
                     ? detail::llr_terms(len, static_cast<std::size_t>(most_[len]), n_total, ones_total)
                     : detail::llr_one_sided(len, static_cast<std::size_t>(most_[len]), n_total, ones_total);
      if (two_sided && fewest_[len] != most_[len])
        t = std::max(t, detail::llr_terms(len, static_cast<std::size_t>(fewest_[len]), n_total, ones_total));
      best = std::max(best, t);
    }
    return best;
  }

 private:
  std::vector<std::int32_t> most_;
  std::vector<std::int32_t> fewest_;
};

// Maximum statistic over all rectangles of a block, with the dataset's labels. Visits the same
// windows as enumerate_block but skips repeats once a window clamps to the top of its strip.
inline double block_maximum(const Dataset& data, const BlockSpec& block, bool two_sided = false) {
  if (data.degenerate()) throw DegenerateLabels();
  LengthExtremes ext(data.size());
  const long long n_span = block.n_span();
  for_each_strip(
      data, block,
      [&](int i, long long, long long, const Strip& strip) {
        const auto cum = strip.cumulative();
        const std::size_t sz = strip.size();
        const double step = block.y_step(i, sz);
        const long long m_max = block.m_max(i);
        for (long long m = 0; m <= m_max; ++m) {
          const std::size_t ra = detail::grid_rank(static_cast<double>(m) * step + 1.0, sz);
          if (ra == 0) continue;
          const std::size_t a = strip.tie_first(ra);
          const std::int32_t base = static_cast<std::int32_t>(cum[a - 1]);
          for (long long n = m + 1; n <= m + n_span; ++n) {
            const std::size_t rb = detail::grid_rank(static_cast<double>(n) * step, sz);
            if (rb < ra) continue;
            const std::size_t b = strip.tie_last(rb);
            const auto ones = static_cast<std::int32_t>(cum[b]) - base;
            if (two_sided) ext.add(b - a + 1, ones);
            else ext.add_upper(b - a + 1, ones);
            if (rb == sz) break;
          }
          if (ra == sz) break;
        }
      },
      [](int, long long, long long) {});
  return ext.max_statistic(data.ones_total(), two_sided);
}

// Label-independent compilation of one block: distinct strips and, per strip, the distinct
// non-empty windows grouped by length. Repeated tuples collapse, which leaves every block
// maximum unchanged.
struct BlockPlan {
  int ell = 0;
  std::vector<std::uint32_t> order;         // strip y-orders, concatenated
  std::vector<std::size_t> strip_offset;    // strip t owns order[strip_offset[t] .. strip_offset[t+1])
  std::vector<std::size_t> group_offset;    // strip t owns groups [group_offset[t], group_offset[t+1])
  std::vector<std::uint32_t> group_len;     // window length of group g
  std::vector<std::size_t> start_offset;    // group g owns starts [start_offset[g], start_offset[g+1])
  std::vector<std::uint32_t> starts;        // 1-based first strip rank of each window
  std::size_t tuples = 0;

  std::size_t strip_count() const noexcept { return strip_offset.empty() ? 0 : strip_offset.size() - 1; }
  std::size_t window_count() const noexcept { return starts.size(); }

  // Calls f(strip, a, b) for every stored window, ranks 1-based within the strip.
  template <typename F>
  void for_each_window(F&& f) const {
    for (std::size_t t = 0; t < strip_count(); ++t)
      for (std::size_t g = group_offset[t]; g < group_offset[t + 1]; ++g)
        for (std::size_t w = start_offset[g]; w < start_offset[g + 1]; ++w)
          f(t, static_cast<std::size_t>(starts[w]), static_cast<std::size_t>(starts[w] + group_len[g] - 1));
  }
};

inline BlockPlan compile_block(const Dataset& data, const BlockSpec& block) {
  BlockPlan plan;
  plan.ell = block.ell;
  plan.tuples = block_tuple_count(block);
  plan.strip_offset.push_back(0);
  plan.group_offset.push_back(0);
  plan.start_offset.push_back(0);

  struct Pending {
    std::vector<std::uint32_t> order;
    std::vector<std::uint64_t> windows;  // packed (length << 32 | a)
  };
  std::unordered_map<std::uint64_t, std::size_t> strip_index;
  std::vector<Pending> pending;
  const long long n_span = block.n_span();

  for_each_strip(
      data, block,
      [&](int i, long long, long long, const Strip& strip) {
        const std::uint64_t key = (static_cast<std::uint64_t>(strip.lo()) << 32) | strip.hi();
        auto [it, inserted] = strip_index.try_emplace(key, pending.size());
        if (inserted)
          pending.push_back(Pending{std::vector<std::uint32_t>(strip.order().begin(), strip.order().end()), {}});
        auto& out = pending[it->second].windows;
        const std::size_t sz = strip.size();
        const double step = block.y_step(i, sz);
        const long long m_max = block.m_max(i);
        std::uint64_t last = ~std::uint64_t{0};
        for (long long m = 0; m <= m_max; ++m) {
          const std::size_t ra = detail::grid_rank(static_cast<double>(m) * step + 1.0, sz);
          if (ra == 0) continue;
          const std::size_t a = strip.tie_first(ra);
          for (long long n = m + 1; n <= m + n_span; ++n) {
            const std::size_t rb = detail::grid_rank(static_cast<double>(n) * step, sz);
            if (rb < ra) continue;
            const std::size_t len = strip.tie_last(rb) - a + 1;
            const std::uint64_t w = (static_cast<std::uint64_t>(len) << 32) | a;
            if (w != last) out.push_back(w);
            last = w;
            if (rb == sz) break;
          }
          if (ra == sz) break;
        }
      },
      [](int, long long, long long) {});

  for (auto& p : pending) {
    auto& w = p.windows;
    std::sort(w.begin(), w.end());
    w.erase(std::unique(w.begin(), w.end()), w.end());
    if (w.empty()) continue;
    plan.order.insert(plan.order.end(), p.order.begin(), p.order.end());
    plan.strip_offset.push_back(plan.order.size());
    std::uint32_t current = 0;
    for (const auto packed : w) {
      const auto len = static_cast<std::uint32_t>(packed >> 32);
      if (len != current) {
        if (current != 0) plan.start_offset.push_back(plan.starts.size());
        plan.group_len.push_back(len);
        current = len;
      }
      plan.starts.push_back(static_cast<std::uint32_t>(packed & 0xffffffffu));
    }
    plan.start_offset.push_back(plan.starts.size());
    plan.group_offset.push_back(plan.group_len.size());
    std::vector<std::uint64_t>().swap(w);
    std::vector<std::uint32_t>().swap(p.order);
  }
  return plan;
}

}  // namespace bscan
