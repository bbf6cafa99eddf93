#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>

#include "bscan/error.hpp"

namespace bscan {

// Label counts for a window and for the whole dataset.
struct Counts {
  std::size_t n_in = 0;
  std::size_t ones_in = 0;
  std::size_t n_total = 0;
  std::size_t ones_total = 0;

  bool valid() const noexcept {
    return ones_in <= n_in && n_in <= n_total && ones_in <= ones_total &&
           ones_total - ones_in <= n_total - n_in;
  }
  double phat() const noexcept { return static_cast<double>(ones_in) / static_cast<double>(n_in); }
  double qhat() const noexcept {
    return static_cast<double>(ones_total - ones_in) / static_cast<double>(n_total - n_in);
  }
  double pbar() const noexcept {
    return static_cast<double>(ones_total) / static_cast<double>(n_total);
  }
};

// X ~ Hypergeometric: `draws` items out of `n_total`, `reds` of which are red; x observed reds.
struct HypergeomParams {
  std::size_t n_total = 0;
  std::size_t reds = 0;
  std::size_t draws = 0;
  long long x = 0;

  long long support_min() const noexcept {
    const long long lo = static_cast<long long>(draws + reds) - static_cast<long long>(n_total);
    return std::max(0LL, lo);
  }
  long long support_max() const noexcept {
    return static_cast<long long>(std::min(draws, reds));
  }
  // m = draws * reds / n_total
  double mean() const noexcept {
    return static_cast<double>(draws) * static_cast<double>(reds) / static_cast<double>(n_total);
  }
  void validate() const {
    if (draws == 0 || draws >= n_total || reds == 0 || reds >= n_total)
      throw ValidationError("hypergeometric parameters require 0 < draws < N and 0 < reds < N");
    if (x < support_min() || x > support_max())
      throw ValidationError("x lies outside the hypergeometric support");
  }
};

enum class TailSide { upper, lower, two_sided_L };

// p log(p/q) + (1-p) log((1-p)/(1-q)) with 0 log 0 = 0.
inline double bernoulli_kl(double p, double q) {
  double out = 0.0;
  if (p > 0.0) out += p * std::log(p / q);
  if (p < 1.0) out += (1.0 - p) * std::log((1.0 - p) / (1.0 - q));
  return out;
}

namespace detail {

// log1p(t) - t without cancellation for small |t|.
inline double log1p_minus(double t) {
  if (std::abs(t) >= 0.1) return std::log1p(t) - t;
  // -t^2/2 + t^3/3 - t^4/4 + ...
  double term = -t * t;
  double sum = 0.0;
  for (int k = 2; k < 22; ++k) {
    sum += term / k;
    term *= -t;
  }
  return sum;
}

// Two-term likelihood ratio; callers guarantee 0 < n < N and 0 < R < N. With
// D = xN - Rn the statistic equals
//   D^2 N / (R (N-R) n (N-n)) + sum over the four cells of c * (log1p(u_c) - u_c),
// where u_c is the relative deviation of each cell rate from pbar. The integer form keeps full
// relative precision when phat is close to pbar.
inline double llr_terms(std::size_t n, std::size_t x, std::size_t big_n, std::size_t reds) {
  const double nn = static_cast<double>(n);
  const double rest = static_cast<double>(big_n - n);
  const double r = static_cast<double>(reds);
  const double nr = static_cast<double>(big_n - reds);
  const long long d_int = static_cast<long long>(x) * static_cast<long long>(big_n) -
                          static_cast<long long>(reds) * static_cast<long long>(n);
  if (d_int == 0) return 0.0;
  const double d = static_cast<double>(d_int);
  double v = d / r * (d / nr) * (static_cast<double>(big_n) / (nn * rest));
  const std::size_t cells[4] = {x, n - x, reds - x, big_n - n - (reds - x)};
  const double dev[4] = {d / (nn * r), -d / (nn * nr), -d / (rest * r), d / (rest * nr)};
  for (int c = 0; c < 4; ++c)
    if (cells[c] != 0) v += static_cast<double>(cells[c]) * log1p_minus(dev[c]);
  return v > 0.0 ? v : 0.0;
}

// Unchecked one-sided statistic, zero unless phat > qhat. Exact integer comparison:
// phat <= qhat  <=>  x * N <= R * n.
inline double llr_one_sided(std::size_t n, std::size_t x, std::size_t big_n, std::size_t reds) {
  if (static_cast<std::uint64_t>(x) * big_n <= static_cast<std::uint64_t>(reds) * n) return 0.0;
  return llr_terms(n, x, big_n, reds);
}

inline void check_llr_counts(const Counts& c) {
  if (c.ones_total == 0 || c.ones_total >= c.n_total) throw DegenerateLabels();
  if (!c.valid()) throw ValidationError("inconsistent window counts");
  if (c.n_in == 0 || c.n_in >= c.n_total)
    throw ValidationError("window must contain some but not all points");
}

}  // namespace detail

// Kulldorff log-likelihood ratio for the alternative "inside rate exceeds outside rate".
inline double llr(const Counts& c) {
  detail::check_llr_counts(c);
  return detail::llr_one_sided(c.n_in, c.ones_in, c.n_total, c.ones_total);
}

// Same statistic without the one-sided zeroing.
inline double llr_two_sided(const Counts& c) {
  detail::check_llr_counts(c);
  return detail::llr_terms(c.n_in, c.ones_in, c.n_total, c.ones_total);
}

// L(x): the likelihood ratio functional evaluated at a hypergeometric count.
inline double l_function(const HypergeomParams& h) {
  h.validate();
  return detail::llr_terms(h.draws, static_cast<std::size_t>(h.x), h.n_total, h.reds);
}

// Constant of the hypergeometric concentration inequality:
// C = 2 exp{ 13 / (12 pbar (1 - pbar)) * (1/n + 1/(N - n)) }.
inline double tail_constant(const HypergeomParams& h) {
  const double pbar = static_cast<double>(h.reds) / static_cast<double>(h.n_total);
  const double inv = 1.0 / static_cast<double>(h.draws) + 1.0 / static_cast<double>(h.n_total - h.draws);
  return 2.0 * std::exp(13.0 / (12.0 * pbar * (1.0 - pbar)) * inv);
}

// Bound on P(L(X) >= t) for t > 0: 2C (t + 2) e^{-t}.
inline double tail_bound_l(const HypergeomParams& h, double t) {
  if (h.draws == 0 || h.draws >= h.n_total || h.reds == 0 || h.reds >= h.n_total)
    throw ValidationError("hypergeometric parameters require 0 < draws < N and 0 < reds < N");
  if (!(t > 0.0)) throw InvalidSide("two-sided bound requires a positive threshold");
  return 2.0 * tail_constant(h) * (t + 2.0) * std::exp(-t);
}

// Upper side bounds P(X >= x) for x > m, lower side bounds P(X <= x) for x < m,
// both by C (L(x) + 2) e^{-L(x)}. For two_sided_L the field x is read as the threshold t.
inline double tail_bound(const HypergeomParams& h, TailSide side) {
  if (side == TailSide::two_sided_L) return tail_bound_l(h, static_cast<double>(h.x));
  h.validate();
  // x > m  <=>  x N > n R, integer exact.
  const auto lhs = static_cast<unsigned long long>(h.x) * h.n_total;
  const auto rhs = static_cast<unsigned long long>(h.draws) * h.reds;
  if (side == TailSide::upper && lhs <= rhs) throw InvalidSide("upper tail bound requires x > m");
  if (side == TailSide::lower && lhs >= rhs) throw InvalidSide("lower tail bound requires x < m");
  const double l = l_function(h);
  return tail_constant(h) * (l + 2.0) * std::exp(-l);
}

// D(F(R), p, q) = F(R)(1 - F(R)) (p - q)^2 / (p (1 - q)).
inline double detection_boundary(double f_r, double p, double q) {
  if (!(f_r > 0.0 && f_r < 1.0)) throw ValidationError("F(R) must lie in (0, 1)");
  if (!(p > 0.0 && p <= 1.0) || !(q >= 0.0 && q < 1.0))
    throw ValidationError("p must lie in (0, 1] and q in [0, 1)");
  if (q >= p) throw InvalidAlternative();
  return f_r * (1.0 - f_r) * (p - q) * (p - q) / (p * (1.0 - q));
}

}  // namespace bscan
