#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "bscan/oracle.hpp"
#include "bscan/statistic.hpp"
#include "test_util.hpp"

using namespace bscan;

namespace {

long double reference_llr(std::size_t n, std::size_t x, std::size_t big_n, std::size_t r) {
  return testutil::direct_llr(n, x, big_n, r, true);
}

Counts counts(std::size_t n_total, std::size_t ones_total, std::size_t n_in, std::size_t ones_in) {
  return Counts{n_in, ones_in, n_total, ones_total};
}

}  // namespace

TEST(Llr, EqualRatesGiveZero) { EXPECT_EQ(llr(counts(100, 40, 20, 8)), 0.0); }

TEST(Llr, LowerInsideRateIsZeroed) { EXPECT_EQ(llr(counts(100, 40, 20, 5)), 0.0); }

TEST(Llr, PinnedValue) {
  // 6.3675538441298668688 from a 40-digit evaluation
  EXPECT_NEAR(llr(counts(100, 40, 20, 15)), 6.3675538441298668688, 1e-12);
  EXPECT_NEAR(llr(counts(100, 40, 20, 15)), static_cast<double>(reference_llr(20, 15, 100, 40)), 1e-12);
}

TEST(Llr, TwoSidedExamples) {
  EXPECT_EQ(llr_two_sided(counts(100, 40, 20, 8)), 0.0);
  EXPECT_DOUBLE_EQ(llr_two_sided(counts(100, 40, 20, 15)), llr(counts(100, 40, 20, 15)));
  const double v = llr_two_sided(counts(100, 40, 20, 5));
  EXPECT_GT(v, 0.0);
  EXPECT_NEAR(v, 1.2293272264328154847, 1e-12);
}

TEST(Llr, Errors) {
  EXPECT_THROW(llr(counts(10, 0, 5, 0)), DegenerateLabels);
  EXPECT_THROW(llr(counts(10, 10, 5, 5)), DegenerateLabels);
  EXPECT_THROW(llr_two_sided(counts(10, 0, 5, 0)), DegenerateLabels);
  EXPECT_THROW(llr(counts(10, 4, 0, 0)), ValidationError);
  EXPECT_THROW(llr(counts(10, 4, 10, 4)), ValidationError);
  EXPECT_THROW(llr(counts(10, 4, 5, 6)), ValidationError);
}

TEST(Llr, BoundaryProportions) {
  // phat = 1, qhat = 0 exercises 0 log 0
  const double v = llr(counts(10, 3, 3, 3));
  EXPECT_NEAR(v, static_cast<double>(reference_llr(3, 3, 10, 3)), 1e-12);
  EXPECT_TRUE(std::isfinite(v));
}

TEST(LlrProperty, NonnegativeAndZeroExactlyWhenNotAbove) {
  std::mt19937_64 gen(1);
  for (int rep = 0; rep < 20000; ++rep) {
    const std::size_t big_n = std::uniform_int_distribution<std::size_t>(2, 400)(gen);
    const std::size_t r = std::uniform_int_distribution<std::size_t>(1, big_n - 1)(gen);
    const std::size_t n = std::uniform_int_distribution<std::size_t>(1, big_n - 1)(gen);
    const std::size_t lo = n + r > big_n ? n + r - big_n : 0;
    const std::size_t x = std::uniform_int_distribution<std::size_t>(lo, std::min(n, r))(gen);
    const Counts c = counts(big_n, r, n, x);
    const double v = llr(c);
    ASSERT_GE(v, 0.0);
    const bool above = static_cast<double>(x) / n > static_cast<double>(r - x) / (big_n - n);
    if (!above) {
      ASSERT_EQ(v, 0.0);
    } else {
      const long double ref = reference_llr(n, x, big_n, r);
      ASSERT_NEAR(v, static_cast<double>(ref), 1e-9 * std::max(1.0L, ref));
    }
  }
}

TEST(LlrProperty, InsideOutsideExchangeSymmetry) {
  std::mt19937_64 gen(2);
  for (int rep = 0; rep < 5000; ++rep) {
    const std::size_t big_n = std::uniform_int_distribution<std::size_t>(2, 300)(gen);
    const std::size_t r = std::uniform_int_distribution<std::size_t>(1, big_n - 1)(gen);
    const std::size_t n = std::uniform_int_distribution<std::size_t>(1, big_n - 1)(gen);
    const std::size_t lo = n + r > big_n ? n + r - big_n : 0;
    const std::size_t x = std::uniform_int_distribution<std::size_t>(lo, std::min(n, r))(gen);
    const double a = llr_two_sided(counts(big_n, r, n, x));
    const double b = llr_two_sided(counts(big_n, r, big_n - n, r - x));
    ASSERT_NEAR(a, b, 1e-10 * std::max(1.0, a));
  }
}

TEST(LFunction, Examples) {
  EXPECT_EQ(l_function({50, 20, 10, 4}), 0.0);
  EXPECT_NEAR(l_function({50, 20, 10, 8}), 4.2119870328852044835, 1e-12);
  EXPECT_NEAR(l_function({50, 20, 10, 0}), 5.9246961280650094231, 1e-12);
  EXPECT_THROW(l_function({50, 20, 10, 11}), ValidationError);
}

TEST(LFunction, StrictMonotonicityAroundMean) {
  for (std::size_t big_n = 2; big_n <= 200; big_n += (big_n < 40 ? 1 : 7)) {
    for (std::size_t r = 1; r < big_n; r += std::max<std::size_t>(1, big_n / 9)) {
      for (std::size_t n = 1; n < big_n; n += std::max<std::size_t>(1, big_n / 9)) {
        HypergeomParams h{big_n, r, n, 0};
        const double m = h.mean();
        double prev = NAN;
        for (long long x = h.support_min(); x <= h.support_max(); ++x) {
          h.x = x;
          const double l = l_function(h);
          if (x > h.support_min()) {
            if (static_cast<double>(x) <= m) ASSERT_LT(l, prev) << big_n << ' ' << r << ' ' << n << ' ' << x;
            else if (static_cast<double>(x - 1) >= m) ASSERT_GT(l, prev) << big_n << ' ' << r << ' ' << n << ' ' << x;
          }
          prev = l;
        }
      }
    }
  }
}

TEST(LFunction, SecondOrderEnvelope) {
  // 2 n (p - pbar)^2 <= n kl(p, pbar) <= n (p - pbar)^2 / (pbar (1 - pbar)), with the quadratic
  // n (p - pbar)^2 / (2 pbar (1 - pbar)) as the small-deviation limit.
  for (double pbar = 0.1; pbar <= 0.9001; pbar += 0.05) {
    for (double d = -0.05; d <= 0.05001; d += 0.005) {
      const double p = pbar + d;
      const double n = 37.0;
      const double one_term = n * bernoulli_kl(p, pbar);
      const double quad = n * d * d / (pbar * (1 - pbar));
      EXPECT_LE(one_term, quad + 1e-15);
      EXPECT_GE(one_term, 2 * n * d * d - 1e-15);
    }
    const double d = 1e-4;
    EXPECT_NEAR(bernoulli_kl(pbar + d, pbar) / (d * d / (2 * pbar * (1 - pbar))), 1.0, 1e-3);
  }
}

TEST(TailBound, UpperExample) {
  const HypergeomParams h{50, 20, 10, 8};
  const double c = 3.5162085466425927704;
  EXPECT_NEAR(tail_constant(h), c, 1e-12);
  const double l = 4.2119870328852044835;
  EXPECT_NEAR(tail_bound(h, TailSide::upper), c * (l + 2) * std::exp(-l), 1e-12);
  EXPECT_GE(tail_bound(h, TailSide::upper), 0.0058429595661932897);
}

TEST(TailBound, LowerExample) {
  const HypergeomParams h{50, 20, 10, 0};
  EXPECT_NEAR(tail_bound(h, TailSide::lower), 0.074472238485074768740, 1e-12);
  EXPECT_GE(tail_bound(h, TailSide::lower), 0.0029248638425452608);
}

TEST(TailBound, TwoSidedNearZeroApproachesFourC) {
  const HypergeomParams h{50, 20, 10, 4};
  const double v = tail_bound_l(h, 1e-12);
  EXPECT_NEAR(v, 4 * tail_constant(h), 1e-9);
  EXPECT_GE(v, 1.0);
  EXPECT_THROW(tail_bound_l(h, 0.0), InvalidSide);
}

TEST(TailBound, SideMismatch) {
  EXPECT_THROW(tail_bound({50, 20, 10, 4}, TailSide::upper), InvalidSide);
  EXPECT_THROW(tail_bound({50, 20, 10, 4}, TailSide::lower), InvalidSide);
  EXPECT_THROW(tail_bound({50, 20, 10, 2}, TailSide::upper), InvalidSide);
  EXPECT_THROW(tail_bound({50, 20, 10, 6}, TailSide::lower), InvalidSide);
}

TEST(TailBound, DominatesExactTailUpToN200) {
  std::size_t checked = 0;
  for (std::size_t big_n = 2; big_n <= 200; big_n += (big_n < 30 ? 1 : 13)) {
    for (std::size_t r = 1; r < big_n; r += std::max<std::size_t>(1, big_n / 7)) {
      for (std::size_t n = 1; n < big_n; n += std::max<std::size_t>(1, big_n / 7)) {
        HypergeomParams h{big_n, r, n, 0};
        for (long long x = h.support_min(); x <= h.support_max(); ++x) {
          h.x = x;
          const auto lhs = static_cast<unsigned long long>(x) * big_n;
          const auto rhs = static_cast<unsigned long long>(n) * r;
          if (lhs > rhs) ASSERT_LE(exact_tail(h, TailSide::upper), tail_bound(h, TailSide::upper));
          if (lhs < rhs) ASSERT_LE(exact_tail(h, TailSide::lower), tail_bound(h, TailSide::lower));
          ++checked;
        }
      }
    }
  }
  EXPECT_GT(checked, 10000u);
}

TEST(DetectionBoundary, Examples) {
  EXPECT_DOUBLE_EQ(detection_boundary(0.5, 1.0, 0.0), 0.25);
  EXPECT_NEAR(detection_boundary(0.125, 0.75, 0.4), 0.029774305555555555556, 1e-15);
  EXPECT_LT(detection_boundary(0.3, 0.4 + 1e-9, 0.4), 1e-15);
  EXPECT_THROW(detection_boundary(0.3, 0.4, 0.4), InvalidAlternative);
  EXPECT_THROW(detection_boundary(0.3, 0.2, 0.4), InvalidAlternative);
  EXPECT_THROW(detection_boundary(0.0, 0.5, 0.4), ValidationError);
}

TEST(DetectionBoundary, IncreasingInP) {
  for (double q : {0.0, 0.2, 0.5}) {
    double prev = 0.0;
    for (double p = q + 0.01; p <= 1.0; p += 0.01) {
      const double d = detection_boundary(0.2, p, q);
      EXPECT_GT(d, prev);
      prev = d;
    }
  }
}

TEST(Kl, ZeroLogZeroConvention) {
  EXPECT_NEAR(bernoulli_kl(0.0, 0.5), std::log(2.0), 1e-15);
  EXPECT_NEAR(bernoulli_kl(1.0, 0.5), std::log(2.0), 1e-15);
  EXPECT_EQ(bernoulli_kl(0.3, 0.3), 0.0);
}
