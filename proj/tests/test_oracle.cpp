#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "bscan/oracle.hpp"
#include "test_util.hpp"

using namespace bscan;
using testutil::uniform_dataset;

TEST(BruteForce, SeparableFixture) {
  // Ten points; the four label-1 points are exactly those with x > 5 and y > 5.
  const Dataset d({{1, 1, 0}, {2, 8, 0}, {3, 3, 0}, {4, 6, 0}, {5, 2, 0},
                   {6, 7, 1}, {7, 9, 1}, {8, 6, 1}, {9, 8, 1}, {9.5, 1, 0}});
  const auto m = brute_force_max(d);
  // Perfect separation: n = x = R = 4 of N = 10, T = N H(0.4).
  const double expected = -(4 * std::log(0.4) + 6 * std::log(0.6));
  EXPECT_NEAR(m.t, expected, 1e-12);
  EXPECT_EQ(m.rect.counts.n_in, 4u);
  EXPECT_EQ(m.rect.counts.ones_in, 4u);
  // Lexicographically smallest attaining tuple: x ranks 5..9 (rank 5 sits below the y cut),
  // y ranks 4..10: the cut can drop to y = 3 since that point lies left of the x range.
  EXPECT_EQ(m.rect.x_lo_rank, 5u);
  EXPECT_EQ(m.rect.x_hi_rank, 9u);
  EXPECT_EQ(m.rect.y_lo_rank, 4u);
  EXPECT_EQ(m.rect.y_hi_rank, 10u);
}

TEST(BruteForce, ConstantLabelsScoreZero) {
  std::vector<LabeledPoint> pts;
  for (int k = 0; k < 15; ++k) pts.push_back({double(k), double((k * 7) % 15), 1});
  EXPECT_EQ(brute_force_max(Dataset(pts)).t, 0.0);
}

TEST(BruteForce, SizeGuard) {
  EXPECT_THROW(brute_force_max(uniform_dataset(81, 0.4, 1)), TooLarge);
  EXPECT_NO_THROW(brute_force_max(uniform_dataset(30, 0.4, 1)));
}

TEST(BruteForce, DominatesEnumeratedFamily) {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const Dataset d = uniform_dataset(55, 0.4, seed);
    double best = 0.0;
    enumerate_block(d, BlockSpec::at(3), [&](const ApproxRect& r) {
      if (!r.empty && r.counts.n_in < d.size())
        best = std::max(best, testutil::direct_llr(r.counts.n_in, r.counts.ones_in, d.size(), d.ones_total()));
    });
    EXPECT_LE(best, brute_force_max(d).t * (1 + 1e-12));
  }
}

TEST(ExactTail, EndpointsArePointMasses) {
  const HypergeomParams top{50, 20, 10, 10};
  EXPECT_NEAR(exact_tail(top, TailSide::upper), std::exp(static_cast<double>(hypergeom_log_pmf(top, 10))), 1e-14 * 1.8e-5);
  const HypergeomParams zero{50, 20, 10, 0};
  EXPECT_NEAR(exact_tail(zero, TailSide::lower), 0.0029248638425452608, 1e-17);
  // C(30,10)/C(50,10) written out
  EXPECT_NEAR(exact_tail(zero, TailSide::lower), 30045015.0 / 10272278170.0, 1e-17);
}

TEST(ExactTail, PinnedUpperTail) {
  EXPECT_NEAR(exact_tail({50, 20, 10, 8}, TailSide::upper), 0.0058429595661932897, 1e-17);
  EXPECT_LT(exact_tail({50, 20, 10, 8}, TailSide::upper), tail_bound({50, 20, 10, 8}, TailSide::upper));
}

TEST(ExactTail, ComplementIdentity) {
  for (std::size_t n_total : {30u, 200u, 1500u}) {
    const HypergeomParams base{n_total, n_total / 3, n_total / 5, 0};
    for (long long x = base.support_min() + 1; x <= base.support_max(); ++x) {
      HypergeomParams up = base, lo = base;
      up.x = x;
      lo.x = x - 1;
      EXPECT_NEAR(exact_tail(up, TailSide::upper) + exact_tail(lo, TailSide::lower), 1.0, 1e-12);
    }
  }
}

TEST(ExactTail, MatchesRecursivePmf) {
  // pmf(x+1)/pmf(x) = (R-x)(n-x) / ((x+1)(N-R-n+x+1)), summed in quad precision.
  const std::size_t big_n = 120, r = 45, n = 30;
  std::vector<__float128> pmf(n + 1, 0);
  pmf[0] = 1;
  for (std::size_t x = 0; x < n; ++x)
    pmf[x + 1] = pmf[x] * static_cast<__float128>(static_cast<double>((r - x) * (n - x))) /
                 static_cast<__float128>(static_cast<double>((x + 1) * (big_n - r - n + x + 1)));
  __float128 total = 0;
  for (auto v : pmf) total += v;
  __float128 acc = 0;
  for (long long x = n; x >= 0; --x) {
    acc += pmf[static_cast<std::size_t>(x)];
    const double ref = static_cast<double>(acc / total);
    const double got = exact_tail({big_n, r, n, x}, TailSide::upper);
    EXPECT_NEAR(got, ref, 1e-12 * ref) << x;
  }
}

TEST(ExactTail, Guards) {
  EXPECT_THROW(exact_tail({2001, 10, 10, 1}, TailSide::upper), TooLarge);
  EXPECT_THROW(exact_tail({50, 20, 10, 11}, TailSide::upper), ValidationError);
  EXPECT_THROW(exact_tail({50, 20, 10, 3}, TailSide::two_sided_L), InvalidSide);
}

TEST(ApproxQuality, EnumeratedRectangleHasRatioZero) {
  const Dataset d = uniform_dataset(500, 0.4, 3);
  // Pick an enumerated rectangle with mass in block 4's band.
  ApproxRect pick;
  bool found = false;
  enumerate_block(d, BlockSpec::at(4), [&](const ApproxRect& r) {
    if (found || r.empty) return;
    const double f = static_cast<double>(r.counts.n_in) / d.size();
    if (f > 1.0 / 32 && f <= 1.0 / 16) {
      pick = r;
      found = true;
    }
  });
  ASSERT_TRUE(found);
  const auto m = approx_quality(d, pick.box);
  EXPECT_EQ(m.ratio, 0.0);
  EXPECT_EQ(m.best.counts.n_in, pick.counts.n_in);
}

TEST(ApproxQuality, RatioWithinGuaranteeOnRandomRects) {
  const std::size_t n = 500;
  const Dataset d = uniform_dataset(n, 0.4, 7);
  std::mt19937_64 gen(2);
  std::uniform_real_distribution<double> u;
  int tested = 0;
  while (tested < 40) {
    double x0 = u(gen), x1 = u(gen), y0 = u(gen), y1 = u(gen);
    if (x0 > x1) std::swap(x0, x1);
    if (y0 > y1) std::swap(y0, y1);
    const Box q{x0, x1, y0, y1};
    const auto rc = testutil::recount(d, q);
    const double f = static_cast<double>(rc.n_in) / n;
    if (!(f > 1.0 / 64 && f <= 1.0 / 8)) continue;
    ++tested;
    const auto m = approx_quality(d, q);
    const int ell = m.best.ell;
    EXPECT_LE(m.ratio, 1.0 / std::sqrt(double(ell)) + 4.0 / (n * f));
  }
}

TEST(ApproxQuality, OutsideBlockRangeIsRejected) {
  const Dataset d = uniform_dataset(500, 0.4, 3);
  EXPECT_THROW(approx_quality(d, Box{0.0, 0.03, 0.0, 0.03}), ValidationError);  // far below 2^-6
  EXPECT_THROW(approx_quality(d, Box{0.0, 1.0, 0.0, 1.0}), ValidationError);    // F = 1
  EXPECT_THROW(approx_quality(d, Box{2.0, 3.0, 2.0, 3.0}), ValidationError);    // empty
}
