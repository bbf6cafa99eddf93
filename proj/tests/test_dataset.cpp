#include <gtest/gtest.h>

#include <algorithm>
#include <random>
#include <sstream>

#include "bscan/dataset.hpp"

using namespace bscan;

namespace {

Dataset parse(const std::string& text) {
  std::istringstream in(text);
  return ingest_csv(in);
}

}  // namespace

TEST(Ingest, ThreeRowsCountsLabels) {
  const auto d = parse("x,y,label\n0.5,1,1\n-2,3,0\n4,4,1\n");
  EXPECT_EQ(d.n_total(), 3u);
  EXPECT_EQ(d.ones_total(), 2u);
  EXPECT_DOUBLE_EQ(d.pbar(), 2.0 / 3.0);
}

TEST(Ingest, HeaderOnlyIsEmptyInput) { EXPECT_THROW(parse("x,y,label\n"), EmptyInput); }

TEST(Ingest, EmptyStreamIsEmptyInput) { EXPECT_THROW(parse(""), EmptyInput); }

TEST(Ingest, NonBinaryLabelReportsRow) {
  try {
    parse("x,y,label\n1,2,0\n3,4,2\n");
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.row(), 3u);
  }
}

TEST(Ingest, NonNumericCoordinate) {
  try {
    parse("x,y,label\n1,abc,0\n");
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.row(), 2u);
  }
}

TEST(Ingest, MissingColumn) {
  EXPECT_THROW(parse("x,y,label\n1,2\n"), ParseError);
  EXPECT_THROW(parse("x,label\n1,0\n"), ParseError);
}

TEST(Ingest, NonFiniteCoordinateRejected) { EXPECT_THROW(parse("x,y,label\ninf,0,1\n"), ParseError); }

TEST(Ingest, HeaderOrderAndExtraColumns) {
  const auto d = parse("label,id,y,x\n1,a,5,2\n0,b,6,1\n");
  ASSERT_EQ(d.size(), 2u);
  EXPECT_DOUBLE_EQ(d.points()[0].x, 1.0);
  EXPECT_DOUBLE_EQ(d.points()[0].y, 6.0);
  EXPECT_EQ(d.points()[0].label, 0);
}

TEST(Ingest, ByteOrderMarkAndCrlf) {
  const auto d = parse("\xEF\xBB\xBFx,y,label\r\n1,2,1\r\n");
  EXPECT_EQ(d.size(), 1u);
  EXPECT_EQ(d.ones_total(), 1u);
}

TEST(Dataset, SortedByXThenYThenInputOrder) {
  std::vector<LabeledPoint> pts{{2, 1, 0}, {1, 5, 1}, {1, 2, 0}, {1, 2, 1}, {0, 9, 0}};
  const Dataset d(pts);
  const auto p = d.points();
  EXPECT_DOUBLE_EQ(p[0].x, 0);
  EXPECT_DOUBLE_EQ(p[1].y, 2);
  EXPECT_EQ(p[1].label, 0);  // input order among exact duplicates
  EXPECT_EQ(p[2].label, 1);
  EXPECT_DOUBLE_EQ(p[3].y, 5);
  EXPECT_DOUBLE_EQ(p[4].x, 2);
  EXPECT_TRUE(std::is_sorted(d.xs().begin(), d.xs().end()));
}

TEST(Dataset, RejectsInvalidPoints) {
  EXPECT_THROW(Dataset({{0, NAN, 0}}), ValidationError);
  EXPECT_THROW(Dataset({{0, 0, 3}}), ValidationError);
}

TEST(OrderStat, Examples) {
  const Dataset d({{5, 0, 0}, {1, 0, 0}, {4, 0, 1}, {2, 0, 0}, {3, 0, 1}});
  EXPECT_DOUBLE_EQ(order_stat_x(d, 1), 1.0);
  EXPECT_DOUBLE_EQ(order_stat_x(d, 5 + 7.3), 5.0);
  EXPECT_DOUBLE_EQ(order_stat_x(d, 2.5), 3.0);
  EXPECT_DOUBLE_EQ(order_stat_x(d, 2.49), 2.0);
  EXPECT_DOUBLE_EQ(order_stat_x(d, -4), 1.0);
  EXPECT_THROW(order_stat(std::span<const double>{}, 1.0), ValidationError);
}

TEST(OrderStat, NondecreasingInR) {
  std::mt19937_64 gen(7);
  std::normal_distribution<double> g;
  std::vector<LabeledPoint> pts(40);
  for (auto& p : pts) p = {g(gen), g(gen), 0};
  const Dataset d(pts);
  double prev = -INFINITY;
  for (double r = -3; r < 50; r += 0.05) {
    const double v = order_stat_x(d, r);
    EXPECT_GE(v, prev);
    prev = v;
  }
}

TEST(Dataset, CsvRoundTrip) {
  std::mt19937_64 gen(11);
  std::normal_distribution<double> g;
  std::bernoulli_distribution b(0.3);
  std::vector<LabeledPoint> pts(200);
  for (auto& p : pts) p = {g(gen), g(gen), static_cast<std::uint8_t>(b(gen))};
  const Dataset d(pts);
  std::stringstream ss;
  write_csv(ss, d.points());
  const Dataset e = ingest_csv(ss);
  ASSERT_EQ(e.size(), d.size());
  EXPECT_EQ(e.ones_total(), d.ones_total());
  for (std::size_t u = 0; u < d.size(); ++u) {
    EXPECT_EQ(e.points()[u].x, d.points()[u].x);
    EXPECT_EQ(e.points()[u].y, d.points()[u].y);
    EXPECT_EQ(e.points()[u].label, d.points()[u].label);
  }
}

TEST(Dataset, PermutingLabelsKeepsGeometryAndTotal) {
  std::mt19937_64 gen(3);
  std::uniform_real_distribution<double> u;
  std::vector<LabeledPoint> pts(100);
  for (auto& p : pts) p = {u(gen), u(gen), static_cast<std::uint8_t>(u(gen) < 0.4)};
  const Dataset d(pts);
  std::vector<std::uint8_t> labels(d.labels().begin(), d.labels().end());
  std::shuffle(labels.begin(), labels.end(), gen);
  const Dataset e = d.with_labels(labels);
  EXPECT_EQ(e.ones_total(), d.ones_total());
  EXPECT_TRUE(std::equal(e.xs().begin(), e.xs().end(), d.xs().begin()));
  EXPECT_TRUE(std::equal(e.ys().begin(), e.ys().end(), d.ys().begin()));
  EXPECT_THROW(d.with_labels(std::vector<std::uint8_t>(3, 0)), ValidationError);
}

TEST(Dataset, DegenerateFlag) {
  EXPECT_TRUE(Dataset({{0, 0, 1}, {1, 1, 1}}).degenerate());
  EXPECT_FALSE(Dataset({{0, 0, 1}, {1, 1, 0}}).degenerate());
}
