#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>
#include <random>

#include "parlstance/lowess.hpp"
#include "support/oracles.hpp"

using namespace parlstance;

namespace {

std::vector<Point> random_points(std::mt19937_64& gen, std::size_t n) {
  std::uniform_real_distribution<double> ux(0.0, 10.0), uy(-1.0, 1.0);
  std::vector<Point> pts(n);
  for (auto& p : pts) {
    p.x = ux(gen);
    p.y = std::sin(p.x) + 0.3 * uy(gen);
  }
  return pts;
}

}  // namespace

TEST(Lowess, MatchesReferenceOnRandomSets) {
  std::mt19937_64 gen(42);
  for (int trial = 0; trial < 50; ++trial) {
    auto pts = random_points(gen, 20);
    auto got = lowess(pts, {0.6, 0, 50});
    auto want = testkit::reference_lowess(pts, 0.6);
    for (std::size_t i = 0; i < pts.size(); ++i) EXPECT_NEAR(got[i], want[i], 1e-9) << "trial " << trial;
  }
}

TEST(Lowess, MatchesReferenceWithRobustness) {
  std::mt19937_64 gen(7);
  for (int trial = 0; trial < 20; ++trial) {
    auto pts = random_points(gen, 30);
    auto got = lowess(pts, {0.5, 2, 50});
    auto want = testkit::reference_lowess(pts, 0.5, 2);
    for (std::size_t i = 0; i < pts.size(); ++i) EXPECT_NEAR(got[i], want[i], 1e-9) << "trial " << trial;
  }
}

TEST(Lowess, CollinearPointsRecovered) {
  std::vector<Point> pts = {{0, 0}, {1, 1}, {2, 2}};
  auto fit = lowess(pts, {1.0, 0, 50});
  for (std::size_t i = 0; i < 3; ++i) EXPECT_NEAR(fit[i], pts[i].y, 1e-12);
}

TEST(Lowess, AnyLineRecovered) {
  std::mt19937_64 gen(9);
  std::uniform_real_distribution<double> u(-5, 5);
  for (double f : {0.2, 0.5, 0.8, 1.0}) {
    std::vector<Point> pts(40);
    double a = u(gen), b = u(gen);
    for (auto& p : pts) {
      p.x = u(gen);
      p.y = a + b * p.x;
    }
    auto fit = lowess(pts, {f, 2, 50});
    for (std::size_t i = 0; i < pts.size(); ++i) EXPECT_NEAR(fit[i], pts[i].y, 1e-9);
  }
}

TEST(Lowess, RobustnessDampsOutlier) {
  std::vector<Point> pts;
  // small alternating noise keeps the residual median positive
  for (int i = 0; i < 30; ++i) pts.push_back({double(i), 0.5 * i + (i % 2 ? 0.05 : -0.05)});
  pts[15].y += 50.0;
  auto worst = [&](const std::vector<double>& fit) {
    double m = 0;
    for (std::size_t i = 0; i < pts.size(); ++i)
      if (i != 15) m = std::max(m, std::abs(fit[i] - 0.5 * double(i)));
    return m;
  };
  double plain = worst(lowess(pts, {0.4, 0, 50}));
  double robust = worst(lowess(pts, {0.4, 2, 50}));
  EXPECT_GT(plain, 1.0);
  EXPECT_LT(robust, 0.1 * plain);
}

TEST(Lowess, ZeroResidualMedianStopsRobustness) {
  std::vector<Point> pts;
  for (int i = 0; i < 30; ++i) pts.push_back({double(i), 0.5 * i});
  pts[15].y += 50.0;
  EXPECT_EQ(lowess(pts, {0.4, 0, 50}), lowess(pts, {0.4, 3, 50}));
}

// On evenly spaced x, at interior points the neighbourhood is symmetric so
// the local line passes through the weighted mean and stays within the
// range of the neighbouring y values.
TEST(Lowess, SymmetricInteriorStaysWithinNeighbourRange) {
  std::mt19937_64 gen(5);
  std::uniform_real_distribution<double> uy(0, 1);
  const std::size_t n = 41;
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<Point> pts(n);
    for (std::size_t i = 0; i < n; ++i) pts[i] = {double(i), uy(gen)};
    const double f = 0.25;
    auto fit = lowess(pts, {f, 0, 50});
    std::size_t r = static_cast<std::size_t>(std::ceil(f * n));
    std::size_t half = r / 2 + 1;
    for (std::size_t i = half; i + half < n; ++i) {
      double lo = 1, hi = 0;
      for (std::size_t j = i - half; j <= i + half; ++j) {
        lo = std::min(lo, pts[j].y);
        hi = std::max(hi, pts[j].y);
      }
      EXPECT_GE(fit[i], lo - 1e-12);
      EXPECT_LE(fit[i], hi + 1e-12);
    }
  }
}

TEST(Lowess, RejectsDegenerateInput) {
  std::vector<Point> same = {{1, 0}, {1, 1}, {1, 2}};
  EXPECT_THROW(lowess(same), ArgumentError);
  std::vector<Point> one = {{1, 0}};
  EXPECT_THROW(lowess(one), ArgumentError);
  std::vector<Point> ok = {{0, 0}, {1, 1}};
  EXPECT_THROW(lowess(ok, {0.0, 0, 50}), ArgumentError);
  EXPECT_THROW(lowess(ok, {1.5, 0, 50}), ArgumentError);
}

TEST(Lowess, TiedXValuesShareFit) {
  std::vector<Point> pts = {{0, 0}, {0, 2}, {1, 1}, {1, 3}, {2, 2}, {2, 4}};
  auto fit = lowess(pts, {1.0, 0, 50});
  EXPECT_NEAR(fit[0], fit[1], 1e-12);
  EXPECT_NEAR(fit[2], fit[3], 1e-12);
  EXPECT_NEAR(fit[4], fit[5], 1e-12);
}
