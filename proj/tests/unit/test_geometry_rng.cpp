#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "core/geometry.hpp"
#include "core/rng.hpp"

namespace forceinfer {
namespace {

TEST(Geometry, HeadingDifferenceWrapsAround) {
  EXPECT_DOUBLE_EQ(heading_difference(350.0, 10.0), 20.0);
  EXPECT_DOUBLE_EQ(heading_difference(0.0, 180.0), 180.0);
  EXPECT_DOUBLE_EQ(heading_difference(90.0, 90.0), 0.0);
  EXPECT_DOUBLE_EQ(heading_difference(-90.0, 90.0), 180.0);
}

TEST(Geometry, CentroidOfSquare) {
  const std::vector<Point> pts{{0, 0}, {2, 0}, {2, 2}, {0, 2}};
  EXPECT_EQ(centroid(pts), (Point{1, 1}));
  EXPECT_EQ(centroid(std::span<const Point>{}), (Point{0, 0}));
}

TEST(Geometry, MeanHeadingIsCircular) {
  const std::vector<double> across_north{350.0, 10.0};
  const auto m = mean_heading(across_north);
  ASSERT_TRUE(m.has_value());
  EXPECT_NEAR(std::min(*m, 360.0 - *m), 0.0, 1e-9);
  const std::vector<double> opposed{0.0, 180.0};
  EXPECT_FALSE(mean_heading(opposed).has_value());
  EXPECT_FALSE(mean_heading(std::span<const double>{}).has_value());
}

TEST(Rng, SameSeedSameStream) {
  Rng a(42);
  Rng b(42);
  for (int i = 0; i < 100; ++i) {
    EXPECT_EQ(a.uniform01(), b.uniform01());
    EXPECT_EQ(a.normal(0, 1), b.normal(0, 1));
    EXPECT_EQ(a.poisson(3.5), b.poisson(3.5));
  }
}

TEST(Rng, RangesHold) {
  Rng r(7);
  for (int i = 0; i < 10000; ++i) {
    const double u = r.uniform01();
    EXPECT_GE(u, 0.0);
    EXPECT_LT(u, 1.0);
    EXPECT_LT(r.below(13), 13u);
    const double v = r.uniform(-5.0, 5.0);
    EXPECT_GE(v, -5.0);
    EXPECT_LT(v, 5.0);
  }
}

TEST(Rng, MomentsAreSane) {
  Rng r(11);
  const int n = 200000;
  double sum = 0.0;
  double sq = 0.0;
  double pois = 0.0;
  for (int i = 0; i < n; ++i) {
    const double z = r.normal(0.0, 1.0);
    sum += z;
    sq += z * z;
    pois += static_cast<double>(r.poisson(4.0));
  }
  // Five standard errors.
  EXPECT_NEAR(sum / n, 0.0, 5.0 / std::sqrt(n));
  EXPECT_NEAR(sq / n, 1.0, 5.0 * std::sqrt(2.0 / n));
  EXPECT_NEAR(pois / n, 4.0, 5.0 * std::sqrt(4.0 / n));
}

}  // namespace
}  // namespace forceinfer
