#include <algorithm>
#include <random>

#include <gtest/gtest.h>

#include "faraway/clustering.hpp"
#include "faraway/error.hpp"
#include "oracles.hpp"

using namespace faraway;

namespace {

PointCloud frustum(std::vector<Vec3> pts) { return PointCloud(Frame::Frustum, std::move(pts)); }

}  // namespace

TEST(AxisHistogram, SinglePointGivesOneBin) {
  const std::vector<double> v{5.0};
  const auto h = axis_histogram(v, 0.1);
  ASSERT_EQ(h.bin_count(), 1u);
  EXPECT_EQ(h.counts[0], 1u);
  EXPECT_DOUBLE_EQ(h.left_edge(0), 5.0);
  EXPECT_DOUBLE_EQ(h.right_edge(0), 5.1);
}

TEST(AxisHistogram, HandBinnedCounts) {
  const std::vector<double> v{0.0, 0.05, 0.25};
  const auto h = axis_histogram(v, 0.1);
  EXPECT_EQ(h.counts, (std::vector<std::size_t>{2, 0, 1}));
}

TEST(AxisHistogram, EdgesAreContiguousAndCountsSumToN) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-3, 7);
  std::vector<double> v(300);
  for (double& x : v) x = u(rng);
  const auto h = axis_histogram(v, 0.1);
  std::size_t total = 0;
  for (std::size_t j = 0; j < h.bin_count(); ++j) {
    total += h.counts[j];
    if (j + 1 < h.bin_count()) EXPECT_EQ(h.right_edge(j), h.left_edge(j + 1));
  }
  EXPECT_EQ(total, v.size());
  EXPECT_EQ(h.left_edge(0), *std::min_element(v.begin(), v.end()));
  EXPECT_GE(h.right_edge(h.bin_count() - 1), *std::max_element(v.begin(), v.end()));
}

TEST(AxisHistogram, ValueOnAnEdgeGoesToTheRightBin) {
  const std::vector<double> v{0.0, 0.5, 1.0};
  const auto h = axis_histogram(v, 0.5);
  ASSERT_EQ(h.bin_count(), 3u);
  EXPECT_EQ(h.counts, (std::vector<std::size_t>{1, 1, 1}));
}

TEST(AxisHistogram, MatchesBruteForceBinning) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(-5, 5);
  std::uniform_int_distribution<int> n(1, 200);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> v(static_cast<std::size_t>(n(rng)));
    // Include values on the 0.1 grid so edge cases are exercised.
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = i % 3 == 0 ? std::round(u(rng) * 10) / 10 : u(rng);
    const auto h = axis_histogram(v, 0.1);
    const auto o = oracle::histogram(v, 0.1);
    EXPECT_EQ(h.origin, o.origin);
    EXPECT_EQ(h.counts, o.counts);
  }
}

TEST(AxisHistogram, ErrorsOnEmptyInputAndBadWidth) {
  try {
    axis_histogram(std::vector<double>{}, 0.1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::EmptyCluster);
  }
  EXPECT_THROW(axis_histogram(std::vector<double>{1.0}, 0.0), Error);
  EXPECT_THROW(axis_histogram(std::vector<double>{1.0}, -1.0), Error);
}

TEST(EstimateCentroid, SinglePointLandsInItsBins) {
  const auto c = estimate_centroid(frustum({{3, 1, 62}}), 0.1);
  EXPECT_NEAR(c.x(), 3.05, 1e-12);
  EXPECT_NEAR(c.y(), 1.05, 1e-12);
  EXPECT_NEAR(c.z(), 62.05, 1e-12);
  for (int a = 0; a < 3; ++a) EXPECT_LE(std::abs(c[a] - Vec3(3, 1, 62)[a]), 0.05 + 1e-12);
}

TEST(EstimateCentroid, DominantModeWinsOverOutliers) {
  std::vector<Vec3> pts(8, Vec3(10, 0, 60));
  pts.emplace_back(10, 0, 40);
  pts.emplace_back(10, 0, 40);
  const auto c = estimate_centroid(frustum(pts), 0.1);
  const auto o = oracle::centroid(pts, 0.1);
  EXPECT_EQ(c, o);
  // The bin containing 60 is [40 + 200 w, 40 + 201 w).
  EXPECT_LE(std::abs(c.z() - 60.0), 0.05 + 1e-9);
  EXPECT_DOUBLE_EQ(c.x(), 10.05);
}

TEST(EstimateCentroid, IdenticalPointsGiveThatPointsBinMidpoints) {
  const std::vector<Vec3> pts(5, Vec3(-2.5, 0.7, 80.3));
  const auto c = estimate_centroid(frustum(pts), 0.1);
  for (int a = 0; a < 3; ++a) {
    EXPECT_NEAR(c[a], pts[0][a] + 0.05, 1e-12);
  }
}

TEST(EstimateCentroid, TiesGoToTheLowestBin) {
  // Two equally populated bins on z: [60, 60.1) and [61, 61.1).
  const auto c = estimate_centroid(frustum({{0, 0, 61}, {0, 0, 60}, {0, 0, 61}, {0, 0, 60}}), 0.1);
  EXPECT_NEAR(c.z(), 60.05, 1e-12);
}

TEST(EstimateCentroid, MatchesBruteForceOnRandomClouds) {
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<int> n(1, 50);
  std::uniform_real_distribution<double> spread(0.05, 3), centre(-20, 20), depth(5, 90);
  for (int trial = 0; trial < 1000; ++trial) {
    const double s = spread(rng);
    std::normal_distribution<double> jitter(0, s);
    const Vec3 mu(centre(rng), centre(rng) / 10, depth(rng));
    std::vector<Vec3> pts(static_cast<std::size_t>(n(rng)));
    for (auto& p : pts) p = mu + Vec3(jitter(rng), jitter(rng), jitter(rng));
    const Vec3 got = estimate_centroid(frustum(pts), 0.1);
    EXPECT_EQ(got, oracle::centroid(pts, 0.1)) << "trial " << trial;
  }
}

TEST(EstimateCentroid, PermutationInvariantAndWithinRange) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(-2, 2);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<Vec3> pts(20);
    for (auto& p : pts) p = Vec3(u(rng), u(rng), 60 + u(rng));
    const Vec3 c = estimate_centroid(frustum(pts), 0.1);
    std::shuffle(pts.begin(), pts.end(), rng);
    EXPECT_EQ(estimate_centroid(frustum(pts), 0.1), c);
    for (int a = 0; a < 3; ++a) {
      double lo = pts[0][a], hi = pts[0][a];
      for (const auto& p : pts) {
        lo = std::min(lo, p[a]);
        hi = std::max(hi, p[a]);
      }
      // A bin midpoint: at least the minimum, at most half a bin past the maximum.
      EXPECT_GE(c[a], lo);
      EXPECT_LE(c[a], hi + 0.05 + 1e-12);
    }
  }
}

TEST(EstimateCentroid, DuplicatingTheModalBinKeepsTheSelection) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-1, 1);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<Vec3> pts(15);
    for (auto& p : pts) p = Vec3(u(rng), u(rng), 70 + u(rng));
    const Vec3 c = estimate_centroid(frustum(pts), 0.1);
    // Duplicate the points whose z falls in the selected z bin.
    std::vector<double> zs;
    for (const auto& p : pts) zs.push_back(p.z());
    const auto h = oracle::histogram(zs, 0.1);
    const std::size_t j = h.modal();
    ASSERT_EQ(h.midpoint(j), c.z());
    std::vector<Vec3> more = pts;
    for (const auto& p : pts) {
      if (h.left(j) <= p.z() && p.z() < h.left(j + 1)) more.push_back(p);
    }
    EXPECT_EQ(estimate_centroid(frustum(more), 0.1).z(), c.z());
  }
}

TEST(EstimateCentroid, ErrorsOnEmptyOrWrongFrame) {
  try {
    estimate_centroid(frustum({}), 0.1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::EmptyCluster);
  }
  try {
    estimate_centroid(PointCloud(Frame::Camera, {{0, 0, 1}}), 0.1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::FrameMismatch);
  }
}
