#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include <gtest/gtest.h>

#include "ampi/error.hpp"
#include "ampi/mpi.hpp"

namespace ampi {
namespace {

std::vector<double> random_logits(std::mt19937_64& rng, int n, double spread = 2.0) {
  std::uniform_real_distribution<double> u(-spread, spread);
  std::vector<double> v(n);
  for (double& x : v) x = u(rng);
  return v;
}

Plane constant_plane(int w, int h, double color, double alpha, double depth) {
  return {ImageBuffer(w, h, 3, color), ImageBuffer(w, h, 1, alpha), depth};
}

TEST(NormalizeBinWidths, EqualLogitsGiveEqualWidths) {
  const std::vector<double> logits(4, 1.7);
  const BinWidths b = normalize_bin_widths(logits);
  for (double w : b.values()) EXPECT_NEAR(w, 0.25, 1e-12);
}

TEST(NormalizeBinWidths, AnalyticTwoBin) {
  const std::vector<double> logits{0.0, std::log(3.0)};
  const BinWidths b = normalize_bin_widths(logits);
  EXPECT_NEAR(b[0], 0.25, 1e-12);
  EXPECT_NEAR(b[1], 0.75, 1e-12);
}

TEST(NormalizeBinWidths, ShiftInvariant) {
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> logits = random_logits(rng, 1 + trial % 9);
    const BinWidths a = normalize_bin_widths(logits);
    for (double& x : logits) x += 17.3;
    const BinWidths b = normalize_bin_widths(logits);
    for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(a[i], b[i], 1e-12);
  }
}

TEST(NormalizeBinWidths, PositiveAndNormalizedForExtremeLogits) {
  const std::vector<double> logits{800.0, -800.0, 0.0, 799.0};
  const BinWidths b = normalize_bin_widths(logits);
  double sum = 0.0;
  for (double w : b.values()) {
    EXPECT_GT(w, 0.0);
    sum += w;
  }
  EXPECT_NEAR(sum, 1.0, 1e-12);
}

TEST(BinWidths, RejectsInvalid) {
  EXPECT_THROW(BinWidths({0.5, 0.6}), Error);
  EXPECT_THROW(BinWidths({1.0, 0.0}), Error);
  EXPECT_THROW(BinWidths({}), Error);
  EXPECT_NO_THROW(BinWidths({0.5, 0.5}));
}

TEST(PlanePositions, TwoEqualBins) {
  const auto p = plane_positions(BinWidths({0.5, 0.5}), {1.0, 5.0});
  EXPECT_NEAR(p[0], 2.0, 1e-12);
  EXPECT_NEAR(p[1], 4.0, 1e-12);
}

TEST(PlanePositions, SingleBinIsMidpoint) {
  const auto p = plane_positions(BinWidths({1.0}), {1.0, 5.0});
  EXPECT_NEAR(p[0], 3.0, 1e-12);
}

// Centers of the bins [0,1), [1,3), [3,6), [6,10).
TEST(PlanePositions, FourBinPrefixSums) {
  const std::vector<double> w{0.1, 0.2, 0.3, 0.4};
  const auto p = plane_positions(BinWidths(w), {1e-300, 10.0});
  std::vector<double> edges(w.size() + 1, 0.0);
  std::partial_sum(w.begin(), w.end(), edges.begin() + 1);
  const std::vector<double> expected{0.5, 2.0, 4.5, 8.0};
  for (std::size_t i = 0; i < 4; ++i) {
    EXPECT_NEAR(p[i], expected[i], 1e-12);
    EXPECT_NEAR(p[i], 10.0 * 0.5 * (edges[i] + edges[i + 1]), 1e-12);
  }
}

TEST(PlanePositions, StrictlyIncreasingAndContained) {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 1 + trial % 16;
    const BinWidths b = normalize_bin_widths(random_logits(rng, n, 4.0));
    const DepthRange r{0.5 + trial * 0.01, 20.0};
    const auto p = plane_positions(b, r);
    for (int i = 0; i < n; ++i) {
      EXPECT_GT(p[i], r.d_near);
      EXPECT_LT(p[i], r.d_far);
      if (i > 0) EXPECT_GT(p[i], p[i - 1]);
    }
    EXPECT_GE(p.front(), r.d_near + r.extent() * b[0] / 2 - 1e-12);
    EXPECT_LE(p.back(), r.d_far - r.extent() * b[n - 1] / 2 + 1e-12);
  }
}

TEST(PlanePositions, EqualWidthsMatchUniformExactly) {
  for (int n : {1, 2, 3, 4, 7, 8, 16}) {
    const DepthRange r{1.5, 10.0};
    const auto a = plane_positions(BinWidths(std::vector<double>(n, 1.0 / n)), r);
    const auto b = uniform_positions(n, r);
    for (int i = 0; i < n; ++i) EXPECT_NEAR(a[i], b[i], 1e-12);
  }
}

TEST(PlanePositions, JacobianMatchesFiniteDifferences) {
  std::mt19937_64 rng(3);
  const DepthRange r{1.0, 9.0};
  const int n = 5;
  std::vector<double> w(n);
  {
    const BinWidths b = normalize_bin_widths(random_logits(rng, n));
    std::copy(b.values().begin(), b.values().end(), w.begin());
  }
  // Direct evaluation so perturbed widths need not sum to one.
  auto positions = [&](const std::vector<double>& ww) {
    std::vector<double> p(n);
    double prefix = 0.0;
    for (int i = 0; i < n; ++i) {
      p[i] = r.d_near + r.extent() * (ww[i] / 2 + prefix);
      prefix += ww[i];
    }
    return p;
  };
  for (int j = 0; j < n; ++j) {
    const double h = 1e-6;
    auto plus = w, minus = w;
    plus[j] += h;
    minus[j] -= h;
    const auto pp = positions(plus), pm = positions(minus);
    for (int i = 0; i < n; ++i) {
      std::vector<double> d_pos(n, 0.0);
      d_pos[i] = 1.0;
      const double analytic = positions_backward(d_pos, r)[j];
      EXPECT_NEAR(analytic, (pp[i] - pm[i]) / (2 * h), 1e-8);
      EXPECT_DOUBLE_EQ(analytic, r.extent() * (0.5 * (i == j) + (j < i)));
    }
  }
}

TEST(WidthsFromPositions, InvertsPlanePositions) {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 1 + trial % 10;
    const BinWidths b = normalize_bin_widths(random_logits(rng, n));
    const DepthRange r{0.7, 33.0};
    const auto w = widths_from_positions(plane_positions(b, r), r);
    for (int i = 0; i < n; ++i) EXPECT_NEAR(w[i], b[i], 1e-10);
  }
}

TEST(SoftmaxBackward, MatchesFiniteDifferences) {
  std::mt19937_64 rng(5);
  const auto logits = random_logits(rng, 6);
  const std::vector<double> g{0.3, -1.0, 2.0, 0.5, -0.2, 1.1};
  auto objective = [&](std::vector<double> l) {
    const BinWidths b = normalize_bin_widths(l);
    double s = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) s += g[i] * b[i];
    return s;
  };
  const BinWidths b = normalize_bin_widths(logits);
  const auto analytic = softmax_backward(b.values(), g);
  for (std::size_t j = 0; j < logits.size(); ++j) {
    auto p = logits, m = logits;
    p[j] += 1e-6;
    m[j] -= 1e-6;
    EXPECT_NEAR(analytic[j], (objective(p) - objective(m)) / 2e-6, 1e-8);
  }
}

TEST(UniformPositions, Examples) {
  const auto a = uniform_positions(2, {1.0, 5.0});
  EXPECT_NEAR(a[0], 2.0, 1e-12);
  EXPECT_NEAR(a[1], 4.0, 1e-12);
  const auto b = uniform_positions(4, {1e-300, 8.0});
  for (int i = 0; i < 4; ++i) EXPECT_NEAR(b[i], 1.0 + 2.0 * i, 1e-12);
  EXPECT_NEAR(uniform_positions(1, {2.0, 4.0})[0], 3.0, 1e-12);
}

TEST(LogPositions, Examples) {
  const double e = std::exp(1.0);
  EXPECT_NEAR(log_positions(1, {1.0, e * e})[0], e, 1e-12);
  const auto two = log_positions(2, {1.0, std::exp(4.0)});
  EXPECT_NEAR(two[0], e, 1e-12);
  EXPECT_NEAR(two[1], std::exp(3.0), 1e-10);
}

TEST(LogPositions, ThreeBinsOverOneToEight) {
  // ln-centers at (1/6, 1/2, 5/6) of ln 8: 2^0.5, 2^1.5, 2^2.5.
  const auto p = log_positions(3, {1.0, 8.0});
  EXPECT_NEAR(p[0], std::pow(2.0, 0.5), 1e-12);
  EXPECT_NEAR(p[1], std::pow(2.0, 1.5), 1e-12);
  EXPECT_NEAR(p[2], std::pow(2.0, 2.5), 1e-12);
  EXPECT_NEAR(p[1] / p[0], 2.0, 1e-12);
  EXPECT_NEAR(p[2] / p[1], 2.0, 1e-12);
  for (double x : p) {
    EXPECT_GT(x, 1.0);
    EXPECT_LT(x, 8.0);
  }
}

TEST(LogPositions, NonPositiveNearThrows) {
  try {
    log_positions(3, {0.0, 8.0});
    FAIL() << "expected NonPositiveNear";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NonPositiveNear);
  }
}

TEST(DepthRange, Validate) {
  EXPECT_THROW((DepthRange{0.0, 1.0}.validate()), Error);
  EXPECT_THROW((DepthRange{2.0, 1.0}.validate()), Error);
  EXPECT_NO_THROW((DepthRange{0.1, 1.0}.validate()));
}

TEST(MultiplaneImage, ValidateChecksInvariants) {
  MultiplaneImage m;
  m.depth_range = {1.0, 5.0};
  m.planes = {constant_plane(4, 3, 0.5, 0.5, 2.0), constant_plane(4, 3, 0.5, 0.5, 4.0)};
  EXPECT_NO_THROW(m.validate());
  m.planes[1].depth = 2.0;
  EXPECT_THROW(m.validate(), Error);
  m.planes[1].depth = 5.0;
  EXPECT_THROW(m.validate(), Error);
  m.planes[1].depth = 4.0;
  m.planes[1].alpha.at(0, 0) = 1.5;
  EXPECT_THROW(m.validate(), Error);
  m.planes[1] = constant_plane(3, 3, 0.5, 0.5, 4.0);
  EXPECT_THROW(m.validate(), Error);
}

TEST(DisparityMap, SingleOpaquePlane) {
  MultiplaneImage m;
  m.depth_range = {1.0, 5.0};
  m.planes = {constant_plane(3, 3, 0.2, 1.0, 2.5)};
  const ImageBuffer disp = disparity_map(m);
  for (double v : disp.data()) EXPECT_DOUBLE_EQ(v, 1.0 / 2.5);
}

TEST(DisparityMap, TransparentFrontShowsBack) {
  MultiplaneImage m;
  m.depth_range = {1.0, 5.0};
  m.planes = {constant_plane(3, 3, 0.2, 0.0, 2.0), constant_plane(3, 3, 0.2, 1.0, 4.0)};
  const ImageBuffer disp = disparity_map(m);
  for (double v : disp.data()) EXPECT_DOUBLE_EQ(v, 0.25);
}

TEST(DisparityMap, HalfTransparentFront) {
  MultiplaneImage m;
  m.depth_range = {1.0, 5.0};
  m.planes = {constant_plane(3, 3, 0.2, 0.5, 2.0), constant_plane(3, 3, 0.2, 1.0, 4.0)};
  const ImageBuffer disp = disparity_map(m);
  for (double v : disp.data()) EXPECT_NEAR(v, 0.375, 1e-15);
}

TEST(DisparityMap, BoundedByInverseNear) {
  std::mt19937_64 rng(10);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  MultiplaneImage m;
  m.depth_range = {1.0, 9.0};
  for (int i = 0; i < 4; ++i) {
    Plane p = constant_plane(5, 5, 0.5, 0.0, 1.5 + 2.0 * i);
    for (double& a : p.alpha.data()) a = u(rng);
    m.planes.push_back(p);
  }
  const ImageBuffer disp = disparity_map(m);
  for (double v : disp.data()) {
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 1.0 / m.depth_range.d_near);
  }
}

}  // namespace
}  // namespace ampi
