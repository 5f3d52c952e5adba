#include <algorithm>
#include <random>

#include <gtest/gtest.h>

#include "ampi/error.hpp"
#include "ampi/losses.hpp"
#include "support/oracles.hpp"

namespace ampi {
namespace {

DepthSampleSet samples(std::vector<double> v) { return {std::move(v)}; }

TEST(AdaptiveBinsLoss, MatchingMultisetsGiveZero) {
  const auto r = adaptive_bins_loss(std::vector<double>{1.5, 3.0, 7.0}, samples({7.0, 1.5, 3.0, 3.0}));
  EXPECT_EQ(r.value, 0.0);
  for (double g : r.gradient) EXPECT_EQ(g, 0.0);
}

TEST(AdaptiveBinsLoss, SinglePositionTwoSamples) {
  const std::vector<double> p{2.0};
  const auto r = adaptive_bins_loss(p, samples({1.0, 3.0}));
  EXPECT_DOUBLE_EQ(r.value, 3.0);
  EXPECT_DOUBLE_EQ(r.value, oracle::chamfer_brute_force(p, {1.0, 3.0}));
  // Both samples pull symmetrically; the reverse term resolves the tie to
  // sample 0 (value 1) and pulls the position toward it.
  EXPECT_DOUBLE_EQ(r.gradient[0], 2.0);
}

TEST(AdaptiveBinsLoss, SingleExactMatch) {
  const auto r = adaptive_bins_loss(std::vector<double>{5.0}, samples({5.0}));
  EXPECT_EQ(r.value, 0.0);
}

TEST(AdaptiveBinsLoss, EmptyGroundTruthThrows) {
  try {
    adaptive_bins_loss(std::vector<double>{1.0}, samples({}));
    FAIL() << "expected EmptyGroundTruth";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::EmptyGroundTruth);
  }
}

TEST(AdaptiveBinsLoss, MatchesBruteForceAndIsPermutationInvariant) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(1.0, 10.0);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> p(1 + trial % 8), x(1 + trial % 37);
    for (double& v : p) v = u(rng);
    for (double& v : x) v = u(rng);
    const double value = adaptive_bins_loss(p, samples(x)).value;
    EXPECT_NEAR(value, oracle::chamfer_brute_force(p, x), 1e-9 * std::max(1.0, value));
    EXPECT_GE(value, 0.0);
    std::shuffle(p.begin(), p.end(), rng);
    std::shuffle(x.begin(), x.end(), rng);
    EXPECT_NEAR(adaptive_bins_loss(p, samples(x)).value, value, 1e-9 * std::max(1.0, value));
  }
}

TEST(AdaptiveBinsLoss, PositiveWhenSetsDiffer) {
  EXPECT_GT(adaptive_bins_loss(std::vector<double>{1.0, 2.0}, samples({1.0})).value, 0.0);
  EXPECT_GT(adaptive_bins_loss(std::vector<double>{1.0}, samples({1.0, 1.5})).value, 0.0);
}

TEST(AdaptiveBinsLoss, GradientMatchesFiniteDifferences) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(1.0, 10.0);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> p(4), x(50);
    for (double& v : p) v = u(rng);
    for (double& v : x) v = u(rng);
    const auto r = adaptive_bins_loss(p, samples(x));
    for (std::size_t i = 0; i < p.size(); ++i) {
      auto a = p, b = p;
      a[i] += 1e-6;
      b[i] -= 1e-6;
      const double fd = (oracle::chamfer_brute_force(a, x) - oracle::chamfer_brute_force(b, x)) / 2e-6;
      EXPECT_NEAR(r.gradient[i], fd, 1e-6 * std::max(1.0, std::abs(fd)));
    }
  }
}

TEST(DepthSampleSet, ClipClampsIntoRange) {
  DepthSampleSet s = samples({0.5, 3.0, 12.0});
  s.clip({1.0, 10.0});
  EXPECT_EQ(s.values, (std::vector<double>{1.0, 3.0, 10.0}));
}

TEST(Ssim, IdenticalImagesScoreOne) {
  std::mt19937_64 rng(3);
  const ImageBuffer a = oracle::random_image(rng, 13, 12, 3);
  EXPECT_NEAR(ssim(a, a).value, 1.0, 1e-12);
}

TEST(Ssim, ConstantOffsetIsBelowOneAndSymmetric) {
  const ImageBuffer a(16, 16, 1, 0.5), b(16, 16, 1, 0.6);
  const double ab = ssim(a, b).value, ba = ssim(b, a).value;
  EXPECT_LT(ab, 1.0);
  EXPECT_NEAR(ab, ba, 1e-15);
  // Constant images: only the luminance term differs from one.
  EXPECT_NEAR(ab, (2 * 0.5 * 0.6 + 1e-4) / (0.25 + 0.36 + 1e-4), 1e-12);
}

TEST(Ssim, MatchesDirectWindowedEvaluation) {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 5; ++trial) {
    const ImageBuffer a = oracle::random_image(rng, 16 + trial, 14, trial % 2 ? 3 : 1);
    ImageBuffer b = a;
    std::normal_distribution<double> n(0.0, 0.1);
    for (double& v : b.data()) v = std::clamp(v + n(rng), 0.0, 1.0);
    const double got = ssim(a, b).value;
    EXPECT_NEAR(got, oracle::ssim_direct(a, b), 1e-12);
    EXPECT_GE(got, -1.0);
    EXPECT_LE(got, 1.0);
    EXPECT_NEAR(got, ssim(b, a).value, 1e-12);
  }
}

TEST(Ssim, GradientMatchesFiniteDifferences) {
  std::mt19937_64 rng(5);
  const ImageBuffer a = oracle::random_image(rng, 16, 16, 3);
  const ImageBuffer b = oracle::random_image(rng, 16, 16, 3);
  const ImageLoss r = ssim(a, b);
  for (std::size_t i = 0; i < a.size(); i += 3) {
    const double fd = finite_difference_probe([&](const ImageBuffer& x) { return ssim(x, b).value; }, a, i, 1e-4);
    EXPECT_TRUE(oracle::gradient_close(r.gradient[i], fd)) << i << ": " << r.gradient[i] << " vs " << fd;
  }
}

TEST(Ssim, Errors) {
  try {
    ssim(ImageBuffer(12, 12, 3), ImageBuffer(12, 12, 1));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ShapeMismatch);
  }
  try {
    ssim(ImageBuffer(10, 12, 3), ImageBuffer(10, 12, 3));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ImageTooSmall);
  }
}

TEST(SynthesisLoss, PerfectPredictionIsMinusOne) {
  std::mt19937_64 rng(6);
  const ImageBuffer a = oracle::random_image(rng, 12, 12, 3);
  const ImageLoss r = synthesis_loss(a, a);
  EXPECT_NEAR(r.value, -1.0, 1e-12);
}

TEST(SynthesisLoss, ConstantOffsetL1Term) {
  const ImageBuffer gt(12, 12, 3, 0.4), pred(12, 12, 3, 0.5);
  const double value = synthesis_loss(pred, gt).value;
  EXPECT_NEAR(value, 0.1 - ssim(pred, gt).value, 1e-12);
}

TEST(SynthesisLoss, MatchesScalarReference) {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 5; ++trial) {
    const ImageBuffer a = oracle::random_image(rng, 15, 13, 3);
    const ImageBuffer b = oracle::random_image(rng, 15, 13, 3);
    EXPECT_NEAR(synthesis_loss(a, b).value, oracle::mean_abs_direct(a, b) - oracle::ssim_direct(a, b), 1e-10);
  }
}

TEST(SynthesisLoss, NeverBelowMinusOne) {
  std::mt19937_64 rng(8);
  const ImageBuffer gt = oracle::random_image(rng, 12, 12, 3);
  for (int trial = 0; trial < 20; ++trial) {
    const ImageBuffer pred = oracle::random_image(rng, 12, 12, 3);
    EXPECT_GT(synthesis_loss(pred, gt).value, -1.0);
  }
}

TEST(SynthesisLoss, GradientMatchesFiniteDifferences) {
  std::mt19937_64 rng(9);
  const ImageBuffer a = oracle::random_image(rng, 14, 12, 3);
  const ImageBuffer b = oracle::random_image(rng, 14, 12, 3);
  const ImageLoss r = synthesis_loss(a, b);
  for (std::size_t i = 0; i < a.size(); i += 5) {
    const double fd =
        finite_difference_probe([&](const ImageBuffer& x) { return synthesis_loss(x, b).value; }, a, i, 1e-4);
    EXPECT_TRUE(oracle::gradient_close(r.gradient[i], fd)) << i;
  }
}

TEST(TotalLoss, Combination) {
  EXPECT_EQ(total_loss(5.0, -0.3, 0.0).total, -0.3);
  EXPECT_EQ(total_loss(2.0, -1.0, 1.0).total, 1.0);
  std::mt19937_64 rng(10);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  for (int i = 0; i < 100; ++i) {
    const double a = std::abs(u(rng)), s = u(rng), l = std::abs(u(rng));
    const LossReport r = total_loss(a, s, l);
    EXPECT_NEAR(r.total, l * a + s, 1e-12);
    EXPECT_EQ(r.lambda_ada, l);
  }
}

TEST(Psnr, Examples) {
  std::mt19937_64 rng(11);
  const ImageBuffer a = oracle::random_image(rng, 5, 5, 3);
  EXPECT_EQ(psnr(a, a), kPsnrSentinel);
  EXPECT_NEAR(psnr(ImageBuffer(4, 4, 3, 0.3), ImageBuffer(4, 4, 3, 0.4)), 20.0, 1e-9);
  EXPECT_NEAR(psnr(ImageBuffer(4, 4, 3, 0.3), ImageBuffer(4, 4, 3, 0.31)), 40.0, 1e-9);
  EXPECT_THROW(psnr(ImageBuffer(4, 4, 3), ImageBuffer(4, 5, 3)), Error);
}

TEST(Psnr, MatchesScalarReferenceAndIsSymmetric) {
  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 20; ++trial) {
    const ImageBuffer a = oracle::random_image(rng, 9, 7, 3);
    const ImageBuffer b = oracle::random_image(rng, 9, 7, 3);
    EXPECT_NEAR(psnr(a, b), oracle::psnr_direct(a, b), 1e-9);
    EXPECT_EQ(psnr(a, b), psnr(b, a));
  }
}

TEST(PairwiseSum, MatchesExactSumOfIntegers) {
  std::vector<double> v(1001);
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = static_cast<double>(i);
  EXPECT_EQ(pairwise_sum(v), 500500.0);
  EXPECT_EQ(pairwise_sum(std::vector<double>{}), 0.0);
}

}  // namespace
}  // namespace ampi
