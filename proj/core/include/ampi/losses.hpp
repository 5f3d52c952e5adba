#pragma once

#include <span>
#include <vector>

#include "ampi/image.hpp"
#include "ampi/mpi.hpp"

namespace ampi {

/// Ground-truth depth values for the chamfer term.
struct DepthSampleSet {
  std::vector<double> values;

  /// Clamps every value into [d_near, d_far].
  void clip(const DepthRange& range);
};

struct LossReport {
  double l_ada = 0.0;
  double l_syn = 0.0;
  double total = 0.0;
  double lambda_ada = 0.0;
};

struct ScalarWithGradient {
  double value = 0.0;
  std::vector<double> gradient;
};

struct ImageLoss {
  double value = 0.0;
  ImageBuffer gradient;
};

/// Bidirectional squared chamfer distance between plane positions and
/// ground-truth depths, with its gradient in the positions. Nearest-neighbor
/// ties resolve to the lowest index. Throws EmptyGroundTruth.
ScalarWithGradient adaptive_bins_loss(std::span<const double> positions, const DepthSampleSet& gt);

/// Mean SSIM (11x11 Gaussian window, sigma 1.5, valid windows, per channel
/// then averaged) and its gradient with respect to `a`.
/// Throws ShapeMismatch, or ImageTooSmall when a side is below 11.
ImageLoss ssim(const ImageBuffer& a, const ImageBuffer& b);

/// Mean absolute error over pixels and channels minus mean SSIM.
ImageLoss synthesis_loss(const ImageBuffer& pred, const ImageBuffer& gt);

LossReport total_loss(double l_ada, double l_syn, double lambda_ada);

/// 10 log10(1 / MSE); 120 dB when MSE < 1e-12.
double psnr(const ImageBuffer& a, const ImageBuffer& b);

inline constexpr double kPsnrSentinel = 120.0;
inline constexpr int kSsimWindow = 11;

/// Deterministic pairwise (tree) summation.
double pairwise_sum(std::span<const double> values);

}  // namespace ampi
