#pragma once

#include <span>
#include <vector>

#include "ampi/camera.hpp"
#include "ampi/image.hpp"

namespace ampi {

struct DepthRange {
  double d_near = 1.0;
  double d_far = 100.0;

  /// Throws InvalidArgument unless 0 < d_near < d_far (NonPositiveNear when d_near <= 0).
  void validate() const;
  double extent() const noexcept { return d_far - d_near; }
};

/// Normalized bin widths: positive, summing to one.
class BinWidths {
 public:
  /// Throws InvalidArgument if any width is <= 0 or the sum is off by more than 1e-9.
  explicit BinWidths(std::vector<double> widths);

  std::span<const double> values() const noexcept { return widths_; }
  std::size_t size() const noexcept { return widths_.size(); }
  double operator[](std::size_t i) const noexcept { return widths_[i]; }

 private:
  std::vector<double> widths_;
};

/// One fronto-parallel RGB-alpha layer at a source-frame depth.
struct Plane {
  ImageBuffer color;  // 3 channels
  ImageBuffer alpha;  // 1 channel
  double depth = 1.0;
};

/// N planes ordered nearest first (index 0 is the closest to d_near).
struct MultiplaneImage {
  std::vector<Plane> planes;
  CameraIntrinsics intrinsics;
  DepthRange depth_range;

  int width() const noexcept { return planes.empty() ? 0 : planes.front().color.width(); }
  int height() const noexcept { return planes.empty() ? 0 : planes.front().color.height(); }
  std::size_t size() const noexcept { return planes.size(); }
  std::vector<double> depths() const;

  /// Checks shapes, strictly increasing depths inside (d_near, d_far) and
  /// alpha in [0, 1]; throws InvalidArgument on violation.
  void validate() const;
};

/// Softmax over the logits (stable under adding a constant).
BinWidths normalize_bin_widths(std::span<const double> logits);

/// Plane centers of the bins: d_near + extent * (b_i / 2 + sum_{j<i} b_j).
std::vector<double> plane_positions(const BinWidths& widths, const DepthRange& range);

/// Equal-width bins.
std::vector<double> uniform_positions(int n, const DepthRange& range);

/// Bin centers spaced evenly in log depth. Throws NonPositiveNear if d_near <= 0.
std::vector<double> log_positions(int n, const DepthRange& range);

/// Inverse of plane_positions: recovers the widths that produced `positions`.
/// The result is not validated and may not be a proper BinWidths when the
/// positions did not come from plane_positions.
std::vector<double> widths_from_positions(std::span<const double> positions, const DepthRange& range);

/// Pulls d(loss)/d(position) back to d(loss)/d(width) through the linear
/// position map: dp_i/db_j = extent * (1/2 [i == j] + [j < i]).
std::vector<double> positions_backward(std::span<const double> d_positions, const DepthRange& range);

/// Pulls d(loss)/d(width) back to the softmax logits.
std::vector<double> softmax_backward(std::span<const double> widths, std::span<const double> d_widths);

/// Alpha-weighted expected inverse depth in the source view.
ImageBuffer disparity_map(const MultiplaneImage& m);

}  // namespace ampi
