#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ampi/camera.hpp"
#include "ampi/error.hpp"
#include "ampi/image.hpp"
#include "ampi/losses.hpp"
#include "ampi/mpi.hpp"
#include "ampi/renderer.hpp"

namespace ampi {

/// How plane depths are chosen during a fit.
enum class BinStrategy {
  Adaptive,  // softmax bin logits, optimized
  Uniform,   // fixed equal-width bins
  Log,       // fixed log-spaced bins
};

const char* to_string(BinStrategy s) noexcept;
/// Throws InvalidArgument for names other than adaptive, uniform, log.
BinStrategy parse_bin_strategy(const std::string& name);

struct FitStage {
  int scale_divisor = 1;
  int iterations = 100;
  double step_size = 1e-2;
};

struct AdamSettings {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct FitConfig {
  int n_planes = 8;
  DepthRange depth_range;
  double lambda_ada = 0.1;
  std::vector<FitStage> stages = default_stages();
  AdamSettings optimizer;
  std::uint64_t seed = 0;
  bool use_gt_depth = false;
  BinStrategy bins = BinStrategy::Adaptive;
  /// Bin-logit step = stage step * bin_step_scale.
  double bin_step_scale = 0.1;
  /// Keeps colors and alphas at their initial values (only bins move).
  bool freeze_appearance = false;
  BorderPolicy border = BorderPolicy::ZeroPad;

  static std::vector<FitStage> default_stages();

  /// Stages non-empty, divisors strictly decreasing to 1, iterations >= 0,
  /// positive steps, valid range and optimizer settings.
  void validate() const;
};

/// Unconstrained parameters; colors and alphas go through a sigmoid, bin
/// widths through a softmax.
struct FitParams {
  std::vector<ImageBuffer> color_logits;  // 3 channels per plane
  std::vector<ImageBuffer> alpha_logits;  // 1 channel per plane
  std::vector<double> bin_logits;

  int width() const noexcept { return color_logits.empty() ? 0 : color_logits.front().width(); }
  int height() const noexcept { return color_logits.empty() ? 0 : color_logits.front().height(); }
};

struct TraceRecord {
  int iter = 0;
  int stage = 0;
  double l_ada = 0.0;
  double l_syn = 0.0;
  double total = 0.0;
  double psnr_train = 0.0;
};

struct FitTrace {
  std::vector<TraceRecord> records;
};

/// A posed training or evaluation image. `pose` maps this view's camera
/// frame into the source frame.
struct PosedView {
  ImageBuffer image;
  RigidPose pose;
  CameraIntrinsics intrinsics;
};

struct FitResult {
  MultiplaneImage mpi;
  FitTrace trace;
};

/// Raised when the total loss stops being finite; carries the partial trace.
class DivergenceError : public Error {
 public:
  DivergenceError(const std::string& what, FitTrace trace)
      : Error(ErrorCode::DivergenceDetected, what), trace_(std::move(trace)) {}
  const FitTrace& trace() const noexcept { return trace_; }

 private:
  FitTrace trace_;
};

double sigmoid(double x) noexcept;
double logit(double p) noexcept;

/// Colors from the clamped source on every plane, alpha logits logit(1/N)
/// plus N(0, 0.01^2) noise, zero bin logits.
FitParams init_params(const ImageBuffer& source, int n_planes, std::uint64_t seed);

/// Decodes with adaptive depths from the bin logits.
MultiplaneImage decode(const FitParams& params, const DepthRange& range, const CameraIntrinsics& intrinsics);

/// Decodes with the given plane depths instead of the bin logits.
MultiplaneImage decode(const FitParams& params, const DepthRange& range, const CameraIntrinsics& intrinsics,
                       std::span<const double> depths);

/// Fits an MPI in the source camera to the target views by Adam on
/// lambda_ada * L_ada + sum over views of L_syn, coarse to fine.
/// `source_intrinsics` describe the full-resolution source image.
FitResult fit(const ImageBuffer& source, const CameraIntrinsics& source_intrinsics, const std::vector<PosedView>& targets,
              const std::optional<DepthSampleSet>& gt_depth, const FitConfig& cfg);

struct ViewScore {
  double psnr = 0.0;
  double ssim = 0.0;
  int evaluated_width = 0;
  int evaluated_height = 0;
};

struct HeldoutReport {
  std::vector<ViewScore> views;
  double mean_psnr = 0.0;
  double mean_ssim = 0.0;
};

/// Pixels removed from each side for a crop fraction.
int crop_margin(int extent, double crop_fraction);

/// Renders each view, crops `crop_fraction` from every border of the render
/// and the ground truth, then scores PSNR and SSIM.
HeldoutReport evaluate_heldout(const MultiplaneImage& m, const std::vector<PosedView>& heldout, double crop_fraction,
                               const RenderOptions& options = {});

/// Scores an already rendered image against ground truth with the same crop.
ViewScore score_view(const ImageBuffer& rendered, const ImageBuffer& gt, double crop_fraction);

}  // namespace ampi
