#pragma once

#include <functional>
#include <utility>
#include <vector>

#include "ampi/camera.hpp"
#include "ampi/image.hpp"
#include "ampi/mpi.hpp"

namespace ampi {

struct RenderOptions {
  BorderPolicy border = BorderPolicy::ZeroPad;
};

struct WarpedPlane {
  ImageBuffer color;  // 3 channels, target resolution
  ImageBuffer alpha;  // 1 channel, target resolution
};

/// Planes resampled into the target view, still nearest first.
struct WarpedPlaneStack {
  std::vector<WarpedPlane> planes;
  std::vector<double> depths;
};

/// Adjoints of a scalar loss with respect to the source MPI.
struct GradientBundle {
  std::vector<ImageBuffer> d_color;
  std::vector<ImageBuffer> d_alpha;
  std::vector<double> d_depth;
  /// Chained through the position map and the softmax. Zero when the plane
  /// depths are not bin centers of some valid width vector (e.g. log spacing).
  std::vector<double> d_bin_logits;

  static GradientBundle zeros_like(const MultiplaneImage& m);
};

/// Inverse warp: each target pixel samples the source plane at H * (u, v, 1).
WarpedPlane warp_plane(const ImageBuffer& color, const ImageBuffer& alpha, const Homography& h, int target_width,
                       int target_height, BorderPolicy border = BorderPolicy::ZeroPad);

/// Front-to-back over operator; plane i is attenuated by the planes in front of it.
ImageBuffer composite(const WarpedPlaneStack& stack);

/// Warps every plane with its depth-induced homography and composites.
ImageBuffer render(const MultiplaneImage& m, const RigidPose& pose_tgt_to_src, const CameraIntrinsics& k_tgt,
                   int target_width, int target_height, const RenderOptions& options = {});

/// Builds the warped stack used by render().
WarpedPlaneStack warp_stack(const MultiplaneImage& m, const RigidPose& pose_tgt_to_src,
                            const CameraIntrinsics& k_tgt, int target_width, int target_height,
                            const RenderOptions& options = {});

/// Exact reverse-mode pass of render() for the output adjoint `d_output`.
/// Forward intermediates are recomputed.
GradientBundle render_backward(const MultiplaneImage& m, const RigidPose& pose_tgt_to_src,
                               const CameraIntrinsics& k_tgt, const ImageBuffer& d_output,
                               const RenderOptions& options = {});

/// Forward and backward sharing one warp: `output_adjoint` receives the
/// rendered image and returns d(loss)/d(image).
std::pair<ImageBuffer, GradientBundle> render_with_adjoint(
    const MultiplaneImage& m, const RigidPose& pose_tgt_to_src, const CameraIntrinsics& k_tgt, int target_width,
    int target_height, const std::function<ImageBuffer(const ImageBuffer&)>& output_adjoint,
    const RenderOptions& options = {});

/// d_bin_logits from d_depth, recovering the widths from the plane depths.
std::vector<double> bin_logit_gradient(const MultiplaneImage& m, std::span<const double> d_depth);

}  // namespace ampi
