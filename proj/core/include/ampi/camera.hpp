#pragma once

#include <Eigen/Core>

namespace ampi {

/// Pinhole intrinsics in pixels. Pixel (u, v) addresses pixel centers with
/// the origin at the center of the top-left pixel, u right, v down.
struct CameraIntrinsics {
  double fx = 1.0;
  double fy = 1.0;
  double cx = 0.0;
  double cy = 0.0;

  /// Throws InvalidArgument unless fx, fy > 0 and the principal point is finite.
  void validate() const;

  Eigen::Matrix3d matrix() const;
  Eigen::Matrix3d inverse_matrix() const;

  /// Intrinsics after resampling the image by factors (sx, sy) = new/old size,
  /// keeping the pixel-center convention.
  CameraIntrinsics rescaled(double sx, double sy) const;
};

/// Rigid transform x' = R x + t.
struct RigidPose {
  Eigen::Matrix3d R = Eigen::Matrix3d::Identity();
  Eigen::Vector3d t = Eigen::Vector3d::Zero();

  static RigidPose identity() { return {}; }

  /// Throws InvalidArgument unless R is orthonormal with det +1 (1e-9 per entry).
  void validate() const;

  Eigen::Vector3d apply(const Eigen::Vector3d& x) const { return R * x + t; }
};

/// `pose_compose(a, b)` applies b first, then a.
RigidPose pose_compose(const RigidPose& a, const RigidPose& b);
RigidPose pose_inverse(const RigidPose& p);

/// Maps homogeneous target pixels to homogeneous source pixels.
struct Homography {
  Eigen::Matrix3d H = Eigen::Matrix3d::Identity();
};

inline const Eigen::Vector3d kFrontoParallelNormal{0.0, 0.0, 1.0};

/// Homography induced by the plane {X_s : n.X_s = plane_depth} fixed in the
/// source camera frame, where `pose_tgt_to_src` maps target-camera points into
/// the source frame (X_s = R X_t + t).
///
///   H = K_s (R + t n^T R / (plane_depth - n.t)) K_t^-1
///
/// This is the usual K_s (R - t n^T / p) K_t^-1 form with the plane written in
/// target coordinates; it is exact for any rotation, not only first order.
/// Throws NonPositiveDepth for plane_depth <= 0 and SingularHomography when the
/// plane passes through the target camera center.
Homography homography_source_from_target(const CameraIntrinsics& k_src, const CameraIntrinsics& k_tgt,
                                         const RigidPose& pose_tgt_to_src, double plane_depth,
                                         const Eigen::Vector3d& plane_normal = kFrontoParallelNormal);

/// Derivative of the (unnormalized) homography above with respect to plane_depth.
Eigen::Matrix3d homography_depth_derivative(const CameraIntrinsics& k_src, const CameraIntrinsics& k_tgt,
                                            const RigidPose& pose_tgt_to_src, double plane_depth,
                                            const Eigen::Vector3d& plane_normal = kFrontoParallelNormal);

/// Projective application; throws PointAtInfinity if |w| <= 1e-12.
Eigen::Vector2d apply_homography(const Homography& h, const Eigen::Vector2d& pixel);

/// Pinhole projection of a camera-frame point to pixel coordinates.
Eigen::Vector2d project(const CameraIntrinsics& k, const Eigen::Vector3d& x_cam);

/// Back-projects pixel (u, v) to the camera-frame point at depth z.
Eigen::Vector3d unproject(const CameraIntrinsics& k, const Eigen::Vector2d& pixel, double z);

/// Relative pose mapping target-camera points into the source frame, given
/// world-to-camera extrinsics of both views.
RigidPose relative_pose_tgt_to_src(const RigidPose& world_to_src, const RigidPose& world_to_tgt);

}  // namespace ampi
