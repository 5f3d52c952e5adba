#include "ampi/camera.hpp"

#include <cmath>
#include <Eigen/LU>

#include "ampi/error.hpp"

namespace ampi {

namespace {

constexpr double kOrthoTol = 1e-9;
constexpr double kSingularTol = 1e-12;

}  // namespace

void CameraIntrinsics::validate() const {
  if (!(fx > 0.0) || !(fy > 0.0) || !std::isfinite(fx) || !std::isfinite(fy))
    throw Error(ErrorCode::InvalidArgument, "focal lengths must be positive and finite");
  if (!std::isfinite(cx) || !std::isfinite(cy))
    throw Error(ErrorCode::InvalidArgument, "principal point must be finite");
}

Eigen::Matrix3d CameraIntrinsics::matrix() const {
  Eigen::Matrix3d k;
  k << fx, 0.0, cx, 0.0, fy, cy, 0.0, 0.0, 1.0;
  return k;
}

Eigen::Matrix3d CameraIntrinsics::inverse_matrix() const {
  Eigen::Matrix3d k;
  k << 1.0 / fx, 0.0, -cx / fx, 0.0, 1.0 / fy, -cy / fy, 0.0, 0.0, 1.0;
  return k;
}

CameraIntrinsics CameraIntrinsics::rescaled(double sx, double sy) const {
  if (!(sx > 0.0) || !(sy > 0.0)) throw Error(ErrorCode::InvalidArgument, "scale factors must be > 0");
  // Pixel centers: u_new = (u_old + 0.5) * s - 0.5.
  return {fx * sx, fy * sy, (cx + 0.5) * sx - 0.5, (cy + 0.5) * sy - 0.5};
}

void RigidPose::validate() const {
  if (!R.allFinite() || !t.allFinite()) throw Error(ErrorCode::InvalidArgument, "pose has non-finite entries");
  const Eigen::Matrix3d gram = R.transpose() * R;
  if ((gram - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff() > kOrthoTol)
    throw Error(ErrorCode::InvalidArgument, "rotation is not orthonormal");
  if (std::abs(R.determinant() - 1.0) > kOrthoTol)
    throw Error(ErrorCode::InvalidArgument, "rotation determinant is not +1");
}

RigidPose pose_compose(const RigidPose& a, const RigidPose& b) {
  return {a.R * b.R, a.R * b.t + a.t};
}

RigidPose pose_inverse(const RigidPose& p) {
  const Eigen::Matrix3d rt = p.R.transpose();
  return {rt, -rt * p.t};
}

namespace {

// Signed distance from the target camera center (t in source coords) to the plane.
double target_plane_offset(const RigidPose& pose, double plane_depth, const Eigen::Vector3d& n) {
  return plane_depth - n.dot(pose.t);
}

}  // namespace

Homography homography_source_from_target(const CameraIntrinsics& k_src, const CameraIntrinsics& k_tgt,
                                         const RigidPose& pose, double plane_depth,
                                         const Eigen::Vector3d& n) {
  if (!(plane_depth > 0.0)) throw Error(ErrorCode::NonPositiveDepth, "plane depth must be > 0");
  const double offset = target_plane_offset(pose, plane_depth, n);
  if (std::abs(offset) <= kSingularTol)
    throw Error(ErrorCode::SingularHomography, "plane passes through the target camera center");
  const bool same_camera = k_src.fx == k_tgt.fx && k_src.fy == k_tgt.fy && k_src.cx == k_tgt.cx &&
                           k_src.cy == k_tgt.cy;
  // Exact identity for the identity configuration; K K^-1 is not bit-exact in general.
  if (same_camera && pose.R == Eigen::Matrix3d::Identity() && pose.t.isZero(0.0)) return Homography{};
  const Eigen::Matrix3d m = pose.R + pose.t * (n.transpose() * pose.R) / offset;
  Homography h{k_src.matrix() * m * k_tgt.inverse_matrix()};
  if (!h.H.allFinite() || std::abs(h.H.determinant()) <= kSingularTol)
    throw Error(ErrorCode::SingularHomography, "homography is not invertible");
  return h;
}

Eigen::Matrix3d homography_depth_derivative(const CameraIntrinsics& k_src, const CameraIntrinsics& k_tgt,
                                            const RigidPose& pose, double plane_depth,
                                            const Eigen::Vector3d& n) {
  const double offset = target_plane_offset(pose, plane_depth, n);
  const Eigen::Matrix3d dm = -pose.t * (n.transpose() * pose.R) / (offset * offset);
  return k_src.matrix() * dm * k_tgt.inverse_matrix();
}

Eigen::Vector2d apply_homography(const Homography& h, const Eigen::Vector2d& pixel) {
  const Eigen::Vector3d q = h.H * Eigen::Vector3d(pixel.x(), pixel.y(), 1.0);
  if (std::abs(q.z()) <= kSingularTol) throw Error(ErrorCode::PointAtInfinity, "homogeneous w is ~0");
  return {q.x() / q.z(), q.y() / q.z()};
}

Eigen::Vector2d project(const CameraIntrinsics& k, const Eigen::Vector3d& x) {
  return {k.fx * x.x() / x.z() + k.cx, k.fy * x.y() / x.z() + k.cy};
}

Eigen::Vector3d unproject(const CameraIntrinsics& k, const Eigen::Vector2d& p, double z) {
  return {(p.x() - k.cx) / k.fx * z, (p.y() - k.cy) / k.fy * z, z};
}

RigidPose relative_pose_tgt_to_src(const RigidPose& world_to_src, const RigidPose& world_to_tgt) {
  return pose_compose(world_to_src, pose_inverse(world_to_tgt));
}

}  // namespace ampi
