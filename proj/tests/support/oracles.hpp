#pragma once

// Independent reference implementations used only by tests. Nothing here
// calls into the code paths it is used to check.

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include <Eigen/Geometry>

#include "ampi/camera.hpp"
#include "ampi/image.hpp"

namespace ampi::oracle {

inline Eigen::Matrix3d random_rotation(std::mt19937_64& rng, double max_angle) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Eigen::Vector3d axis(u(rng), u(rng), u(rng));
  if (axis.norm() < 1e-6) axis = Eigen::Vector3d::UnitZ();
  return Eigen::AngleAxisd(max_angle * u(rng), axis.normalized()).toRotationMatrix();
}

inline RigidPose random_pose(std::mt19937_64& rng, double max_angle, double max_translation) {
  std::uniform_real_distribution<double> u(-max_translation, max_translation);
  RigidPose p;
  p.R = random_rotation(rng, max_angle);
  p.t = Eigen::Vector3d(u(rng), u(rng), u(rng));
  return p;
}

inline CameraIntrinsics random_intrinsics(std::mt19937_64& rng, int w, int h) {
  std::uniform_real_distribution<double> f(0.8 * w, 1.5 * w);
  std::uniform_real_distribution<double> c(-2.0, 2.0);
  return {f(rng), f(rng), (w - 1) / 2.0 + c(rng), (h - 1) / 2.0 + c(rng)};
}

/// Source pixel seen through target pixel `tgt` on the source-frame plane
/// z = depth, by ray casting: back-project in the target camera, move into the
/// source frame, intersect the plane, project with the source camera.
inline Eigen::Vector2d project_through_plane(const CameraIntrinsics& ks, const CameraIntrinsics& kt,
                                             const RigidPose& tgt_to_src, double depth,
                                             const Eigen::Vector2d& tgt) {
  const Eigen::Vector3d ray_t((tgt.x() - kt.cx) / kt.fx, (tgt.y() - kt.cy) / kt.fy, 1.0);
  const Eigen::Vector3d origin = tgt_to_src.t;
  const Eigen::Vector3d dir = tgt_to_src.R * ray_t;
  const double s = (depth - origin.z()) / dir.z();
  const Eigen::Vector3d x = origin + s * dir;
  return {ks.fx * x.x() / x.z() + ks.cx, ks.fy * x.y() / x.z() + ks.cy};
}

/// 4x4 homogeneous matrix of a pose.
inline Eigen::Matrix4d homogeneous(const RigidPose& p) {
  Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
  m.topLeftCorner<3, 3>() = p.R;
  m.topRightCorner<3, 1>() = p.t;
  return m;
}

/// Front-to-back over compositing written as the recursive operator on
/// scalars, one pixel and channel at a time.
inline double over_front_to_back(const std::vector<double>& colors, const std::vector<double>& alphas) {
  double out = 0.0;
  double remaining = 1.0;
  for (std::size_t i = 0; i < colors.size(); ++i) {
    out = out + remaining * alphas[i] * colors[i];
    remaining = remaining * (1.0 - alphas[i]);
  }
  return out;
}

/// Back-to-front formulation: acc = c_i a_i + (1 - a_i) acc, farthest first.
inline double over_back_to_front(const std::vector<double>& colors, const std::vector<double>& alphas) {
  double acc = 0.0;
  for (std::size_t i = colors.size(); i-- > 0;) acc = colors[i] * alphas[i] + (1.0 - alphas[i]) * acc;
  return acc;
}

/// Chamfer value by an explicit double loop over all pairs.
inline double chamfer_brute_force(const std::vector<double>& positions, const std::vector<double>& gt) {
  double total = 0.0;
  for (double x : gt) {
    double best = std::numeric_limits<double>::infinity();
    for (double y : positions) best = std::min(best, (x - y) * (x - y));
    total += best;
  }
  for (double y : positions) {
    double best = std::numeric_limits<double>::infinity();
    for (double x : gt) best = std::min(best, (x - y) * (x - y));
    total += best;
  }
  return total;
}

/// Mean SSIM evaluated window by window with a 2D 11x11 Gaussian kernel.
inline double ssim_direct(const ImageBuffer& a, const ImageBuffer& b) {
  constexpr int kWin = 11;
  double kernel[kWin][kWin];
  double sum = 0.0;
  for (int i = 0; i < kWin; ++i)
    for (int j = 0; j < kWin; ++j) {
      const double dy = i - 5, dx = j - 5;
      kernel[i][j] = std::exp(-(dx * dx + dy * dy) / (2.0 * 1.5 * 1.5));
      sum += kernel[i][j];
    }
  for (auto& row : kernel)
    for (double& k : row) k /= sum;
  const double c1 = 1e-4, c2 = 9e-4;
  double total = 0.0;
  long count = 0;
  for (int c = 0; c < a.channels(); ++c)
    for (int y = 0; y + kWin <= a.height(); ++y)
      for (int x = 0; x + kWin <= a.width(); ++x) {
        double ma = 0, mb = 0, saa = 0, sbb = 0, sab = 0;
        for (int i = 0; i < kWin; ++i)
          for (int j = 0; j < kWin; ++j) {
            const double k = kernel[i][j];
            const double va = a.at(x + j, y + i, c), vb = b.at(x + j, y + i, c);
            ma += k * va;
            mb += k * vb;
            saa += k * va * va;
            sbb += k * vb * vb;
            sab += k * va * vb;
          }
        const double va = saa - ma * ma, vb = sbb - mb * mb, cov = sab - ma * mb;
        total += ((2 * ma * mb + c1) * (2 * cov + c2)) / ((ma * ma + mb * mb + c1) * (va + vb + c2));
        ++count;
      }
  return total / count;
}

inline double mean_abs_direct(const ImageBuffer& a, const ImageBuffer& b) {
  double total = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) total += std::abs(a[i] - b[i]);
  return total / static_cast<double>(a.size());
}

inline double psnr_direct(const ImageBuffer& a, const ImageBuffer& b) {
  double total = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) total += (a[i] - b[i]) * (a[i] - b[i]);
  return 10.0 * std::log10(static_cast<double>(a.size()) / total);
}

inline ImageBuffer random_image(std::mt19937_64& rng, int w, int h, int c, double lo = 0.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  ImageBuffer img(w, h, c);
  for (double& v : img.data()) v = u(rng);
  return img;
}

/// Relative error with an absolute floor, as used by every gradient check.
inline bool gradient_close(double analytic, double numeric, double rel = 1e-3, double abs_floor = 1e-6) {
  return std::abs(analytic - numeric) <= std::max(abs_floor, rel * std::max(std::abs(analytic), std::abs(numeric)));
}

}  // namespace ampi::oracle
