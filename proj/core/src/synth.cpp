#include "ampi/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include <Eigen/Geometry>

#include "ampi/error.hpp"

namespace ampi {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

double lattice_value(std::int64_t ix, std::int64_t iy, std::uint64_t seed) {
  const std::uint64_t h =
      splitmix64(seed ^ splitmix64(static_cast<std::uint64_t>(ix) * 0x632be59bd9b4e019ULL ^
                                   static_cast<std::uint64_t>(iy) * 0x85157af5ULL));
  return static_cast<double>(h >> 11) * 0x1.0p-53;
}

double smoothstep(double t) { return t * t * (3.0 - 2.0 * t); }

Rgb mix(const Rgb& a, const Rgb& b, double t) {
  return {a[0] + (b[0] - a[0]) * t, a[1] + (b[1] - a[1]) * t, a[2] + (b[2] - a[2]) * t};
}

// Portable uniform draws (std distributions differ across standard libraries).
class SceneRng {
 public:
  explicit SceneRng(std::uint64_t seed) : engine_(seed) {}
  double uniform(double lo, double hi) { return lo + (hi - lo) * static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  std::uint64_t bits() { return engine_(); }
  Rgb color(double lo, double hi) { return {uniform(lo, hi), uniform(lo, hi), uniform(lo, hi)}; }

 private:
  std::mt19937_64 engine_;
};

TextureSpec texture(SceneRng& rng, TextureKind kind, double scale) {
  TextureSpec t;
  t.kind = kind;
  t.color_a = rng.color(0.15, 0.55);
  t.color_b = rng.color(0.45, 0.85);
  t.scale = scale;
  t.angle = rng.uniform(0.0, 3.14159265358979);
  t.seed = rng.bits();
  return t;
}

Rect jitter(SceneRng& rng, Rect r, double amount) {
  r.x0 += rng.uniform(-amount, amount);
  r.x1 += rng.uniform(-amount, amount);
  r.y0 += rng.uniform(-amount, amount);
  r.y1 += rng.uniform(-amount, amount);
  return r;
}

LayeredScene three_layer(std::uint64_t seed) {
  SceneRng rng(seed);
  LayeredScene s;
  s.range = {1.5, 10.0};
  // A short baseline keeps disocclusions small enough for eight planes.
  s.rig_baseline = 0.015;
  s.layers.push_back({2.0, jitter(rng, {-0.75, -0.55, -0.1, 0.3}, 0.04), texture(rng, TextureKind::Checker, 0.45), 1.0});
  s.layers.push_back({3.2, jitter(rng, {0.0, -0.95, 1.05, 0.15}, 0.05), texture(rng, TextureKind::Gradient, 0.9), 1.0});
  s.layers.push_back({5.0, jitter(rng, {-1.6, 0.45, 0.9, 2.0}, 0.06), texture(rng, TextureKind::Noise, 0.9), 0.85});
  s.background = {9.0, texture(rng, TextureKind::Noise, 2.0)};
  return s;
}

// Three near layers cover most of the frame and the far background shows
// through narrow gaps.
LayeredScene skewed_depth(std::uint64_t seed) {
  SceneRng rng(seed);
  LayeredScene s;
  s.range = {1.0, 20.0};
  s.layers.push_back({1.9, jitter(rng, {-0.69, -0.64, 0.07, 0.26}, 0.02), texture(rng, TextureKind::Checker, 0.38), 1.0});
  s.layers.push_back({2.2, jitter(rng, {-0.11, -1.05, 1.05, 0.33}, 0.03), texture(rng, TextureKind::Gradient, 0.68), 1.0});
  s.layers.push_back({2.5, jitter(rng, {-1.2, 0.05, 1.25, 1.3}, 0.04), texture(rng, TextureKind::Noise, 0.58), 1.0});
  s.background = {16.0, texture(rng, TextureKind::Noise, 4.0)};
  return s;
}

LayeredScene deep_range(std::uint64_t seed) {
  SceneRng rng(seed);
  LayeredScene s;
  s.range = {1.0, 100.0};
  s.layers.push_back({1.5, jitter(rng, {-0.7, -0.1, -0.1, 0.7}, 0.03), texture(rng, TextureKind::Checker, 0.15), 1.0});
  s.layers.push_back({6.0, jitter(rng, {0.2, -2.8, 3.2, 0.5}, 0.1), texture(rng, TextureKind::Gradient, 2.0), 1.0});
  s.layers.push_back({25.0, jitter(rng, {-12.0, 2.0, 6.0, 12.0}, 0.5), texture(rng, TextureKind::Noise, 4.0), 0.9});
  s.background = {90.0, texture(rng, TextureKind::Noise, 20.0)};
  return s;
}

}  // namespace

Rgb TextureSpec::evaluate(double x, double y) const {
  switch (kind) {
    case TextureKind::Checker: {
      const auto cx = static_cast<long long>(std::floor(x / scale));
      const auto cy = static_cast<long long>(std::floor(y / scale));
      return ((cx + cy) & 1LL) ? color_a : color_b;
    }
    case TextureKind::Gradient: {
      const double s = (x * std::cos(angle) + y * std::sin(angle)) / scale;
      return mix(color_a, color_b, 0.5 + 0.5 * std::sin(2.0 * 3.14159265358979323846 * s));
    }
    case TextureKind::Noise: {
      const double gx = x / scale;
      const double gy = y / scale;
      const double fx = std::floor(gx);
      const double fy = std::floor(gy);
      const auto ix = static_cast<std::int64_t>(fx);
      const auto iy = static_cast<std::int64_t>(fy);
      const double tx = smoothstep(gx - fx);
      const double ty = smoothstep(gy - fy);
      const double v00 = lattice_value(ix, iy, seed);
      const double v10 = lattice_value(ix + 1, iy, seed);
      const double v01 = lattice_value(ix, iy + 1, seed);
      const double v11 = lattice_value(ix + 1, iy + 1, seed);
      const double v = (v00 * (1 - tx) + v10 * tx) * (1 - ty) + (v01 * (1 - tx) + v11 * tx) * ty;
      return mix(color_a, color_b, v);
    }
  }
  return color_a;
}

void LayeredScene::validate() const {
  range.validate();
  double prev = 0.0;
  for (const auto& l : layers) {
    if (!(l.depth > prev)) throw Error(ErrorCode::InvalidArgument, "layer depths must increase strictly");
    if (!(l.opacity > 0.0 && l.opacity <= 1.0)) throw Error(ErrorCode::InvalidArgument, "opacity outside (0, 1]");
    if (!(l.rect.x1 > l.rect.x0 && l.rect.y1 > l.rect.y0)) throw Error(ErrorCode::InvalidArgument, "empty rect");
    prev = l.depth;
  }
  if (!(background.depth > prev)) throw Error(ErrorCode::InvalidArgument, "background must be deepest");
}

std::vector<std::string> scene_presets() { return {"three_layer", "skewed_depth", "deep_range"}; }

LayeredScene generate_scene(const std::string& preset, std::uint64_t seed) {
  LayeredScene s;
  if (preset == "three_layer") {
    s = three_layer(seed);
  } else if (preset == "skewed_depth") {
    s = skewed_depth(seed);
  } else if (preset == "deep_range") {
    s = deep_range(seed);
  } else {
    throw Error(ErrorCode::UnknownPreset, "unknown scene preset '" + preset + "'");
  }
  s.preset = preset;
  s.seed = seed;
  s.validate();
  return s;
}

GroundTruthView render_ground_truth(const LayeredScene& scene, const CameraIntrinsics& k, const RigidPose& world_to_cam,
                                    int width, int height) {
  scene.validate();
  k.validate();
  world_to_cam.validate();
  const Eigen::Matrix3d cam_to_world = world_to_cam.R.transpose();
  const Eigen::Vector3d origin = -cam_to_world * world_to_cam.t;
  const double nearest = scene.layers.empty() ? scene.background.depth : scene.layers.front().depth;
  if (origin.z() >= nearest) throw Error(ErrorCode::CameraInsideScene, "camera is not in front of every layer");

  GroundTruthView out{ImageBuffer(width, height, 3), ImageBuffer(width, height, 1)};
  for (int v = 0; v < height; ++v) {
    for (int u = 0; u < width; ++u) {
      const Eigen::Vector3d dir = cam_to_world * Eigen::Vector3d((u - k.cx) / k.fx, (v - k.cy) / k.fy, 1.0);
      if (dir.z() <= 0.0) throw Error(ErrorCode::CameraInsideScene, "pixel ray does not reach the scene");
      Rgb color{0.0, 0.0, 0.0};
      double transmittance = 1.0;
      double depth = -1.0;
      auto hit = [&](double plane_z, Eigen::Vector3d& p) {
        p = origin + dir * ((plane_z - origin.z()) / dir.z());
      };
      Eigen::Vector3d p;
      for (const auto& layer : scene.layers) {
        hit(layer.depth, p);
        if (!layer.rect.contains(p.x(), p.y())) continue;
        const Rgb c = layer.texture.evaluate(p.x(), p.y());
        for (int ch = 0; ch < 3; ++ch) color[ch] += transmittance * layer.opacity * c[ch];
        transmittance *= 1.0 - layer.opacity;
        if (depth < 0.0 && layer.opacity >= 0.5) depth = world_to_cam.apply(p).z();
      }
      hit(scene.background.depth, p);
      const Rgb c = scene.background.texture.evaluate(p.x(), p.y());
      for (int ch = 0; ch < 3; ++ch) color[ch] += transmittance * c[ch];
      if (depth < 0.0) depth = world_to_cam.apply(p).z();
      for (int ch = 0; ch < 3; ++ch) out.image.at(u, v, ch) = color[ch];
      out.depth.at(u, v) = depth;
    }
  }
  return out;
}

DepthSampleSet scene_depth_samples(const ImageBuffer& depth_map, std::size_t max_samples, std::uint64_t seed) {
  if (depth_map.channels() != 1) throw Error(ErrorCode::InvalidArgument, "depth map must have one channel");
  const std::size_t n = depth_map.size();
  DepthSampleSet out;
  if (max_samples >= n) {
    out.values.assign(depth_map.data().begin(), depth_map.data().end());
    return out;
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  // Partial Fisher-Yates; the index draw avoids std distributions for portability.
  for (std::size_t i = 0; i < max_samples; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng() % (n - i));
    std::swap(order[i], order[j]);
  }
  out.values.reserve(max_samples);
  for (std::size_t i = 0; i < max_samples; ++i) out.values.push_back(depth_map[order[i]]);
  return out;
}

namespace {

RigidPose camera_at(const Eigen::Vector3d& center, double yaw, double pitch) {
  const Eigen::Matrix3d cam_to_world =
      (Eigen::AngleAxisd(yaw, Eigen::Vector3d::UnitY()) * Eigen::AngleAxisd(pitch, Eigen::Vector3d::UnitX()))
          .toRotationMatrix();
  RigidPose p;
  p.R = cam_to_world.transpose();
  p.t = -p.R * center;
  return p;
}

}  // namespace

ViewRig default_rig(const LayeredScene& scene, int width, int height) {
  ViewRig rig;
  rig.spec.intrinsics = {static_cast<double>(width), static_cast<double>(width), (width - 1) / 2.0,
                         (height - 1) / 2.0};
  rig.spec.width = width;
  rig.spec.height = height;
  const double nearest = scene.layers.empty() ? scene.background.depth : scene.layers.front().depth;
  const double b = scene.rig_baseline * nearest;
  constexpr double kDeg = 3.14159265358979323846 / 180.0;
  auto add = [&](const char* name, const char* role, RigidPose pose) {
    rig.spec.poses.push_back(pose);
    rig.names.emplace_back(name);
    rig.roles.emplace_back(role);
  };
  add("source", "source", RigidPose::identity());
  add("right", "target", camera_at({b, 0.0, 0.0}, 0.5 * kDeg, 0.0));
  add("left", "target", camera_at({-b, 0.0, 0.0}, -0.5 * kDeg, 0.0));
  add("up", "target", camera_at({0.0, -b, 0.0}, 0.0, 0.0));
  add("down", "target", camera_at({0.0, b, 0.0}, 0.0, 0.3 * kDeg));
  add("heldout", "heldout", camera_at({0.5 * b, -0.4 * b, 0.3 * b}, 0.2 * kDeg, -0.2 * kDeg));
  return rig;
}

}  // namespace ampi
