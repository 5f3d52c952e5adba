#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "ampi/camera.hpp"
#include "ampi/image.hpp"
#include "ampi/losses.hpp"
#include "ampi/mpi.hpp"

namespace ampi {

using Rgb = std::array<double, 3>;

enum class TextureKind { Checker, Gradient, Noise };

/// Procedural texture evaluated analytically at plane coordinates (scene units).
///  - Checker: squares of side `scale` alternating color_a / color_b.
///  - Gradient: smooth sinusoidal ramp of period `scale` along `angle` radians.
///  - Noise: smoothstep value noise with lattice spacing `scale`.
struct TextureSpec {
  TextureKind kind = TextureKind::Checker;
  Rgb color_a{0.2, 0.2, 0.2};
  Rgb color_b{0.8, 0.8, 0.8};
  double scale = 0.25;
  double angle = 0.0;
  std::uint64_t seed = 0;

  Rgb evaluate(double x, double y) const;
};

/// Axis-aligned rectangle [x0, x1) x [y0, y1) in a z = depth plane.
struct Rect {
  double x0 = 0.0, y0 = 0.0, x1 = 0.0, y1 = 0.0;
  bool contains(double x, double y) const noexcept { return x >= x0 && x < x1 && y >= y0 && y < y1; }
};

struct SceneLayer {
  double depth = 1.0;
  Rect rect;
  TextureSpec texture;
  double opacity = 1.0;
};

struct SceneBackground {
  double depth = 10.0;
  TextureSpec texture;
};

/// Fronto-parallel textured rectangles in front of a textured background
/// plane. The world frame is the source camera frame.
struct LayeredScene {
  std::string preset;
  std::uint64_t seed = 0;
  std::vector<SceneLayer> layers;  // nearest first
  SceneBackground background;
  DepthRange range;  // bounds every surface in the scene
  double rig_baseline = 0.04;  // default_rig camera offset as a fraction of the nearest depth

  /// Throws InvalidArgument unless depths increase and the background is deepest.
  void validate() const;
};

struct SceneRenderSpec {
  CameraIntrinsics intrinsics;
  int width = 0;
  int height = 0;
  std::vector<RigidPose> poses;  // world-to-camera; the first is the source
};

struct GroundTruthView {
  ImageBuffer image;  // 3 channels
  ImageBuffer depth;  // 1 channel, camera-frame z
};

std::vector<std::string> scene_presets();

/// Deterministic in (preset, seed). Presets: three_layer, skewed_depth,
/// deep_range. Throws UnknownPreset.
LayeredScene generate_scene(const std::string& preset, std::uint64_t seed);

/// Analytic ray casting through pixel centers with front-to-back over
/// compositing. Depth is the z of the first layer hit with opacity >= 0.5,
/// else the background. Throws CameraInsideScene.
GroundTruthView render_ground_truth(const LayeredScene& scene, const CameraIntrinsics& k, const RigidPose& world_to_cam,
                                    int width, int height);

/// Seeded uniform subsample without replacement of min(max_samples, H*W) values.
DepthSampleSet scene_depth_samples(const ImageBuffer& depth_map, std::size_t max_samples, std::uint64_t seed);

/// Standard view rig: pinhole camera with fx = fy = width, source at the
/// origin, four training targets offset by scene.rig_baseline times the
/// nearest depth, and one held-out view inside their hull.
struct ViewRig {
  SceneRenderSpec spec;
  std::vector<std::string> names;
  std::vector<std::string> roles;  // "source", "target" or "heldout"
};

ViewRig default_rig(const LayeredScene& scene, int width, int height);

}  // namespace ampi
