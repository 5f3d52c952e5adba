#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "ampi/camera.hpp"
#include "ampi/fitter.hpp"
#include "ampi/mpi.hpp"
#include "ampi/synth.hpp"

namespace ampi::tools {

using Json = nlohmann::json;

/// A named camera. `pose` maps world coordinates into this camera's frame.
struct CameraView {
  std::string name;
  RigidPose pose;
  std::string role;  // source, target or heldout
};

/// All views share one pinhole model and image size.
struct CameraFile {
  CameraIntrinsics intrinsics;
  int width = 0;
  int height = 0;
  std::vector<CameraView> views;

  /// nullptr when no view has that name.
  const CameraView* find(const std::string& name) const;
  std::vector<const CameraView*> with_role(const std::string& role) const;
  /// Throws InvalidArgument unless exactly one source view exists.
  const CameraView& source() const;
  /// Pose taking `view` camera coordinates into the source camera frame.
  RigidPose to_source(const CameraView& view) const;
};

/// Throws Io for unreadable or malformed files and InvalidArgument for bad
/// rotations, roles, duplicate names or non-positive sizes.
CameraFile load_camera_file(const std::string& path);
void save_camera_file(const std::string& path, const CameraFile& cameras);
CameraFile camera_file_from_rig(const ViewRig& rig);

/// Directory with metadata.json and one 16-bit RGBA plane_<i>.png per plane.
void save_mpi(const MultiplaneImage& m, const std::string& dir);
/// Throws Io for missing files and InvalidArgument for inconsistent metadata.
MultiplaneImage load_mpi(const std::string& dir);
std::string plane_file_name(std::size_t index);

/// Header iter,stage,l_ada,l_syn,total,psnr_train; reals use 17 significant digits.
void write_trace_csv(const std::string& path, const FitTrace& trace);

Json scene_to_json(const LayeredScene& scene);
Json config_to_json(const FitConfig& cfg);

Json read_json(const std::string& path);
void write_json(const std::string& path, const Json& doc);

/// Parses "div:iters[:step],...". A missing step takes the default
/// schedule's step at the same position (its last one past the end).
std::vector<FitStage> parse_stages(const std::string& text);

}  // namespace ampi::tools
