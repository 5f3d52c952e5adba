#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "ampi/error.hpp"
#include "ampi/fitter.hpp"

namespace ampi::tools {

/// Process exit statuses shared by every command.
enum ExitCode : int { kOk = 0, kOther = 1, kUsage = 2, kDiverged = 3 };

int exit_code_for(const Error& e) noexcept;

struct SynthOptions {
  std::string preset;
  std::string camera_out;
  std::string image_dir;
  std::uint64_t seed = 7;
  int width = 128;
  int height = 128;
};

struct FitOptions {
  std::string camera_file;
  std::string images_dir;
  std::string out_dir;
  int planes = 8;
  std::optional<double> d_near;  // from images_dir/scene.json when unset
  std::optional<double> d_far;
  double lambda_ada = 0.1;
  std::string stages;  // empty keeps the default schedule
  std::uint64_t seed = 0;
  std::string gt_depth = "none";  // directory holding <source>_depth.png, or none
  std::string bins = "adaptive";
};

struct RenderCommandOptions {
  std::string mpi_dir;
  std::string camera_file;
  std::string view;
  std::string out_png;
  bool disparity = false;
};

struct EvalOptions {
  std::string mpi_dir;
  std::string camera_file;
  std::string images_dir;
  double crop = 0.05;
  std::string report_out;  // defaults to <mpi_dir>/eval_report.json
};

struct SweepOptions {
  FitOptions base;  // base.out_dir receives one container per variant
  std::string planes_list;
  std::string bins_list;
  double crop = 0.05;
};

/// Each command reports progress on `out`, problems on `err`, and returns
/// an ExitCode instead of throwing.
int cmd_synth(const SynthOptions& o, std::ostream& out, std::ostream& err);
int cmd_fit(const FitOptions& o, std::ostream& out, std::ostream& err);
int cmd_render(const RenderCommandOptions& o, std::ostream& out, std::ostream& err);
int cmd_eval(const EvalOptions& o, std::ostream& out, std::ostream& err);
int cmd_sweep(const SweepOptions& o, std::ostream& out, std::ostream& err);

/// Parses a full command line (argv[0] is the program name) and dispatches.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Keeps glibc from returning freed image buffers to the OS after every
/// iteration, which otherwise dominates fit time. No-op elsewhere.
void tune_allocator() noexcept;

}  // namespace ampi::tools
