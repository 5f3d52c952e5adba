#include <CLI11.hpp>

#include "ampi/synth.hpp"
#include "ampi_tools/commands.hpp"

namespace ampi::tools {
namespace {

void add_fit_flags(CLI::App* cmd, FitOptions& o) {
  cmd->add_option("--planes", o.planes, "Number of planes")->capture_default_str();
  cmd->add_option("--near", o.d_near, "Nearest plane bound (default: scene.json next to the images)");
  cmd->add_option("--far", o.d_far, "Farthest plane bound (default: scene.json next to the images)");
  cmd->add_option("--lambda-ada", o.lambda_ada, "Weight of the adaptive-bins loss")->capture_default_str();
  cmd->add_option("--stages", o.stages, "Schedule as div:iters[:step],... (coarse to fine)");
  cmd->add_option("--seed", o.seed, "Initialization and sampling seed")->capture_default_str();
  cmd->add_option("--gt-depth", o.gt_depth, "Directory with <source>_depth.png, or none")->capture_default_str();
  cmd->add_option("--bins", o.bins, "Plane placement")
      ->check(CLI::IsMember({"adaptive", "uniform", "log"}))
      ->capture_default_str();
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Scene-adaptive multiplane images: synthesize, fit, render and evaluate", "ampi"};
  app.require_subcommand(1);

  SynthOptions synth;
  auto* synth_cmd = app.add_subcommand("synth", "Render a synthetic preset and its camera rig");
  synth_cmd->add_option("preset", synth.preset, "Scene preset")->required()->check(CLI::IsMember(scene_presets()));
  synth_cmd->add_option("camera_out", synth.camera_out, "Camera file to write")->required();
  synth_cmd->add_option("image_dir", synth.image_dir, "Directory for images, depth maps and scene.json")->required();
  synth_cmd->add_option("--seed", synth.seed, "Scene seed")->capture_default_str();
  synth_cmd->add_option("--width", synth.width, "Image width")->capture_default_str()->check(CLI::PositiveNumber);
  synth_cmd->add_option("--height", synth.height, "Image height")->capture_default_str()->check(CLI::PositiveNumber);

  FitOptions fit;
  auto* fit_cmd = app.add_subcommand("fit", "Fit an MPI to the source and target views");
  fit_cmd->add_option("camera_file", fit.camera_file, "Camera file")->required();
  fit_cmd->add_option("images_dir", fit.images_dir, "Directory with <view>.png images")->required();
  fit_cmd->add_option("out_mpi_dir", fit.out_dir, "Output MPI directory")->required();
  add_fit_flags(fit_cmd, fit);

  RenderCommandOptions rend;
  auto* render_cmd = app.add_subcommand("render", "Render a stored MPI into a named view");
  render_cmd->add_option("mpi_dir", rend.mpi_dir, "MPI directory")->required();
  render_cmd->add_option("camera_file", rend.camera_file, "Camera file")->required();
  render_cmd->add_option("view", rend.view, "View name")->required();
  render_cmd->add_option("out_png", rend.out_png, "Output PNG")->required();
  render_cmd->add_flag("--disparity", rend.disparity, "Write normalized disparity as 16-bit grayscale");

  EvalOptions eval;
  auto* eval_cmd = app.add_subcommand("eval", "Score a stored MPI on the held-out views");
  eval_cmd->add_option("mpi_dir", eval.mpi_dir, "MPI directory")->required();
  eval_cmd->add_option("camera_file", eval.camera_file, "Camera file")->required();
  eval_cmd->add_option("images_dir", eval.images_dir, "Directory with <view>.png images")->required();
  eval_cmd->add_option("--crop", eval.crop, "Fraction cropped from every border")->capture_default_str();
  eval_cmd->add_option("--out", eval.report_out, "Report path (default <mpi_dir>/eval_report.json)");

  SweepOptions sweep;
  auto* sweep_cmd = app.add_subcommand("sweep", "Fit several variants and compare held-out scores");
  sweep_cmd->add_option("camera_file", sweep.base.camera_file, "Camera file")->required();
  sweep_cmd->add_option("images_dir", sweep.base.images_dir, "Directory with <view>.png images")->required();
  sweep_cmd->add_option("out_dir", sweep.base.out_dir, "Directory for runs and sweep_report.json")->required();
  add_fit_flags(sweep_cmd, sweep.base);
  auto* planes_list = sweep_cmd->add_option("--planes-list", sweep.planes_list, "Plane counts, e.g. 4,8,16");
  auto* bins_list = sweep_cmd->add_option("--bins-list", sweep.bins_list, "Strategies, e.g. adaptive,uniform,log");
  planes_list->excludes(bins_list);
  sweep_cmd->add_option("--crop", sweep.crop, "Fraction cropped from every border")->capture_default_str();

  std::vector<const char*> argv;
  argv.reserve(args.size());
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n";
    const auto used = app.get_subcommands();
    err << (used.empty() ? app.help() : used.front()->help());
    return kUsage;
  }

  if (synth_cmd->parsed()) return cmd_synth(synth, out, err);
  if (fit_cmd->parsed()) return cmd_fit(fit, out, err);
  if (render_cmd->parsed()) return cmd_render(rend, out, err);
  if (eval_cmd->parsed()) return cmd_eval(eval, out, err);
  return cmd_sweep(sweep, out, err);
}

}  // namespace ampi::tools
