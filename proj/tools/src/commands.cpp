#include "ampi_tools/commands.hpp"

#include <chrono>
#include <filesystem>
#include <sstream>

#if defined(__GLIBC__)
#include <malloc.h>
#endif

#include "ampi/losses.hpp"
#include "ampi/renderer.hpp"
#include "ampi/synth.hpp"
#include "ampi_tools/formats.hpp"
#include "ampi_tools/png_io.hpp"

namespace ampi::tools {
namespace fs = std::filesystem;

namespace {

constexpr std::size_t kMaxDepthSamples = 4096;

std::string join(const std::string& dir, const std::string& file) { return (fs::path(dir) / file).string(); }

void make_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::Io, "cannot create " + dir + ": " + ec.message());
}

template <typename F>
int guarded(std::ostream& err, F&& body) {
  try {
    return body();
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return exit_code_for(e);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kOther;
  }
}

ImageBuffer rgb_only(const ImageBuffer& img, const std::string& path) {
  if (img.channels() == 3) return img;
  if (img.channels() != 4) throw Error(ErrorCode::InvalidArgument, path + ": expected an RGB image");
  ImageBuffer out(img.width(), img.height(), 3);
  for (int y = 0; y < img.height(); ++y)
    for (int x = 0; x < img.width(); ++x)
      for (int c = 0; c < 3; ++c) out.at(x, y, c) = img.at(x, y, c);
  return out;
}

/// Loads <dir>/<view>.png; a missing file is a usage error.
ImageBuffer load_view_image(const std::string& dir, const CameraFile& cams, const CameraView& view) {
  const std::string path = join(dir, view.name + ".png");
  if (!fs::exists(path)) throw Error(ErrorCode::InvalidArgument, "missing image for view '" + view.name + "': " + path);
  ImageBuffer img = rgb_only(read_png(path), path);
  if (img.width() != cams.width || img.height() != cams.height)
    throw Error(ErrorCode::InvalidArgument, path + ": size differs from the camera file");
  return img;
}

std::optional<Json> scene_json(const std::string& dir) {
  const std::string path = join(dir, "scene.json");
  if (!fs::exists(path)) return std::nullopt;
  return read_json(path);
}

struct FitRun {
  FitConfig cfg;
  CameraFile cams;
  FitResult result;
  std::vector<std::string> train_names;
  std::vector<PosedView> train;
  double wall_seconds = 0.0;
};

FitConfig build_config(const FitOptions& o) {
  FitConfig cfg;
  cfg.n_planes = o.planes;
  cfg.lambda_ada = o.lambda_ada;
  cfg.seed = o.seed;
  cfg.bins = parse_bin_strategy(o.bins);
  cfg.use_gt_depth = o.gt_depth != "none";
  if (!o.stages.empty()) cfg.stages = parse_stages(o.stages);
  std::optional<Json> scene;
  if (!o.d_near || !o.d_far) scene = scene_json(o.images_dir);
  auto bound = [&](const std::optional<double>& flag, const char* key, const char* name) {
    if (flag) return *flag;
    if (scene && scene->contains(key)) return (*scene)[key].get<double>();
    throw Error(ErrorCode::InvalidArgument, std::string(name) + " is required when the images have no scene.json");
  };
  cfg.depth_range = {bound(o.d_near, "d_near", "--near"), bound(o.d_far, "d_far", "--far")};
  cfg.validate();
  return cfg;
}

DepthSampleSet load_depth_samples(const FitOptions& o, const FitConfig& cfg, const CameraView& source) {
  const std::string path = join(o.gt_depth, source.name + "_depth.png");
  if (!fs::exists(path)) throw Error(ErrorCode::InvalidArgument, "missing depth map " + path);
  ImageBuffer depth = read_png(path);
  if (depth.channels() != 1) throw Error(ErrorCode::InvalidArgument, path + ": expected a grayscale depth map");
  double scale = cfg.depth_range.d_far;
  if (auto scene = scene_json(o.gt_depth); scene && scene->contains("d_far")) scale = (*scene)["d_far"].get<double>();
  for (auto& v : depth.data()) v *= scale;
  return scene_depth_samples(depth, kMaxDepthSamples, o.seed);
}

/// Throws DivergenceError with the partial trace; callers decide what to write.
FitRun run_fit(const FitOptions& o) {
  FitRun run;
  run.cfg = build_config(o);
  run.cams = load_camera_file(o.camera_file);
  const CameraView& source = run.cams.source();
  const auto targets = run.cams.with_role("target");
  if (targets.empty()) throw Error(ErrorCode::InvalidArgument, "camera file has no target views");

  const ImageBuffer source_image = load_view_image(o.images_dir, run.cams, source);
  run.train.push_back({source_image, RigidPose::identity(), run.cams.intrinsics});
  run.train_names.push_back(source.name);
  for (const CameraView* t : targets) {
    run.train.push_back({load_view_image(o.images_dir, run.cams, *t), run.cams.to_source(*t), run.cams.intrinsics});
    run.train_names.push_back(t->name);
  }
  std::optional<DepthSampleSet> samples;
  if (run.cfg.use_gt_depth) samples = load_depth_samples(o, run.cfg, source);

  const auto t0 = std::chrono::steady_clock::now();
  run.result = fit(source_image, run.cams.intrinsics, run.train, samples, run.cfg);
  run.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return run;
}

Json options_to_json(const FitOptions& o) {
  return {{"camera_file", o.camera_file}, {"images_dir", o.images_dir}, {"out_dir", o.out_dir},
          {"gt_depth", o.gt_depth}, {"stages_flag", o.stages}};
}

Json fit_report(const FitOptions& o, const FitRun& run) {
  Json views = Json::array();
  double mean = 0.0;
  for (std::size_t i = 0; i < run.train.size(); ++i) {
    const auto& v = run.train[i];
    const double p = psnr(render(run.result.mpi, v.pose, v.intrinsics, v.image.width(), v.image.height()), v.image);
    views.push_back({{"name", run.train_names[i]}, {"psnr", p}});
    mean += p;
  }
  mean /= static_cast<double>(run.train.size());
  Json last = Json::object();
  if (!run.result.trace.records.empty()) {
    const auto& r = run.result.trace.records.back();
    last = {{"iter", r.iter}, {"stage", r.stage}, {"l_ada", r.l_ada}, {"l_syn", r.l_syn}, {"total", r.total},
            {"psnr_train", r.psnr_train}};
  }
  return {{"status", "ok"},
          {"config", config_to_json(run.cfg)},
          {"inputs", options_to_json(o)},
          {"wall_time_seconds", run.wall_seconds},
          {"iterations", run.result.trace.records.size()},
          {"final",
           {{"psnr_train", mean}, {"views", views}, {"depths", run.result.mpi.depths()}, {"last_trace", last}}}};
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto b = item.find_first_not_of(" \t");
    const auto e = item.find_last_not_of(" \t");
    if (b != std::string::npos) out.push_back(item.substr(b, e - b + 1));
  }
  return out;
}

std::vector<PosedView> heldout_views(const CameraFile& cams, const std::string& images_dir,
                                     std::vector<std::string>* names = nullptr) {
  std::vector<PosedView> views;
  for (const CameraView* v : cams.with_role("heldout")) {
    views.push_back({load_view_image(images_dir, cams, *v), cams.to_source(*v), cams.intrinsics});
    if (names) names->push_back(v->name);
  }
  if (views.empty()) throw Error(ErrorCode::InvalidArgument, "camera file has no heldout views");
  return views;
}

}  // namespace

int exit_code_for(const Error& e) noexcept {
  switch (e.code()) {
    case ErrorCode::DivergenceDetected:
      return kDiverged;
    case ErrorCode::InvalidArgument:
    case ErrorCode::UnknownPreset:
    case ErrorCode::NonPositiveNear:
    case ErrorCode::ShapeMismatch:
    case ErrorCode::ImageTooSmall:
    case ErrorCode::EmptyGroundTruth:
    case ErrorCode::IndexOutOfRange:
      return kUsage;
    default:
      return kOther;
  }
}

int cmd_synth(const SynthOptions& o, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const LayeredScene scene = generate_scene(o.preset, o.seed);
    const ViewRig rig = default_rig(scene, o.width, o.height);
    make_dir(o.image_dir);
    if (const auto parent = fs::path(o.camera_out).parent_path(); !parent.empty()) make_dir(parent.string());
    for (std::size_t i = 0; i < rig.spec.poses.size(); ++i) {
      const GroundTruthView gt = render_ground_truth(scene, rig.spec.intrinsics, rig.spec.poses[i], o.width, o.height);
      ImageBuffer depth = gt.depth;
      for (auto& v : depth.data()) v /= scene.range.d_far;
      write_png(join(o.image_dir, rig.names[i] + ".png"), gt.image, 8);
      write_png(join(o.image_dir, rig.names[i] + "_depth.png"), depth, 16);
    }
    save_camera_file(o.camera_out, camera_file_from_rig(rig));
    Json scene_doc = scene_to_json(scene);
    scene_doc["width"] = o.width;
    scene_doc["height"] = o.height;
    scene_doc["depth_png_scale"] = scene.range.d_far;
    write_json(join(o.image_dir, "scene.json"), scene_doc);
    out << "wrote " << rig.spec.poses.size() << " views of " << o.preset << " to " << o.image_dir << '\n';
    return kOk;
  });
}

int cmd_fit(const FitOptions& o, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    try {
      const FitRun run = run_fit(o);
      save_mpi(run.result.mpi, o.out_dir);
      write_trace_csv(join(o.out_dir, "trace.csv"), run.result.trace);
      const Json report = fit_report(o, run);
      write_json(join(o.out_dir, "fit_report.json"), report);
      out << "fit " << run.cfg.n_planes << " planes (" << to_string(run.cfg.bins) << ") in " << run.wall_seconds
          << " s, train PSNR " << report["final"]["psnr_train"].get<double>() << " dB\n";
      return kOk;
    } catch (const DivergenceError& e) {
      make_dir(o.out_dir);
      write_trace_csv(join(o.out_dir, "trace.csv"), e.trace());
      write_json(join(o.out_dir, "fit_report.json"),
                 {{"status", "diverged"}, {"error", e.what()}, {"inputs", options_to_json(o)},
                  {"iterations", e.trace().records.size()}});
      throw;
    }
  });
}

int cmd_render(const RenderCommandOptions& o, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const CameraFile cams = load_camera_file(o.camera_file);
    const CameraView* view = cams.find(o.view);
    if (!view) throw Error(ErrorCode::InvalidArgument, "view '" + o.view + "' not in " + o.camera_file);
    MultiplaneImage m = load_mpi(o.mpi_dir);
    const RigidPose pose = cams.to_source(*view);
    if (o.disparity) {
      // Compositing a constant d_near / depth color yields the normalized
      // disparity seen from the requested view.
      for (auto& p : m.planes)
        for (auto& v : p.color.data()) v = m.depth_range.d_near / p.depth;
      const ImageBuffer rgb = render(m, pose, cams.intrinsics, cams.width, cams.height);
      ImageBuffer disp(cams.width, cams.height, 1);
      for (int y = 0; y < cams.height; ++y)
        for (int x = 0; x < cams.width; ++x) disp.at(x, y) = rgb.at(x, y, 0);
      write_png(o.out_png, disp, 16);
    } else {
      write_png(o.out_png, render(m, pose, cams.intrinsics, cams.width, cams.height), 8);
    }
    out << "wrote " << o.out_png << '\n';
    return kOk;
  });
}

int cmd_eval(const EvalOptions& o, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const CameraFile cams = load_camera_file(o.camera_file);
    if (!(o.crop >= 0.0 && o.crop < 0.5)) throw Error(ErrorCode::InvalidArgument, "--crop must be in [0, 0.5)");
    std::vector<std::string> names;
    const auto views = heldout_views(cams, o.images_dir, &names);
    const MultiplaneImage m = load_mpi(o.mpi_dir);
    const HeldoutReport rep = evaluate_heldout(m, views, o.crop);
    Json rows = Json::array();
    for (std::size_t i = 0; i < rep.views.size(); ++i) {
      const auto& v = rep.views[i];
      rows.push_back({{"name", names[i]}, {"psnr", v.psnr}, {"ssim", v.ssim}, {"lpips", nullptr},
                      {"evaluated_width", v.evaluated_width}, {"evaluated_height", v.evaluated_height}});
      out << names[i] << ": PSNR " << v.psnr << " dB, SSIM " << v.ssim << '\n';
    }
    const Json report = {{"crop", o.crop},
                         {"views", rows},
                         {"mean", {{"psnr", rep.mean_psnr}, {"ssim", rep.mean_ssim}, {"lpips", nullptr}}},
                         {"lpips_note", "unavailable"}};
    out << "mean: PSNR " << rep.mean_psnr << " dB, SSIM " << rep.mean_ssim << '\n';
    write_json(o.report_out.empty() ? join(o.mpi_dir, "eval_report.json") : o.report_out, report);
    return kOk;
  });
}

int cmd_sweep(const SweepOptions& o, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const bool by_planes = !o.planes_list.empty();
    if (by_planes == !o.bins_list.empty())
      throw Error(ErrorCode::InvalidArgument, "give exactly one of --planes-list and --bins-list");
    const auto items = split_list(by_planes ? o.planes_list : o.bins_list);
    if (items.empty()) throw Error(ErrorCode::InvalidArgument, "empty sweep list");

    std::vector<FitOptions> variants;
    for (const auto& item : items) {
      FitOptions v = o.base;
      if (by_planes) {
        std::size_t used = 0;
        try {
          v.planes = std::stoi(item, &used);
        } catch (const std::exception&) {
          used = 0;
        }
        if (used == 0 || used != item.size()) throw Error(ErrorCode::InvalidArgument, "bad plane count '" + item + "'");
      } else {
        parse_bin_strategy(item);
        v.bins = item;
      }
      variants.push_back(std::move(v));
    }
    build_config(o.base);  // fail fast on a bad base configuration
    const CameraFile cams = load_camera_file(o.base.camera_file);
    const auto views = heldout_views(cams, o.base.images_dir);
    make_dir(o.base.out_dir);

    Json rows = Json::array();
    Json table = Json::object();
    int failures = 0;
    for (std::size_t i = 0; i < variants.size(); ++i) {
      const std::string name = (by_planes ? "planes=" : "bins=") + items[i];
      FitOptions v = variants[i];
      v.out_dir = join(o.base.out_dir, "run_" + std::to_string(i));
      Json row = {{"variant", name}, {"out_dir", v.out_dir}};
      try {
        const FitRun run = run_fit(v);
        save_mpi(run.result.mpi, v.out_dir);
        write_trace_csv(join(v.out_dir, "trace.csv"), run.result.trace);
        write_json(join(v.out_dir, "fit_report.json"), fit_report(v, run));
        const HeldoutReport rep = evaluate_heldout(run.result.mpi, views, o.crop);
        row["status"] = "ok";
        row["psnr"] = rep.mean_psnr;
        row["ssim"] = rep.mean_ssim;
        row["depths"] = run.result.mpi.depths();
        table[name] = {{"psnr", rep.mean_psnr}, {"ssim", rep.mean_ssim}};
        out << name << ": PSNR " << rep.mean_psnr << " dB, SSIM " << rep.mean_ssim << '\n';
      } catch (const Error& e) {
        ++failures;
        row["status"] = e.code() == ErrorCode::DivergenceDetected ? "diverged" : "failed";
        row["error"] = e.what();
        err << name << ": " << e.what() << '\n';
      }
      rows.push_back(std::move(row));
    }
    write_json(join(o.base.out_dir, "sweep_report.json"),
               {{"base", options_to_json(o.base)}, {"crop", o.crop}, {"rows", rows}, {"table", table}});
    return failures == static_cast<int>(variants.size()) ? static_cast<int>(kOther) : static_cast<int>(kOk);
  });
}

void tune_allocator() noexcept {
#if defined(__GLIBC__)
  mallopt(M_TRIM_THRESHOLD, 1 << 30);
  mallopt(M_MMAP_THRESHOLD, 1 << 28);
#endif
}

}  // namespace ampi::tools
