#include "ampi_tools/formats.hpp"

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "ampi/error.hpp"
#include "ampi_tools/png_io.hpp"

namespace ampi::tools {
namespace fs = std::filesystem;

namespace {

constexpr int kFormatVersion = 1;

Json pose_to_json(const RigidPose& p) {
  Json r = Json::array(), t = Json::array();
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) r.push_back(p.R(i, j));
  for (int i = 0; i < 3; ++i) t.push_back(p.t(i));
  return {{"R", r}, {"t", t}};
}

template <typename T>
T required(const Json& j, const char* key, const std::string& where) {
  if (!j.contains(key)) throw Error(ErrorCode::Io, where + ": missing field '" + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::Io, where + ": bad field '" + key + "': " + e.what());
  }
}

Json intrinsics_to_json(const CameraIntrinsics& k) { return {{"fx", k.fx}, {"fy", k.fy}, {"cx", k.cx}, {"cy", k.cy}}; }

CameraIntrinsics intrinsics_from_json(const Json& j, const std::string& where) {
  CameraIntrinsics k{required<double>(j, "fx", where), required<double>(j, "fy", where), required<double>(j, "cx", where),
                     required<double>(j, "cy", where)};
  k.validate();
  return k;
}

const char* texture_name(TextureKind k) {
  switch (k) {
    case TextureKind::Checker: return "checker";
    case TextureKind::Gradient: return "gradient";
    case TextureKind::Noise: return "noise";
  }
  return "unknown";
}

Json texture_to_json(const TextureSpec& t) {
  return {{"kind", texture_name(t.kind)},
          {"color_a", t.color_a},
          {"color_b", t.color_b},
          {"scale", t.scale},
          {"angle", t.angle},
          {"seed", t.seed}};
}

std::string format_real(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

const CameraView* CameraFile::find(const std::string& name) const {
  for (const auto& v : views)
    if (v.name == name) return &v;
  return nullptr;
}

std::vector<const CameraView*> CameraFile::with_role(const std::string& role) const {
  std::vector<const CameraView*> out;
  for (const auto& v : views)
    if (v.role == role) out.push_back(&v);
  return out;
}

const CameraView& CameraFile::source() const {
  const auto sources = with_role("source");
  if (sources.size() != 1)
    throw Error(ErrorCode::InvalidArgument,
                "camera file needs exactly one source view, found " + std::to_string(sources.size()));
  return *sources.front();
}

RigidPose CameraFile::to_source(const CameraView& view) const {
  return relative_pose_tgt_to_src(source().pose, view.pose);
}

Json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path);
  try {
    return Json::parse(in);
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::Io, "malformed JSON in " + path + ": " + e.what());
  }
}

void write_json(const std::string& path, const Json& doc) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path);
  out << doc.dump(2) << '\n';
  if (!out) throw Error(ErrorCode::Io, "failed writing " + path);
}

CameraFile load_camera_file(const std::string& path) {
  const Json j = read_json(path);
  CameraFile cams;
  cams.intrinsics = intrinsics_from_json(j, path);
  cams.width = required<int>(j, "width", path);
  cams.height = required<int>(j, "height", path);
  if (cams.width <= 0 || cams.height <= 0) throw Error(ErrorCode::InvalidArgument, path + ": image size must be positive");
  if (!j.contains("views") || !j["views"].is_array()) throw Error(ErrorCode::Io, path + ": missing views array");
  std::set<std::string> names;
  for (const auto& v : j["views"]) {
    CameraView view;
    view.name = required<std::string>(v, "name", path);
    const std::string where = path + " view '" + view.name + "'";
    const auto r = required<std::vector<double>>(v, "R", where);
    const auto t = required<std::vector<double>>(v, "t", where);
    if (r.size() != 9 || t.size() != 3) throw Error(ErrorCode::Io, where + ": R needs 9 reals and t needs 3");
    for (int i = 0; i < 3; ++i) {
      for (int k = 0; k < 3; ++k) view.pose.R(i, k) = r[3 * i + k];
      view.pose.t(i) = t[i];
    }
    try {
      view.pose.validate();
    } catch (const Error& e) {
      throw Error(ErrorCode::InvalidArgument, where + ": " + e.what());
    }
    view.role = required<std::string>(v, "role", where);
    if (view.role != "source" && view.role != "target" && view.role != "heldout")
      throw Error(ErrorCode::InvalidArgument, where + ": role must be source, target or heldout");
    if (!names.insert(view.name).second) throw Error(ErrorCode::InvalidArgument, where + ": duplicate view name");
    cams.views.push_back(std::move(view));
  }
  return cams;
}

void save_camera_file(const std::string& path, const CameraFile& cams) {
  Json j = intrinsics_to_json(cams.intrinsics);
  j["width"] = cams.width;
  j["height"] = cams.height;
  Json views = Json::array();
  for (const auto& v : cams.views) {
    Json jv = pose_to_json(v.pose);
    jv["name"] = v.name;
    jv["role"] = v.role;
    views.push_back(std::move(jv));
  }
  j["views"] = std::move(views);
  write_json(path, j);
}

CameraFile camera_file_from_rig(const ViewRig& rig) {
  CameraFile cams;
  cams.intrinsics = rig.spec.intrinsics;
  cams.width = rig.spec.width;
  cams.height = rig.spec.height;
  for (std::size_t i = 0; i < rig.spec.poses.size(); ++i) cams.views.push_back({rig.names[i], rig.spec.poses[i], rig.roles[i]});
  return cams;
}

std::string plane_file_name(std::size_t index) { return "plane_" + std::to_string(index) + ".png"; }

void save_mpi(const MultiplaneImage& m, const std::string& dir) {
  m.validate();
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::Io, "cannot create " + dir + ": " + ec.message());
  Json meta;
  meta["format_version"] = kFormatVersion;
  meta["n_planes"] = m.size();
  meta["d_near"] = m.depth_range.d_near;
  meta["d_far"] = m.depth_range.d_far;
  meta["depths"] = m.depths();
  meta["intrinsics"] = intrinsics_to_json(m.intrinsics);
  meta["width"] = m.width();
  meta["height"] = m.height();
  for (std::size_t i = 0; i < m.size(); ++i) {
    const Plane& p = m.planes[i];
    ImageBuffer rgba(m.width(), m.height(), 4);
    for (int y = 0; y < m.height(); ++y) {
      for (int x = 0; x < m.width(); ++x) {
        for (int c = 0; c < 3; ++c) rgba.at(x, y, c) = p.color.at(x, y, c);
        rgba.at(x, y, 3) = p.alpha.at(x, y);
      }
    }
    write_png((fs::path(dir) / plane_file_name(i)).string(), rgba, 16);
  }
  write_json((fs::path(dir) / "metadata.json").string(), meta);
}

MultiplaneImage load_mpi(const std::string& dir) {
  const std::string meta_path = (fs::path(dir) / "metadata.json").string();
  const Json meta = read_json(meta_path);
  const int version = required<int>(meta, "format_version", meta_path);
  if (version != kFormatVersion)
    throw Error(ErrorCode::InvalidArgument, meta_path + ": unsupported format_version " + std::to_string(version));
  const auto n = required<std::size_t>(meta, "n_planes", meta_path);
  const auto depths = required<std::vector<double>>(meta, "depths", meta_path);
  if (depths.size() != n || n == 0)
    throw Error(ErrorCode::InvalidArgument, meta_path + ": depths must list n_planes > 0 values");
  MultiplaneImage m;
  m.depth_range = {required<double>(meta, "d_near", meta_path), required<double>(meta, "d_far", meta_path)};
  if (!meta.contains("intrinsics")) throw Error(ErrorCode::Io, meta_path + ": missing field 'intrinsics'");
  m.intrinsics = intrinsics_from_json(meta["intrinsics"], meta_path);
  const int w = required<int>(meta, "width", meta_path);
  const int h = required<int>(meta, "height", meta_path);
  for (std::size_t i = 0; i < n; ++i) {
    const std::string path = (fs::path(dir) / plane_file_name(i)).string();
    const ImageBuffer rgba = read_png(path);
    if (rgba.width() != w || rgba.height() != h || rgba.channels() != 4)
      throw Error(ErrorCode::InvalidArgument, path + ": expected " + std::to_string(w) + "x" + std::to_string(h) + " RGBA");
    Plane p{ImageBuffer(w, h, 3), ImageBuffer(w, h, 1), depths[i]};
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        for (int c = 0; c < 3; ++c) p.color.at(x, y, c) = rgba.at(x, y, c);
        p.alpha.at(x, y) = rgba.at(x, y, 3);
      }
    }
    m.planes.push_back(std::move(p));
  }
  try {
    m.validate();
  } catch (const Error& e) {
    throw Error(ErrorCode::InvalidArgument, dir + ": " + e.what());
  }
  return m;
}

void write_trace_csv(const std::string& path, const FitTrace& trace) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path);
  out << "iter,stage,l_ada,l_syn,total,psnr_train\n";
  for (const auto& r : trace.records) {
    out << r.iter << ',' << r.stage << ',' << format_real(r.l_ada) << ',' << format_real(r.l_syn) << ','
        << format_real(r.total) << ',' << format_real(r.psnr_train) << '\n';
  }
  if (!out) throw Error(ErrorCode::Io, "failed writing " + path);
}

Json scene_to_json(const LayeredScene& scene) {
  Json layers = Json::array();
  for (const auto& l : scene.layers) {
    layers.push_back({{"depth", l.depth},
                      {"rect", {l.rect.x0, l.rect.y0, l.rect.x1, l.rect.y1}},
                      {"texture", texture_to_json(l.texture)},
                      {"opacity", l.opacity}});
  }
  return {{"preset", scene.preset},
          {"seed", scene.seed},
          {"d_near", scene.range.d_near},
          {"d_far", scene.range.d_far},
          {"rig_baseline", scene.rig_baseline},
          {"layers", layers},
          {"background", {{"depth", scene.background.depth}, {"texture", texture_to_json(scene.background.texture)}}}};
}

Json config_to_json(const FitConfig& cfg) {
  Json stages = Json::array();
  for (const auto& s : cfg.stages)
    stages.push_back({{"scale_divisor", s.scale_divisor}, {"iterations", s.iterations}, {"step_size", s.step_size}});
  return {{"n_planes", cfg.n_planes},
          {"d_near", cfg.depth_range.d_near},
          {"d_far", cfg.depth_range.d_far},
          {"lambda_ada", cfg.lambda_ada},
          {"stages", stages},
          {"adam", {{"beta1", cfg.optimizer.beta1}, {"beta2", cfg.optimizer.beta2}, {"epsilon", cfg.optimizer.epsilon}}},
          {"seed", cfg.seed},
          {"use_gt_depth", cfg.use_gt_depth},
          {"bins", to_string(cfg.bins)},
          {"bin_step_scale", cfg.bin_step_scale},
          {"freeze_appearance", cfg.freeze_appearance},
          {"border", cfg.border == BorderPolicy::ZeroPad ? "zero" : "clamp"}};
}

std::vector<FitStage> parse_stages(const std::string& text) {
  const auto defaults = FitConfig::default_stages();
  std::vector<FitStage> stages;
  std::stringstream items(text);
  std::string item;
  while (std::getline(items, item, ',')) {
    std::vector<std::string> fields;
    std::stringstream parts(item);
    std::string f;
    while (std::getline(parts, f, ':')) fields.push_back(f);
    if (fields.size() < 2 || fields.size() > 3)
      throw Error(ErrorCode::InvalidArgument, "stage '" + item + "' must be div:iters or div:iters:step");
    auto parse_int = [&](const std::string& s) {
      int v = 0;
      const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
      if (ec != std::errc() || ptr != s.data() + s.size())
        throw Error(ErrorCode::InvalidArgument, "stage '" + item + "': '" + s + "' is not an integer");
      return v;
    };
    FitStage st;
    st.scale_divisor = parse_int(fields[0]);
    st.iterations = parse_int(fields[1]);
    st.step_size = defaults[std::min(stages.size(), defaults.size() - 1)].step_size;
    if (fields.size() == 3) {
      std::size_t used = 0;
      try {
        st.step_size = std::stod(fields[2], &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used == 0 || used != fields[2].size())
        throw Error(ErrorCode::InvalidArgument, "stage '" + item + "': '" + fields[2] + "' is not a number");
    }
    stages.push_back(st);
  }
  if (stages.empty()) throw Error(ErrorCode::InvalidArgument, "empty stage list");
  return stages;
}

}  // namespace ampi::tools
