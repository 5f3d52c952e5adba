#include "ampi/fitter.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace ampi {

namespace {

constexpr double kColorClamp = 1e-3;
constexpr double kInitAlphaNoise = 0.01;

// Adam moments for one flat parameter block.
class AdamBlock {
 public:
  explicit AdamBlock(std::size_t n = 0) : m_(n, 0.0), v_(n, 0.0) {}

  void step(std::span<double> params, std::span<const double> grads, double lr, const AdamSettings& s,
            double bias1, double bias2) {
    for (std::size_t i = 0; i < params.size(); ++i) {
      m_[i] = s.beta1 * m_[i] + (1.0 - s.beta1) * grads[i];
      v_[i] = s.beta2 * v_[i] + (1.0 - s.beta2) * grads[i] * grads[i];
      const double m_hat = m_[i] / bias1;
      const double v_hat = v_[i] / bias2;
      params[i] -= lr * m_hat / (std::sqrt(v_hat) + s.epsilon);
    }
  }

 private:
  std::vector<double> m_;
  std::vector<double> v_;
};

struct AdamState {
  std::vector<AdamBlock> color;
  std::vector<AdamBlock> alpha;
  AdamBlock bins;
  int t = 0;

  explicit AdamState(const FitParams& p) : bins(p.bin_logits.size()) {
    for (const auto& c : p.color_logits) color.emplace_back(c.size());
    for (const auto& a : p.alpha_logits) alpha.emplace_back(a.size());
  }
};

struct StageView {
  ImageBuffer image;
  RigidPose pose;
  CameraIntrinsics intrinsics;
};

CameraIntrinsics rescale_to(const CameraIntrinsics& k, int from_w, int from_h, int to_w, int to_h) {
  return k.rescaled(static_cast<double>(to_w) / from_w, static_cast<double>(to_h) / from_h);
}

FitParams upsample_params(const FitParams& p, int w, int h) {
  FitParams out;
  out.bin_logits = p.bin_logits;
  for (const auto& c : p.color_logits) out.color_logits.push_back(resize(c, w, h, ResizeMode::Up));
  for (const auto& a : p.alpha_logits) out.alpha_logits.push_back(resize(a, w, h, ResizeMode::Up));
  return out;
}

std::vector<double> fixed_depths(const FitConfig& cfg) {
  switch (cfg.bins) {
    case BinStrategy::Uniform: return uniform_positions(cfg.n_planes, cfg.depth_range);
    case BinStrategy::Log: return log_positions(cfg.n_planes, cfg.depth_range);
    case BinStrategy::Adaptive: break;
  }
  return {};
}

MultiplaneImage decode_for(const FitParams& params, const FitConfig& cfg, const CameraIntrinsics& k) {
  if (cfg.bins == BinStrategy::Adaptive) return decode(params, cfg.depth_range, k);
  return decode(params, cfg.depth_range, k, fixed_depths(cfg));
}

// Box-Muller on a portable uniform stream.
class GaussianStream {
 public:
  explicit GaussianStream(std::uint64_t seed) : engine_(seed) {}
  double next() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
    const double u2 = static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * 3.14159265358979323846 * u2;
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
  }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace

const char* to_string(BinStrategy s) noexcept {
  switch (s) {
    case BinStrategy::Adaptive: return "adaptive";
    case BinStrategy::Uniform: return "uniform";
    case BinStrategy::Log: return "log";
  }
  return "adaptive";
}

BinStrategy parse_bin_strategy(const std::string& name) {
  if (name == "adaptive") return BinStrategy::Adaptive;
  if (name == "uniform") return BinStrategy::Uniform;
  if (name == "log") return BinStrategy::Log;
  throw Error(ErrorCode::InvalidArgument, "unknown bin strategy '" + name + "'");
}

std::vector<FitStage> FitConfig::default_stages() { return {{4, 300, 1e-2}, {2, 300, 5e-3}, {1, 400, 2e-3}}; }

void FitConfig::validate() const {
  if (n_planes < 1) throw Error(ErrorCode::InvalidArgument, "n_planes must be >= 1");
  depth_range.validate();
  if (!(lambda_ada >= 0.0)) throw Error(ErrorCode::InvalidArgument, "lambda_ada must be >= 0");
  if (stages.empty()) throw Error(ErrorCode::InvalidArgument, "at least one stage required");
  for (std::size_t i = 0; i < stages.size(); ++i) {
    if (stages[i].scale_divisor < 1) throw Error(ErrorCode::InvalidArgument, "scale divisors must be >= 1");
    if (i > 0 && stages[i].scale_divisor >= stages[i - 1].scale_divisor)
      throw Error(ErrorCode::InvalidArgument, "scale divisors must be strictly decreasing");
    if (stages[i].iterations < 0) throw Error(ErrorCode::InvalidArgument, "iterations must be >= 0");
    if (!(stages[i].step_size > 0.0)) throw Error(ErrorCode::InvalidArgument, "step sizes must be > 0");
  }
  if (stages.back().scale_divisor != 1) throw Error(ErrorCode::InvalidArgument, "last stage must have divisor 1");
  if (!(optimizer.beta1 >= 0.0 && optimizer.beta1 < 1.0) || !(optimizer.beta2 >= 0.0 && optimizer.beta2 < 1.0) ||
      !(optimizer.epsilon > 0.0))
    throw Error(ErrorCode::InvalidArgument, "optimizer requires beta in [0, 1) and epsilon > 0");
  if (!(bin_step_scale >= 0.0)) throw Error(ErrorCode::InvalidArgument, "bin_step_scale must be >= 0");
}

double sigmoid(double x) noexcept {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double logit(double p) noexcept { return std::log(p / (1.0 - p)); }

FitParams init_params(const ImageBuffer& source, int n_planes, std::uint64_t seed) {
  if (source.channels() != 3) throw Error(ErrorCode::InvalidArgument, "source image must have 3 channels");
  if (n_planes < 1) throw Error(ErrorCode::InvalidArgument, "n_planes must be >= 1");
  ImageBuffer color(source.width(), source.height(), 3);
  for (std::size_t i = 0; i < source.size(); ++i)
    color[i] = logit(std::clamp(source[i], kColorClamp, 1.0 - kColorClamp));
  FitParams p;
  GaussianStream noise(seed);
  const double base = logit(std::clamp(1.0 / n_planes, kColorClamp, 1.0 - kColorClamp));
  for (int i = 0; i < n_planes; ++i) {
    p.color_logits.push_back(color);
    ImageBuffer alpha(source.width(), source.height(), 1);
    for (double& a : alpha.data()) a = base + kInitAlphaNoise * noise.next();
    p.alpha_logits.push_back(std::move(alpha));
  }
  p.bin_logits.assign(n_planes, 0.0);
  return p;
}

MultiplaneImage decode(const FitParams& params, const DepthRange& range, const CameraIntrinsics& intrinsics) {
  return decode(params, range, intrinsics, plane_positions(normalize_bin_widths(params.bin_logits), range));
}

MultiplaneImage decode(const FitParams& params, const DepthRange& range, const CameraIntrinsics& intrinsics,
                       std::span<const double> depths) {
  if (depths.size() != params.color_logits.size() || params.alpha_logits.size() != params.color_logits.size())
    throw Error(ErrorCode::ShapeMismatch, "parameter blocks disagree on plane count");
  MultiplaneImage m;
  m.intrinsics = intrinsics;
  m.depth_range = range;
  for (std::size_t i = 0; i < depths.size(); ++i) {
    Plane plane{ImageBuffer(params.width(), params.height(), 3), ImageBuffer(params.width(), params.height(), 1),
                depths[i]};
    const auto& cl = params.color_logits[i];
    const auto& al = params.alpha_logits[i];
    for (std::size_t k = 0; k < cl.size(); ++k) plane.color[k] = sigmoid(cl[k]);
    for (std::size_t k = 0; k < al.size(); ++k) plane.alpha[k] = sigmoid(al[k]);
    m.planes.push_back(std::move(plane));
  }
  m.validate();
  return m;
}

FitResult fit(const ImageBuffer& source, const CameraIntrinsics& source_intrinsics,
              const std::vector<PosedView>& targets, const std::optional<DepthSampleSet>& gt_depth,
              const FitConfig& cfg) {
  cfg.validate();
  source_intrinsics.validate();
  if (targets.empty()) throw Error(ErrorCode::InvalidArgument, "at least one target view required");
  if (cfg.use_gt_depth && (!gt_depth || gt_depth->values.empty()))
    throw Error(ErrorCode::InvalidArgument, "use_gt_depth requires ground-truth depth samples");
  for (const auto& t : targets) {
    if (t.image.channels() != 3) throw Error(ErrorCode::InvalidArgument, "target images must have 3 channels");
    t.pose.validate();
    t.intrinsics.validate();
  }
  const bool use_ada = cfg.use_gt_depth && cfg.lambda_ada > 0.0;
  std::optional<DepthSampleSet> gt;
  if (use_ada) {
    gt = gt_depth;
    gt->clip(cfg.depth_range);
  }

  FitResult result;
  FitParams params;
  int iter = 0;
  for (std::size_t s = 0; s < cfg.stages.size(); ++s) {
    const FitStage& stage = cfg.stages[s];
    const ImageBuffer stage_source = downscale(source, stage.scale_divisor);
    const int sw = stage_source.width();
    const int sh = stage_source.height();
    if (s == 0) {
      params = init_params(stage_source, cfg.n_planes, cfg.seed);
    } else {
      params = upsample_params(params, sw, sh);
    }
    const CameraIntrinsics k_src = rescale_to(source_intrinsics, source.width(), source.height(), sw, sh);
    std::vector<StageView> views;
    for (const auto& t : targets) {
      ImageBuffer img = downscale(t.image, stage.scale_divisor);
      const CameraIntrinsics k =
          rescale_to(t.intrinsics, t.image.width(), t.image.height(), img.width(), img.height());
      views.push_back({std::move(img), t.pose, k});
    }

    AdamState adam(params);
    for (int it = 0; it < stage.iterations; ++it, ++iter) {
      const MultiplaneImage mpi = decode_for(params, cfg, k_src);
      GradientBundle grads = GradientBundle::zeros_like(mpi);
      double l_syn = 0.0;
      double psnr_sum = 0.0;
      for (const auto& view : views) {
        double view_loss = 0.0;
        auto [image, g] = render_with_adjoint(
            mpi, view.pose, view.intrinsics, view.image.width(), view.image.height(),
            [&](const ImageBuffer& rendered) {
              ImageLoss loss = synthesis_loss(rendered, view.image);
              view_loss = loss.value;
              return std::move(loss.gradient);
            },
            RenderOptions{cfg.border});
        l_syn += view_loss;
        psnr_sum += psnr(image, view.image);
        for (std::size_t i = 0; i < mpi.size(); ++i) {
          auto dc = grads.d_color[i].data();
          auto gc = g.d_color[i].data();
          for (std::size_t k = 0; k < dc.size(); ++k) dc[k] += gc[k];
          auto da = grads.d_alpha[i].data();
          auto ga = g.d_alpha[i].data();
          for (std::size_t k = 0; k < da.size(); ++k) da[k] += ga[k];
          grads.d_depth[i] += g.d_depth[i];
        }
      }
      double l_ada = 0.0;
      if (use_ada) {
        const auto chamfer = adaptive_bins_loss(mpi.depths(), *gt);
        l_ada = chamfer.value;
        for (std::size_t i = 0; i < mpi.size(); ++i) grads.d_depth[i] += cfg.lambda_ada * chamfer.gradient[i];
      }
      const LossReport report = total_loss(l_ada, l_syn, cfg.lambda_ada);
      result.trace.records.push_back({iter, static_cast<int>(s), report.l_ada, report.l_syn, report.total,
                                      psnr_sum / static_cast<double>(views.size())});
      if (!std::isfinite(report.total))
        throw DivergenceError("total loss is not finite at iteration " + std::to_string(iter), result.trace);

      ++adam.t;
      const double bias1 = 1.0 - std::pow(cfg.optimizer.beta1, adam.t);
      const double bias2 = 1.0 - std::pow(cfg.optimizer.beta2, adam.t);
      if (!cfg.freeze_appearance) {
        for (std::size_t i = 0; i < mpi.size(); ++i) {
          ImageBuffer& gc = grads.d_color[i];
          const ImageBuffer& c = mpi.planes[i].color;
          for (std::size_t k = 0; k < gc.size(); ++k) gc[k] *= c[k] * (1.0 - c[k]);
          ImageBuffer& ga = grads.d_alpha[i];
          const ImageBuffer& a = mpi.planes[i].alpha;
          for (std::size_t k = 0; k < ga.size(); ++k) ga[k] *= a[k] * (1.0 - a[k]);
          adam.color[i].step(params.color_logits[i].data(), gc.data(), stage.step_size, cfg.optimizer, bias1, bias2);
          adam.alpha[i].step(params.alpha_logits[i].data(), ga.data(), stage.step_size, cfg.optimizer, bias1, bias2);
        }
      }
      if (cfg.bins == BinStrategy::Adaptive) {
        const BinWidths widths = normalize_bin_widths(params.bin_logits);
        const auto d_widths = positions_backward(grads.d_depth, cfg.depth_range);
        const auto d_logits = softmax_backward(widths.values(), d_widths);
        adam.bins.step(params.bin_logits, d_logits, stage.step_size * cfg.bin_step_scale, cfg.optimizer, bias1,
                       bias2);
      }
    }
  }
  result.mpi = decode_for(params, cfg, source_intrinsics);
  return result;
}

int crop_margin(int extent, double crop_fraction) {
  return static_cast<int>(std::floor(crop_fraction * extent + 1e-9));
}

ViewScore score_view(const ImageBuffer& rendered, const ImageBuffer& gt, double crop_fraction) {
  if (!(crop_fraction >= 0.0 && crop_fraction < 0.25))
    throw Error(ErrorCode::InvalidArgument, "crop fraction must be in [0, 0.25)");
  if (!rendered.same_shape(gt)) throw Error(ErrorCode::ShapeMismatch, "render and ground truth differ in shape");
  const int mx = crop_margin(gt.width(), crop_fraction);
  const int my = crop_margin(gt.height(), crop_fraction);
  const int w = gt.width() - 2 * mx;
  const int h = gt.height() - 2 * my;
  const ImageBuffer a = crop(rendered, mx, my, w, h);
  const ImageBuffer b = crop(gt, mx, my, w, h);
  return {psnr(a, b), ssim(a, b).value, w, h};
}

HeldoutReport evaluate_heldout(const MultiplaneImage& m, const std::vector<PosedView>& heldout, double crop_fraction,
                               const RenderOptions& options) {
  HeldoutReport report;
  for (const auto& view : heldout) {
    const ImageBuffer rendered =
        render(m, view.pose, view.intrinsics, view.image.width(), view.image.height(), options);
    report.views.push_back(score_view(rendered, view.image, crop_fraction));
  }
  if (!report.views.empty()) {
    for (const auto& v : report.views) {
      report.mean_psnr += v.psnr;
      report.mean_ssim += v.ssim;
    }
    report.mean_psnr /= static_cast<double>(report.views.size());
    report.mean_ssim /= static_cast<double>(report.views.size());
  }
  return report;
}

}  // namespace ampi
