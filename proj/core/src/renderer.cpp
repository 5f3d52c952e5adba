#include "ampi/renderer.hpp"

#include <cmath>
#include <memory>

#include <Eigen/LU>

#include "ampi/error.hpp"

namespace ampi {

namespace {

constexpr double kInfinityTol = 1e-12;

// Bilinear footprint resolved against the border policy. Taps with zero
// weight are kept so that spatial derivatives see all four neighbors.
struct Footprint {
  std::array<long, 4> index{};  // pixel index, -1 for zero-padded taps
  std::array<double, 4> weight{};
  double fx = 0.0;
  double fy = 0.0;
};

Footprint footprint(double x, double y, int w, int h, BorderPolicy border) {
  const auto taps = BilinearTaps::at(x, y);
  Footprint f;
  f.fx = taps.fx;
  f.fy = taps.fy;
  const int xs[4] = {taps.x0, taps.x0 + 1, taps.x0, taps.x0 + 1};
  const int ys[4] = {taps.y0, taps.y0, taps.y0 + 1, taps.y0 + 1};
  f.weight = {(1.0 - taps.fx) * (1.0 - taps.fy), taps.fx * (1.0 - taps.fy), (1.0 - taps.fx) * taps.fy,
              taps.fx * taps.fy};
  for (int k = 0; k < 4; ++k) {
    int xi = xs[k];
    int yi = ys[k];
    if (xi < 0 || yi < 0 || xi >= w || yi >= h) {
      if (border == BorderPolicy::ZeroPad) {
        f.index[k] = -1;
        continue;
      }
      xi = xi < 0 ? 0 : (xi >= w ? w - 1 : xi);
      yi = yi < 0 ? 0 : (yi >= h ? h - 1 : yi);
    }
    f.index[k] = static_cast<long>(yi) * w + xi;
  }
  return f;
}

// Source coordinates of every target pixel for one homography.
struct SampleGrid {
  std::vector<double> x;
  std::vector<double> y;
  std::vector<double> w;  // homogeneous third component, kept for the adjoint
};

SampleGrid sample_grid(const Homography& h, int tw, int th) {
  SampleGrid g;
  const std::size_t n = static_cast<std::size_t>(tw) * th;
  g.x.resize(n);
  g.y.resize(n);
  g.w.resize(n);
  const auto& m = h.H;
  for (int v = 0; v < th; ++v) {
    for (int u = 0; u < tw; ++u) {
      const double qx = m(0, 0) * u + m(0, 1) * v + m(0, 2);
      const double qy = m(1, 0) * u + m(1, 1) * v + m(1, 2);
      const double qw = m(2, 0) * u + m(2, 1) * v + m(2, 2);
      if (std::abs(qw) <= kInfinityTol) throw Error(ErrorCode::PointAtInfinity, "target pixel maps to infinity");
      const std::size_t i = static_cast<std::size_t>(v) * tw + u;
      if (qw == 1.0) {
        g.x[i] = qx;
        g.y[i] = qy;
      } else {
        g.x[i] = qx / qw;
        g.y[i] = qy / qw;
      }
      g.w[i] = qw;
    }
  }
  return g;
}

// True when all four taps of the cell at (x0, y0) are inside a w x h image.
inline bool interior(int x0, int y0, int w, int h) noexcept {
  return x0 >= 0 && y0 >= 0 && x0 + 1 < w && y0 + 1 < h;
}

WarpedPlane warp_with_grid(const ImageBuffer& color, const ImageBuffer& alpha, const SampleGrid& g, int tw, int th,
                           BorderPolicy border) {
  WarpedPlane out{ImageBuffer(tw, th, 3), ImageBuffer(tw, th, 1)};
  const int sw = color.width();
  const int sh = color.height();
  const double* src_c = color.data().data();
  const double* src_a = alpha.data().data();
  double* dst_c = out.color.data().data();
  double* dst_a = out.alpha.data().data();
  const std::size_t n = g.x.size();
  for (std::size_t i = 0; i < n; ++i) {
    const auto taps = BilinearTaps::at(g.x[i], g.y[i]);
    double r = 0.0, gg = 0.0, b = 0.0, a = 0.0;
    if (interior(taps.x0, taps.y0, sw, sh)) {
      const long i00 = static_cast<long>(taps.y0) * sw + taps.x0;
      const long i01 = i00 + sw;
      const double w00 = (1.0 - taps.fx) * (1.0 - taps.fy);
      const double w10 = taps.fx * (1.0 - taps.fy);
      const double w01 = (1.0 - taps.fx) * taps.fy;
      const double w11 = taps.fx * taps.fy;
      const double* c00 = src_c + i00 * 3;
      const double* c01 = src_c + i01 * 3;
      r = w00 * c00[0] + w10 * c00[3] + w01 * c01[0] + w11 * c01[3];
      gg = w00 * c00[1] + w10 * c00[4] + w01 * c01[1] + w11 * c01[4];
      b = w00 * c00[2] + w10 * c00[5] + w01 * c01[2] + w11 * c01[5];
      a = w00 * src_a[i00] + w10 * src_a[i00 + 1] + w01 * src_a[i01] + w11 * src_a[i01 + 1];
    } else {
      const Footprint f = footprint(g.x[i], g.y[i], sw, sh, border);
      for (int k = 0; k < 4; ++k) {
        if (f.index[k] < 0) continue;
        const double wk = f.weight[k];
        const double* c = src_c + f.index[k] * 3;
        r += wk * c[0];
        gg += wk * c[1];
        b += wk * c[2];
        a += wk * src_a[f.index[k]];
      }
    }
    dst_c[i * 3] = r;
    dst_c[i * 3 + 1] = gg;
    dst_c[i * 3 + 2] = b;
    dst_a[i] = a;
  }
  return out;
}

struct PlaneWarp {
  Homography h;
  Eigen::Matrix3d dh_ddepth;
  SampleGrid grid;
};

std::vector<PlaneWarp> plane_warps(const MultiplaneImage& m, const RigidPose& pose, const CameraIntrinsics& k_tgt,
                                   int tw, int th) {
  std::vector<PlaneWarp> warps;
  warps.reserve(m.size());
  for (const auto& plane : m.planes) {
    PlaneWarp pw;
    pw.h = homography_source_from_target(m.intrinsics, k_tgt, pose, plane.depth);
    pw.dh_ddepth = homography_depth_derivative(m.intrinsics, k_tgt, pose, plane.depth);
    pw.grid = sample_grid(pw.h, tw, th);
    warps.push_back(std::move(pw));
  }
  return warps;
}

void check_target(int tw, int th) {
  if (tw < 1 || th < 1) throw Error(ErrorCode::InvalidArgument, "target size must be >= 1x1");
}

// Scatters the adjoints d = (r, g, b, alpha) of one warped sample back onto
// the source plane and returns d(loss)/d(x), d(loss)/d(y) of the sample point.
inline Eigen::Vector2d scatter_sample(const double* src_c, const double* src_a, double* dc, double* da, int sw, int sh,
                                      double x, double y, const double* d, BorderPolicy border) {
  const auto taps = BilinearTaps::at(x, y);
  const double fx = taps.fx;
  const double fy = taps.fy;
  const double w00 = (1.0 - fx) * (1.0 - fy);
  const double w10 = fx * (1.0 - fy);
  const double w01 = (1.0 - fx) * fy;
  const double w11 = fx * fy;
  // Neighbor values per channel for taps 00, 10, 01, 11.
  double v00[4], v10[4], v01[4], v11[4];
  if (interior(taps.x0, taps.y0, sw, sh)) {
    const long i00 = static_cast<long>(taps.y0) * sw + taps.x0;
    const long i10 = i00 + 1;
    const long i01 = i00 + sw;
    const long i11 = i01 + 1;
    for (int ch = 0; ch < 3; ++ch) {
      v00[ch] = src_c[i00 * 3 + ch];
      v10[ch] = src_c[i10 * 3 + ch];
      v01[ch] = src_c[i01 * 3 + ch];
      v11[ch] = src_c[i11 * 3 + ch];
      dc[i00 * 3 + ch] += w00 * d[ch];
      dc[i10 * 3 + ch] += w10 * d[ch];
      dc[i01 * 3 + ch] += w01 * d[ch];
      dc[i11 * 3 + ch] += w11 * d[ch];
    }
    v00[3] = src_a[i00];
    v10[3] = src_a[i10];
    v01[3] = src_a[i01];
    v11[3] = src_a[i11];
    da[i00] += w00 * d[3];
    da[i10] += w10 * d[3];
    da[i01] += w01 * d[3];
    da[i11] += w11 * d[3];
  } else {
    const Footprint f = footprint(x, y, sw, sh, border);
    double* vals[4] = {v00, v10, v01, v11};
    for (int k = 0; k < 4; ++k) {
      double* v = vals[k];
      if (f.index[k] < 0) {
        v[0] = v[1] = v[2] = v[3] = 0.0;
        continue;
      }
      const long idx = f.index[k];
      for (int ch = 0; ch < 3; ++ch) {
        v[ch] = src_c[idx * 3 + ch];
        dc[idx * 3 + ch] += f.weight[k] * d[ch];
      }
      v[3] = src_a[idx];
      da[idx] += f.weight[k] * d[3];
    }
  }
  double d_x = 0.0;
  double d_y = 0.0;
  for (int ch = 0; ch < 4; ++ch) {
    d_x += d[ch] * ((1.0 - fy) * (v10[ch] - v00[ch]) + fy * (v11[ch] - v01[ch]));
    d_y += d[ch] * ((1.0 - fx) * (v01[ch] - v00[ch]) + fx * (v11[ch] - v10[ch]));
  }
  return {d_x, d_y};
}

GradientBundle backward_from_stack(const MultiplaneImage& m, const std::vector<PlaneWarp>& warps,
                                   const WarpedPlaneStack& stack, const ImageBuffer& d_output,
                                   BorderPolicy border) {
  const int tw = d_output.width();
  const int th = d_output.height();
  const std::size_t n_px = static_cast<std::size_t>(tw) * th;
  const std::size_t n_planes = m.size();
  GradientBundle grads = GradientBundle::zeros_like(m);

  // Adjoints of the warped colors/alphas, laid out [plane][pixel][r, g, b, a].
  // Every entry is written below, so the buffer is left uninitialized.
  std::unique_ptr<double[]> d_warped(new double[n_planes * n_px * 4]);
  std::vector<double> transmittance(n_planes);
  for (std::size_t px = 0; px < n_px; ++px) {
    const double* g = &d_output[px * 3];
    double t = 1.0;
    for (std::size_t i = 0; i < n_planes; ++i) {
      transmittance[i] = t;
      t *= 1.0 - stack.planes[i].alpha[px];
    }
    // `behind` is the adjoint-weighted radiance arriving from the planes
    // behind plane i, measured just behind it.
    double behind = 0.0;
    for (std::size_t i = n_planes; i-- > 0;) {
      const double* c = &stack.planes[i].color[px * 3];
      const double a = stack.planes[i].alpha[px];
      const double gc = g[0] * c[0] + g[1] * c[1] + g[2] * c[2];
      const double wgt = a * transmittance[i];
      double* d = &d_warped[(i * n_px + px) * 4];
      d[0] = g[0] * wgt;
      d[1] = g[1] * wgt;
      d[2] = g[2] * wgt;
      d[3] = transmittance[i] * (gc - behind);
      behind = gc * a + (1.0 - a) * behind;
    }
  }

  const int sw = m.width();
  const int sh = m.height();
  for (std::size_t i = 0; i < n_planes; ++i) {
    const double* src_c = m.planes[i].color.data().data();
    const double* src_a = m.planes[i].alpha.data().data();
    double* dc = grads.d_color[i].data().data();
    double* da = grads.d_alpha[i].data().data();
    const auto& grid = warps[i].grid;
    const auto& dh = warps[i].dh_ddepth;
    double d_depth = 0.0;
    for (int v = 0; v < th; ++v) {
      for (int u = 0; u < tw; ++u) {
        const std::size_t px = static_cast<std::size_t>(v) * tw + u;
        const double* d = &d_warped[(i * n_px + px) * 4];
        if (d[0] == 0.0 && d[1] == 0.0 && d[2] == 0.0 && d[3] == 0.0) continue;
        const Eigen::Vector2d d_xy =
            scatter_sample(src_c, src_a, dc, da, sw, sh, grid.x[px], grid.y[px], d, border);
        // Quotient rule through x = q_x / q_w, y = q_y / q_w.
        const double dqx = dh(0, 0) * u + dh(0, 1) * v + dh(0, 2);
        const double dqy = dh(1, 0) * u + dh(1, 1) * v + dh(1, 2);
        const double dqw = dh(2, 0) * u + dh(2, 1) * v + dh(2, 2);
        d_depth += (d_xy.x() * (dqx - grid.x[px] * dqw) + d_xy.y() * (dqy - grid.y[px] * dqw)) / grid.w[px];
      }
    }
    grads.d_depth[i] = d_depth;
  }
  grads.d_bin_logits = bin_logit_gradient(m, grads.d_depth);
  return grads;
}

WarpedPlaneStack stack_from_warps(const MultiplaneImage& m, const std::vector<PlaneWarp>& warps, int tw, int th,
                                  BorderPolicy border) {
  WarpedPlaneStack stack;
  stack.planes.reserve(m.size());
  for (std::size_t i = 0; i < m.size(); ++i) {
    stack.planes.push_back(warp_with_grid(m.planes[i].color, m.planes[i].alpha, warps[i].grid, tw, th, border));
    stack.depths.push_back(m.planes[i].depth);
  }
  return stack;
}

}  // namespace

GradientBundle GradientBundle::zeros_like(const MultiplaneImage& m) {
  GradientBundle g;
  for (const auto& p : m.planes) {
    g.d_color.emplace_back(p.color.width(), p.color.height(), 3);
    g.d_alpha.emplace_back(p.alpha.width(), p.alpha.height(), 1);
  }
  g.d_depth.assign(m.size(), 0.0);
  g.d_bin_logits.assign(m.size(), 0.0);
  return g;
}

WarpedPlane warp_plane(const ImageBuffer& color, const ImageBuffer& alpha, const Homography& h, int target_width,
                       int target_height, BorderPolicy border) {
  check_target(target_width, target_height);
  if (color.channels() != 3 || alpha.channels() != 1 || color.width() != alpha.width() ||
      color.height() != alpha.height())
    throw Error(ErrorCode::ShapeMismatch, "warp_plane expects matching 3ch color and 1ch alpha");
  if (std::abs(h.H.determinant()) <= 1e-12) throw Error(ErrorCode::SingularHomography, "homography is singular");
  return warp_with_grid(color, alpha, sample_grid(h, target_width, target_height), target_width, target_height,
                        border);
}

ImageBuffer composite(const WarpedPlaneStack& stack) {
  if (stack.planes.empty()) throw Error(ErrorCode::InvalidArgument, "cannot composite an empty stack");
  const int w = stack.planes.front().color.width();
  const int h = stack.planes.front().color.height();
  for (const auto& p : stack.planes)
    if (p.color.width() != w || p.color.height() != h || p.alpha.width() != w || p.alpha.height() != h)
      throw Error(ErrorCode::ShapeMismatch, "warped planes must share the target resolution");
  ImageBuffer out(w, h, 3);
  const std::size_t n_px = static_cast<std::size_t>(w) * h;
  for (std::size_t px = 0; px < n_px; ++px) {
    double t = 1.0;
    double r = 0.0, g = 0.0, b = 0.0;
    for (const auto& p : stack.planes) {
      const double a = p.alpha[px];
      const double wgt = a * t;
      r += p.color[px * 3] * wgt;
      g += p.color[px * 3 + 1] * wgt;
      b += p.color[px * 3 + 2] * wgt;
      t *= 1.0 - a;
    }
    out[px * 3] = r;
    out[px * 3 + 1] = g;
    out[px * 3 + 2] = b;
  }
  return out;
}

WarpedPlaneStack warp_stack(const MultiplaneImage& m, const RigidPose& pose, const CameraIntrinsics& k_tgt,
                            int target_width, int target_height, const RenderOptions& options) {
  check_target(target_width, target_height);
  m.validate();
  return stack_from_warps(m, plane_warps(m, pose, k_tgt, target_width, target_height), target_width,
                          target_height, options.border);
}

ImageBuffer render(const MultiplaneImage& m, const RigidPose& pose, const CameraIntrinsics& k_tgt, int target_width,
                   int target_height, const RenderOptions& options) {
  return composite(warp_stack(m, pose, k_tgt, target_width, target_height, options));
}

GradientBundle render_backward(const MultiplaneImage& m, const RigidPose& pose, const CameraIntrinsics& k_tgt,
                               const ImageBuffer& d_output, const RenderOptions& options) {
  if (d_output.channels() != 3) throw Error(ErrorCode::ShapeMismatch, "output adjoint must have 3 channels");
  m.validate();
  const int tw = d_output.width();
  const int th = d_output.height();
  const auto warps = plane_warps(m, pose, k_tgt, tw, th);
  const auto stack = stack_from_warps(m, warps, tw, th, options.border);
  return backward_from_stack(m, warps, stack, d_output, options.border);
}

std::pair<ImageBuffer, GradientBundle> render_with_adjoint(
    const MultiplaneImage& m, const RigidPose& pose, const CameraIntrinsics& k_tgt, int target_width,
    int target_height, const std::function<ImageBuffer(const ImageBuffer&)>& output_adjoint,
    const RenderOptions& options) {
  check_target(target_width, target_height);
  m.validate();
  const auto warps = plane_warps(m, pose, k_tgt, target_width, target_height);
  const auto stack = stack_from_warps(m, warps, target_width, target_height, options.border);
  ImageBuffer image = composite(stack);
  const ImageBuffer d_output = output_adjoint(image);
  if (!d_output.same_shape(image)) throw Error(ErrorCode::ShapeMismatch, "output adjoint shape mismatch");
  auto grads = backward_from_stack(m, warps, stack, d_output, options.border);
  return {std::move(image), std::move(grads)};
}

std::vector<double> bin_logit_gradient(const MultiplaneImage& m, std::span<const double> d_depth) {
  const auto depths = m.depths();
  const auto widths = widths_from_positions(depths, m.depth_range);
  double sum = 0.0;
  for (double w : widths) {
    if (!(w > 0.0)) return std::vector<double>(depths.size(), 0.0);
    sum += w;
  }
  if (std::abs(sum - 1.0) > 1e-6) return std::vector<double>(depths.size(), 0.0);
  return softmax_backward(widths, positions_backward(d_depth, m.depth_range));
}

}  // namespace ampi
