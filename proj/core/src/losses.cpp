#include "ampi/losses.hpp"

#include <algorithm>
#include <cmath>

#include "ampi/error.hpp"

namespace ampi {

namespace {

constexpr double kSsimSigma = 1.5;
constexpr double kC1 = 0.01 * 0.01;
constexpr double kC2 = 0.03 * 0.03;

void require_same_shape(const ImageBuffer& a, const ImageBuffer& b) {
  if (!a.same_shape(b)) throw Error(ErrorCode::ShapeMismatch, "images differ in shape");
}

using Taps = std::array<double, kSsimWindow>;

Taps gaussian_taps() {
  Taps g{};
  double sum = 0.0;
  for (int i = 0; i < kSsimWindow; ++i) {
    const double d = i - kSsimWindow / 2;
    g[i] = std::exp(-d * d / (2.0 * kSsimSigma * kSsimSigma));
    sum += g[i];
  }
  for (double& v : g) v /= sum;
  return g;
}

// Valid-mode separable Gaussian filter of a single-channel w x h plane into
// an (w - 10) x (h - 10) map. `rows` is scratch space.
void filter_valid(const std::vector<double>& in, int w, int h, const Taps& g, std::vector<double>& rows,
                  std::vector<double>& out) {
  const int ow = w - kSsimWindow + 1;
  const int oh = h - kSsimWindow + 1;
  rows.resize(static_cast<std::size_t>(ow) * h);
  for (int y = 0; y < h; ++y) {
    const double* src = &in[static_cast<std::size_t>(y) * w];
    double* dst = &rows[static_cast<std::size_t>(y) * ow];
    for (int x = 0; x < ow; ++x) {
      double acc = 0.0;
      for (int k = 0; k < kSsimWindow; ++k) acc += g[k] * src[x + k];
      dst[x] = acc;
    }
  }
  out.assign(static_cast<std::size_t>(ow) * oh, 0.0);
  for (int y = 0; y < oh; ++y) {
    double* dst = &out[static_cast<std::size_t>(y) * ow];
    for (int k = 0; k < kSsimWindow; ++k) {
      const double* src = &rows[static_cast<std::size_t>(y + k) * ow];
      const double gk = g[k];
      for (int x = 0; x < ow; ++x) dst[x] += gk * src[x];
    }
  }
}

// Adjoint of filter_valid: scatters an (w - 10) x (h - 10) map onto w x h.
void filter_valid_adjoint(const std::vector<double>& in, int w, int h, const Taps& g, std::vector<double>& rows,
                          std::vector<double>& out) {
  const int ow = w - kSsimWindow + 1;
  const int oh = h - kSsimWindow + 1;
  rows.assign(static_cast<std::size_t>(ow) * h, 0.0);
  for (int y = 0; y < oh; ++y) {
    const double* src = &in[static_cast<std::size_t>(y) * ow];
    for (int k = 0; k < kSsimWindow; ++k) {
      double* dst = &rows[static_cast<std::size_t>(y + k) * ow];
      const double gk = g[k];
      for (int x = 0; x < ow; ++x) dst[x] += gk * src[x];
    }
  }
  out.assign(static_cast<std::size_t>(w) * h, 0.0);
  for (int y = 0; y < h; ++y) {
    const double* src = &rows[static_cast<std::size_t>(y) * ow];
    double* dst = &out[static_cast<std::size_t>(y) * w];
    for (int x = 0; x < ow; ++x) {
      const double v = src[x];
      for (int k = 0; k < kSsimWindow; ++k) dst[x + k] += g[k] * v;
    }
  }
}

}  // namespace

double pairwise_sum(std::span<const double> values) {
  if (values.size() <= 8) {
    double acc = 0.0;
    for (double v : values) acc += v;
    return acc;
  }
  const std::size_t half = values.size() / 2;
  return pairwise_sum(values.first(half)) + pairwise_sum(values.subspan(half));
}

void DepthSampleSet::clip(const DepthRange& range) {
  for (double& v : values) v = std::clamp(v, range.d_near, range.d_far);
}

ScalarWithGradient adaptive_bins_loss(std::span<const double> positions, const DepthSampleSet& gt) {
  if (gt.values.empty()) throw Error(ErrorCode::EmptyGroundTruth, "ground-truth depth set is empty");
  if (positions.empty()) throw Error(ErrorCode::InvalidArgument, "at least one plane position required");
  ScalarWithGradient out;
  out.gradient.assign(positions.size(), 0.0);
  std::vector<double> terms;
  terms.reserve(gt.values.size() + positions.size());

  // Ground truth -> nearest plane.
  for (double x : gt.values) {
    std::size_t best = 0;
    double best_d2 = (x - positions[0]) * (x - positions[0]);
    for (std::size_t j = 1; j < positions.size(); ++j) {
      const double d2 = (x - positions[j]) * (x - positions[j]);
      if (d2 < best_d2) {
        best_d2 = d2;
        best = j;
      }
    }
    terms.push_back(best_d2);
    out.gradient[best] += 2.0 * (positions[best] - x);
  }
  // Plane -> nearest ground truth.
  for (std::size_t j = 0; j < positions.size(); ++j) {
    const double y = positions[j];
    double best_x = gt.values[0];
    double best_d2 = (y - best_x) * (y - best_x);
    for (std::size_t k = 1; k < gt.values.size(); ++k) {
      const double d2 = (y - gt.values[k]) * (y - gt.values[k]);
      if (d2 < best_d2) {
        best_d2 = d2;
        best_x = gt.values[k];
      }
    }
    terms.push_back(best_d2);
    out.gradient[j] += 2.0 * (y - best_x);
  }
  out.value = pairwise_sum(terms);
  return out;
}

ImageLoss ssim(const ImageBuffer& a, const ImageBuffer& b) {
  require_same_shape(a, b);
  const int w = a.width();
  const int h = a.height();
  if (w < kSsimWindow || h < kSsimWindow) throw Error(ErrorCode::ImageTooSmall, "SSIM needs at least 11x11 pixels");
  const auto g = gaussian_taps();
  const int ow = w - kSsimWindow + 1;
  const int oh = h - kSsimWindow + 1;
  const std::size_t n_valid = static_cast<std::size_t>(ow) * oh;
  const double norm = 1.0 / (static_cast<double>(n_valid) * a.channels());

  ImageLoss out{0.0, ImageBuffer(w, h, a.channels())};
  std::vector<double> per_channel;
  const std::size_t n_px = static_cast<std::size_t>(w) * h;
  std::vector<double> pa(n_px), pb(n_px), aa(n_px), bb(n_px), ab(n_px), rows;
  std::vector<double> mu_a, mu_b, e_aa, e_bb, e_ab;
  std::vector<double> s_map(n_valid), coef_mu(n_valid), coef_aa(n_valid), coef_ab(n_valid);
  std::vector<double> g_mu, g_aa, g_ab;
  for (int c = 0; c < a.channels(); ++c) {
    for (std::size_t i = 0; i < n_px; ++i) {
      pa[i] = a[i * a.channels() + c];
      pb[i] = b[i * b.channels() + c];
      aa[i] = pa[i] * pa[i];
      bb[i] = pb[i] * pb[i];
      ab[i] = pa[i] * pb[i];
    }
    filter_valid(pa, w, h, g, rows, mu_a);
    filter_valid(pb, w, h, g, rows, mu_b);
    filter_valid(aa, w, h, g, rows, e_aa);
    filter_valid(bb, w, h, g, rows, e_bb);
    filter_valid(ab, w, h, g, rows, e_ab);

    for (std::size_t i = 0; i < n_valid; ++i) {
      const double ma = mu_a[i];
      const double mb = mu_b[i];
      const double var_a = e_aa[i] - ma * ma;
      const double var_b = e_bb[i] - mb * mb;
      const double cov = e_ab[i] - ma * mb;
      const double a1 = 2.0 * ma * mb + kC1;
      const double a2 = 2.0 * cov + kC2;
      const double b1 = ma * ma + mb * mb + kC1;
      const double b2 = var_a + var_b + kC2;
      const double s = (a1 * a2) / (b1 * b2);
      s_map[i] = s;
      // Partials with (mu, var, cov) independent, then re-expressed in
      // (mu_a, E[a^2], E[ab]).
      const double ds_dmu = 2.0 * mb * a2 / (b1 * b2) - s * 2.0 * ma / b1;
      const double ds_dvar = -s / b2;
      const double ds_dcov = 2.0 * a1 / (b1 * b2);
      coef_mu[i] = norm * (ds_dmu - 2.0 * ma * ds_dvar - mb * ds_dcov);
      coef_aa[i] = norm * ds_dvar;
      coef_ab[i] = norm * ds_dcov;
    }
    per_channel.push_back(pairwise_sum(s_map));

    filter_valid_adjoint(coef_mu, w, h, g, rows, g_mu);
    filter_valid_adjoint(coef_aa, w, h, g, rows, g_aa);
    filter_valid_adjoint(coef_ab, w, h, g, rows, g_ab);
    for (std::size_t i = 0; i < n_px; ++i)
      out.gradient[i * a.channels() + c] = g_mu[i] + 2.0 * pa[i] * g_aa[i] + pb[i] * g_ab[i];
  }
  out.value = pairwise_sum(per_channel) * norm;
  return out;
}

ImageLoss synthesis_loss(const ImageBuffer& pred, const ImageBuffer& gt) {
  require_same_shape(pred, gt);
  const double inv_n = 1.0 / static_cast<double>(pred.size());
  std::vector<double> abs_err(pred.size());
  ImageLoss structural = ssim(pred, gt);
  ImageLoss out{0.0, ImageBuffer(pred.width(), pred.height(), pred.channels())};
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double d = pred[i] - gt[i];
    abs_err[i] = std::abs(d);
    const double sign = d > 0.0 ? 1.0 : (d < 0.0 ? -1.0 : 0.0);
    out.gradient[i] = sign * inv_n - structural.gradient[i];
  }
  out.value = pairwise_sum(abs_err) * inv_n - structural.value;
  return out;
}

LossReport total_loss(double l_ada, double l_syn, double lambda_ada) {
  if (!(lambda_ada >= 0.0)) throw Error(ErrorCode::InvalidArgument, "lambda_ada must be >= 0");
  return {l_ada, l_syn, lambda_ada * l_ada + l_syn, lambda_ada};
}

double psnr(const ImageBuffer& a, const ImageBuffer& b) {
  require_same_shape(a, b);
  std::vector<double> sq(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) sq[i] = (a[i] - b[i]) * (a[i] - b[i]);
  const double mse = pairwise_sum(sq) / static_cast<double>(a.size());
  if (mse < 1e-12) return kPsnrSentinel;
  return 10.0 * std::log10(1.0 / mse);
}

}  // namespace ampi
