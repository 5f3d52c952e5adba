#include "ampi/mpi.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <utility>

#include "ampi/error.hpp"

namespace ampi {

void DepthRange::validate() const {
  if (!(d_near > 0.0)) throw Error(ErrorCode::NonPositiveNear, "d_near must be > 0");
  if (!(d_far > d_near) || !std::isfinite(d_far))
    throw Error(ErrorCode::InvalidArgument, "depth range requires d_near < d_far < inf");
}

BinWidths::BinWidths(std::vector<double> widths) : widths_(std::move(widths)) {
  if (widths_.empty()) throw Error(ErrorCode::InvalidArgument, "at least one bin required");
  double sum = 0.0;
  for (double w : widths_) {
    if (!(w > 0.0)) throw Error(ErrorCode::InvalidArgument, "bin widths must be positive");
    sum += w;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw Error(ErrorCode::InvalidArgument, "bin widths must sum to 1");
}

std::vector<double> MultiplaneImage::depths() const {
  std::vector<double> d;
  d.reserve(planes.size());
  for (const auto& p : planes) d.push_back(p.depth);
  return d;
}

void MultiplaneImage::validate() const {
  if (planes.empty()) throw Error(ErrorCode::InvalidArgument, "MPI has no planes");
  depth_range.validate();
  intrinsics.validate();
  const int w = width();
  const int h = height();
  double prev = depth_range.d_near;
  for (std::size_t i = 0; i < planes.size(); ++i) {
    const auto& p = planes[i];
    if (p.color.channels() != 3 || p.alpha.channels() != 1)
      throw Error(ErrorCode::InvalidArgument, "plane color must be 3ch and alpha 1ch");
    if (p.color.width() != w || p.color.height() != h || p.alpha.width() != w || p.alpha.height() != h)
      throw Error(ErrorCode::ShapeMismatch, "planes must share one resolution");
    if (!(p.depth > prev) || !(p.depth < depth_range.d_far))
      throw Error(ErrorCode::InvalidArgument, "plane depths must increase strictly inside (d_near, d_far)");
    prev = p.depth;
    for (double a : p.alpha.data())
      if (!(a >= 0.0 && a <= 1.0)) throw Error(ErrorCode::InvalidArgument, "alpha outside [0, 1]");
  }
}

BinWidths normalize_bin_widths(std::span<const double> logits) {
  if (logits.empty()) throw Error(ErrorCode::InvalidArgument, "at least one logit required");
  const double peak = *std::max_element(logits.begin(), logits.end());
  std::vector<double> w(logits.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    if (!std::isfinite(logits[i])) throw Error(ErrorCode::InvalidArgument, "logits must be finite");
    // The floor keeps every width positive when logits span more than exp can resolve.
    w[i] = std::exp(std::max(logits[i] - peak, -700.0));
    sum += w[i];
  }
  for (double& v : w) v /= sum;
  return BinWidths(std::move(w));
}

std::vector<double> plane_positions(const BinWidths& widths, const DepthRange& range) {
  range.validate();
  std::vector<double> out(widths.size());
  double before = 0.0;
  for (std::size_t i = 0; i < widths.size(); ++i) {
    out[i] = range.d_near + range.extent() * (widths[i] / 2.0 + before);
    before += widths[i];
  }
  return out;
}

std::vector<double> uniform_positions(int n, const DepthRange& range) {
  if (n < 1) throw Error(ErrorCode::InvalidArgument, "plane count must be >= 1");
  return plane_positions(BinWidths(std::vector<double>(n, 1.0 / n)), range);
}

std::vector<double> log_positions(int n, const DepthRange& range) {
  if (n < 1) throw Error(ErrorCode::InvalidArgument, "plane count must be >= 1");
  range.validate();
  const double lo = std::log(range.d_near);
  const double span = std::log(range.d_far) - lo;
  std::vector<double> out(n);
  for (int i = 0; i < n; ++i) out[i] = std::exp(lo + (i + 0.5) / n * span);
  return out;
}

std::vector<double> widths_from_positions(std::span<const double> positions, const DepthRange& range) {
  std::vector<double> w(positions.size());
  double before = 0.0;
  for (std::size_t i = 0; i < positions.size(); ++i) {
    w[i] = 2.0 * ((positions[i] - range.d_near) / range.extent() - before);
    before += w[i];
  }
  return w;
}

std::vector<double> positions_backward(std::span<const double> d_positions, const DepthRange& range) {
  const std::size_t n = d_positions.size();
  std::vector<double> d_widths(n);
  // d_width_j = extent * (d_pos_j / 2 + sum_{i>j} d_pos_i)
  double after = 0.0;
  for (std::size_t k = n; k-- > 0;) {
    d_widths[k] = range.extent() * (d_positions[k] / 2.0 + after);
    after += d_positions[k];
  }
  return d_widths;
}

std::vector<double> softmax_backward(std::span<const double> widths, std::span<const double> d_widths) {
  double dot = 0.0;
  for (std::size_t i = 0; i < widths.size(); ++i) dot += widths[i] * d_widths[i];
  std::vector<double> d_logits(widths.size());
  for (std::size_t i = 0; i < widths.size(); ++i) d_logits[i] = widths[i] * (d_widths[i] - dot);
  return d_logits;
}

ImageBuffer disparity_map(const MultiplaneImage& m) {
  m.validate();
  ImageBuffer out(m.width(), m.height(), 1);
  const std::size_t pixels = static_cast<std::size_t>(m.width()) * m.height();
  for (std::size_t px = 0; px < pixels; ++px) {
    double transmittance = 1.0;
    double acc = 0.0;
    for (const auto& plane : m.planes) {
      const double a = plane.alpha[px];
      acc += transmittance * a / plane.depth;
      transmittance *= 1.0 - a;
    }
    out[px] = acc;
  }
  return out;
}

}  // namespace ampi
