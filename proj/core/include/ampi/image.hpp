#pragma once

#include <array>
#include <cmath>
#include <functional>
#include <span>
#include <vector>

namespace ampi {

/// Row-major H x W x C raster of doubles. Color and alpha use [0, 1]; the
/// range is enforced at I/O boundaries only.
class ImageBuffer {
 public:
  ImageBuffer() = default;
  ImageBuffer(int width, int height, int channels, double fill = 0.0);
  ImageBuffer(int width, int height, int channels, std::vector<double> data);

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  int channels() const noexcept { return channels_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  std::size_t index(int x, int y, int c) const noexcept {
    return (static_cast<std::size_t>(y) * width_ + x) * channels_ + c;
  }
  double& at(int x, int y, int c = 0) noexcept { return data_[index(x, y, c)]; }
  const double& at(int x, int y, int c = 0) const noexcept { return data_[index(x, y, c)]; }

  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }
  double& operator[](std::size_t i) noexcept { return data_[i]; }
  const double& operator[](std::size_t i) const noexcept { return data_[i]; }

  bool same_shape(const ImageBuffer& o) const noexcept {
    return width_ == o.width_ && height_ == o.height_ && channels_ == o.channels_;
  }
  bool operator==(const ImageBuffer&) const = default;

 private:
  int width_ = 0;
  int height_ = 0;
  int channels_ = 0;
  std::vector<double> data_;
};

enum class BorderPolicy { ZeroPad, Clamp };
enum class ResizeMode { Down, Up };

/// Four-tap bilinear footprint of a continuous coordinate. The base cell is
/// floor(x), floor(y); derivatives taken through it are the one-sided
/// (right-continuous) ones at integer coordinates.
struct BilinearTaps {
  int x0 = 0;
  int y0 = 0;
  double fx = 0.0;
  double fy = 0.0;

  static BilinearTaps at(double x, double y) noexcept {
    const int xi = fast_floor(x);
    const int yi = fast_floor(y);
    return {xi, yi, x - xi, y - yi};
  }

  /// floor() for coordinates well inside int range, saturating outside it.
  static int fast_floor(double v) noexcept {
    constexpr double kLimit = 1 << 30;
    if (!(v > -kLimit)) return -(1 << 30);
    if (!(v < kLimit)) return 1 << 30;
    const int i = static_cast<int>(v);
    return v < i ? i - 1 : i;
  }
};

/// Value of channel c at integer (x, y) under the border policy.
inline double fetch(const ImageBuffer& img, int x, int y, int c, BorderPolicy border) noexcept {
  if (x < 0 || y < 0 || x >= img.width() || y >= img.height()) {
    if (border == BorderPolicy::ZeroPad) return 0.0;
    x = x < 0 ? 0 : (x >= img.width() ? img.width() - 1 : x);
    y = y < 0 ? 0 : (y >= img.height() ? img.height() - 1 : y);
  }
  return img.at(x, y, c);
}

using ChannelVector = std::array<double, 4>;

/// Bilinear interpolation at (x, y); entries past channels() are zero.
ChannelVector bilinear_sample(const ImageBuffer& img, double x, double y, BorderPolicy border);

/// Down: exact box/area averaging. Up: bilinear with clamped borders.
ImageBuffer resize(const ImageBuffer& img, int new_width, int new_height, ResizeMode mode);

/// Resize choosing Down or Up by comparing pixel counts.
ImageBuffer resize_auto(const ImageBuffer& img, int new_width, int new_height);

/// Area-downscale by an integer divisor (ceil of size / divisor, at least 1).
ImageBuffer downscale(const ImageBuffer& img, int divisor);

ImageBuffer crop(const ImageBuffer& img, int x0, int y0, int width, int height);

/// Central difference (f(img + h e_i) - f(img - h e_i)) / 2h.
double finite_difference_probe(const std::function<double(const ImageBuffer&)>& f, const ImageBuffer& img,
                               std::size_t index, double h);

}  // namespace ampi
