#include "ampi/image.hpp"

#include <algorithm>
#include <utility>

#include "ampi/error.hpp"

namespace ampi {

ImageBuffer::ImageBuffer(int width, int height, int channels, double fill)
    : width_(width), height_(height), channels_(channels) {
  if (width < 1 || height < 1) throw Error(ErrorCode::InvalidArgument, "image dimensions must be positive");
  if (channels != 1 && channels != 3 && channels != 4)
    throw Error(ErrorCode::InvalidArgument, "channels must be 1, 3 or 4");
  data_.assign(static_cast<std::size_t>(width) * height * channels, fill);
}

ImageBuffer::ImageBuffer(int width, int height, int channels, std::vector<double> data)
    : ImageBuffer(width, height, channels) {
  if (data.size() != data_.size()) throw Error(ErrorCode::ShapeMismatch, "data length != width*height*channels");
  data_ = std::move(data);
}

ChannelVector bilinear_sample(const ImageBuffer& img, double x, double y, BorderPolicy border) {
  const auto taps = BilinearTaps::at(x, y);
  const double w00 = (1.0 - taps.fx) * (1.0 - taps.fy);
  const double w10 = taps.fx * (1.0 - taps.fy);
  const double w01 = (1.0 - taps.fx) * taps.fy;
  const double w11 = taps.fx * taps.fy;
  ChannelVector out{};
  for (int c = 0; c < img.channels(); ++c) {
    out[c] = w00 * fetch(img, taps.x0, taps.y0, c, border) + w10 * fetch(img, taps.x0 + 1, taps.y0, c, border) +
             w01 * fetch(img, taps.x0, taps.y0 + 1, c, border) +
             w11 * fetch(img, taps.x0 + 1, taps.y0 + 1, c, border);
  }
  return out;
}

namespace {

struct Tap {
  int src;
  double weight;
};

// Area weights mapping n_src cells onto n_dst cells covering the same extent.
std::vector<std::vector<Tap>> area_weights(int n_src, int n_dst) {
  std::vector<std::vector<Tap>> taps(n_dst);
  const double ratio = static_cast<double>(n_src) / n_dst;
  for (int i = 0; i < n_dst; ++i) {
    const double lo = i * ratio;
    const double hi = (i + 1) * ratio;
    double total = 0.0;
    for (int s = static_cast<int>(std::floor(lo)); s < n_src && s < hi; ++s) {
      const double overlap = std::min(hi, s + 1.0) - std::max(lo, static_cast<double>(s));
      if (overlap > 0.0) {
        taps[i].push_back({s, overlap});
        total += overlap;
      }
    }
    for (auto& t : taps[i]) t.weight /= total;
  }
  return taps;
}

// Bilinear weights with pixel-center alignment and clamped borders.
std::vector<std::vector<Tap>> linear_weights(int n_src, int n_dst) {
  std::vector<std::vector<Tap>> taps(n_dst);
  const double ratio = static_cast<double>(n_src) / n_dst;
  for (int i = 0; i < n_dst; ++i) {
    double x = (i + 0.5) * ratio - 0.5;
    x = std::clamp(x, 0.0, static_cast<double>(n_src - 1));
    const int x0 = static_cast<int>(std::floor(x));
    const double f = x - x0;
    if (x0 + 1 < n_src && f > 0.0) {
      taps[i] = {{x0, 1.0 - f}, {x0 + 1, f}};
    } else {
      taps[i] = {{x0, 1.0}};
    }
  }
  return taps;
}

ImageBuffer separable(const ImageBuffer& img, int new_w, int new_h, const std::vector<std::vector<Tap>>& wx,
                      const std::vector<std::vector<Tap>>& wy) {
  const int ch = img.channels();
  ImageBuffer rows(new_w, img.height(), ch);
  for (int y = 0; y < img.height(); ++y)
    for (int x = 0; x < new_w; ++x)
      for (int c = 0; c < ch; ++c) {
        double acc = 0.0;
        for (const auto& t : wx[x]) acc += t.weight * img.at(t.src, y, c);
        rows.at(x, y, c) = acc;
      }
  ImageBuffer out(new_w, new_h, ch);
  for (int y = 0; y < new_h; ++y)
    for (int x = 0; x < new_w; ++x)
      for (int c = 0; c < ch; ++c) {
        double acc = 0.0;
        for (const auto& t : wy[y]) acc += t.weight * rows.at(x, t.src, c);
        out.at(x, y, c) = acc;
      }
  return out;
}

}  // namespace

ImageBuffer resize(const ImageBuffer& img, int new_width, int new_height, ResizeMode mode) {
  if (new_width < 1 || new_height < 1) throw Error(ErrorCode::InvalidArgument, "resize target must be >= 1x1");
  if (img.empty()) throw Error(ErrorCode::InvalidArgument, "cannot resize an empty image");
  if (new_width == img.width() && new_height == img.height()) return img;
  if (mode == ResizeMode::Down)
    return separable(img, new_width, new_height, area_weights(img.width(), new_width),
                     area_weights(img.height(), new_height));
  return separable(img, new_width, new_height, linear_weights(img.width(), new_width),
                   linear_weights(img.height(), new_height));
}

ImageBuffer resize_auto(const ImageBuffer& img, int new_width, int new_height) {
  const bool shrink = static_cast<long>(new_width) * new_height < static_cast<long>(img.width()) * img.height();
  return resize(img, new_width, new_height, shrink ? ResizeMode::Down : ResizeMode::Up);
}

ImageBuffer downscale(const ImageBuffer& img, int divisor) {
  if (divisor < 1) throw Error(ErrorCode::InvalidArgument, "scale divisor must be >= 1");
  const int w = std::max(1, (img.width() + divisor - 1) / divisor);
  const int h = std::max(1, (img.height() + divisor - 1) / divisor);
  return resize(img, w, h, ResizeMode::Down);
}

ImageBuffer crop(const ImageBuffer& img, int x0, int y0, int width, int height) {
  if (x0 < 0 || y0 < 0 || width < 1 || height < 1 || x0 + width > img.width() || y0 + height > img.height())
    throw Error(ErrorCode::IndexOutOfRange, "crop window outside the image");
  ImageBuffer out(width, height, img.channels());
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x)
      for (int c = 0; c < img.channels(); ++c) out.at(x, y, c) = img.at(x0 + x, y0 + y, c);
  return out;
}

double finite_difference_probe(const std::function<double(const ImageBuffer&)>& f, const ImageBuffer& img,
                               std::size_t index, double h) {
  if (index >= img.size()) throw Error(ErrorCode::IndexOutOfRange, "probe index outside the image");
  if (!(h > 0.0)) throw Error(ErrorCode::InvalidArgument, "probe step must be > 0");
  ImageBuffer plus = img;
  ImageBuffer minus = img;
  plus[index] += h;
  minus[index] -= h;
  return (f(plus) - f(minus)) / (2.0 * h);
}

}  // namespace ampi
