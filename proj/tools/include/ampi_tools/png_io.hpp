#pragma once

#include <string>

#include "ampi/image.hpp"

namespace ampi::tools {

/// Decodes a PNG into [0, 1] values. Gray, gray-alpha, RGB and RGBA files
/// keep their channel count (1, 2, 3, 4); palettes expand to RGB(A).
/// Throws Error(Io) naming the path.
ImageBuffer read_png(const std::string& path);

/// Clamps to [0, 1] and quantizes round-half-up to `bit_depth` (8 or 16).
/// Accepts 1, 2, 3 or 4 channels.
void write_png(const std::string& path, const ImageBuffer& image, int bit_depth);

/// The integer code write_png stores for `v`.
unsigned quantize(double v, int bit_depth) noexcept;

}  // namespace ampi::tools
