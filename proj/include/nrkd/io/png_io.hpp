#pragma once

#include "nrkd/core.hpp"

#include <string>

namespace nrkd {

// Grayscale loaders normalize to [0, 1]; RGB(A) input is converted to
// luminance. 16-bit files keep their full precision.
Image read_png_gray(const std::string& path);

void write_png_gray8(const std::string& path, const Image& img);
void write_png_gray16(const std::string& path, const Image& img);

Mask read_png_mask(const std::string& path);
void write_png_mask(const std::string& path, const Mask& mask);

// Interleaved 8-bit RGB, row-major, 3 * w bytes per row.
void write_png_rgb8(const std::string& path, const std::vector<std::uint8_t>& rgb,
                    Eigen::Index h, Eigen::Index w);

}  // namespace nrkd
