#include "nrkd/io/png_io.hpp"

#include "nrkd/errors.hpp"

#include <png.h>

#include <cstdio>
#include <memory>
#include <vector>

namespace nrkd {

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

[[noreturn]] void fail(const std::string& what, const std::string& path) {
  throw CorruptFile(what + ": " + path);
}

}  // namespace

Image read_png_gray(const std::string& path) {
  FilePtr fp(std::fopen(path.c_str(), "rb"));
  if (!fp) fail("cannot open", path);

  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_read_struct(&png, &info, nullptr);
    fail("libpng init failed", path);
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    fail("not a valid PNG", path);
  }
  png_init_io(png, fp.get());
  png_read_info(png, info);

  const png_uint_32 w = png_get_image_width(png, info);
  const png_uint_32 h = png_get_image_height(png, info);
  const png_byte color = png_get_color_type(png, info);
  const png_byte depth = png_get_bit_depth(png, info);

  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
  if (color & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
  if (color == PNG_COLOR_TYPE_RGB || color == PNG_COLOR_TYPE_RGB_ALPHA ||
      color == PNG_COLOR_TYPE_PALETTE)
    png_set_rgb_to_gray_fixed(png, 1, -1, -1);
  if (depth == 16) png_set_swap(png);  // little-endian rows in memory
  png_read_update_info(png, info);

  const bool wide = png_get_bit_depth(png, info) == 16;
  const std::size_t stride = png_get_rowbytes(png, info);
  std::vector<std::uint8_t> row(stride);
  Image img(h, w);
  const float scale = wide ? 1.0f / 65535.0f : 1.0f / 255.0f;
  for (png_uint_32 y = 0; y < h; ++y) {
    png_read_row(png, row.data(), nullptr);
    if (wide) {
      const auto* p = reinterpret_cast<const std::uint16_t*>(row.data());
      for (png_uint_32 x = 0; x < w; ++x) img(y, x) = p[x] * scale;
    } else {
      for (png_uint_32 x = 0; x < w; ++x) img(y, x) = row[x] * scale;
    }
  }
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return img;
}

namespace {

void write_png_gray_impl(const std::string& path, const Image& img, bool wide) {
  FilePtr fp(std::fopen(path.c_str(), "wb"));
  if (!fp) fail("cannot open for write", path);
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_write_struct(&png, &info);
    fail("libpng init failed", path);
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    fail("png write failed", path);
  }
  png_init_io(png, fp.get());
  png_set_IHDR(png, info, png_uint_32(img.cols()), png_uint_32(img.rows()), wide ? 16 : 8,
               PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  if (wide) png_set_swap(png);

  if (wide) {
    std::vector<std::uint16_t> row(img.cols());
    for (Eigen::Index y = 0; y < img.rows(); ++y) {
      for (Eigen::Index x = 0; x < img.cols(); ++x)
        row[std::size_t(x)] = std::uint16_t(std::lround(65535.0 * clamp01(double(img(y, x)))));
      png_write_row(png, reinterpret_cast<png_bytep>(row.data()));
    }
  } else {
    std::vector<std::uint8_t> row(img.cols());
    for (Eigen::Index y = 0; y < img.rows(); ++y) {
      for (Eigen::Index x = 0; x < img.cols(); ++x)
        row[std::size_t(x)] = std::uint8_t(std::lround(255.0 * clamp01(double(img(y, x)))));
      png_write_row(png, row.data());
    }
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

}  // namespace

void write_png_gray8(const std::string& path, const Image& img) {
  write_png_gray_impl(path, img, false);
}

void write_png_gray16(const std::string& path, const Image& img) {
  write_png_gray_impl(path, img, true);
}

Mask read_png_mask(const std::string& path) {
  const Image img = read_png_gray(path);
  Mask m(img.rows(), img.cols());
  for (Eigen::Index y = 0; y < img.rows(); ++y)
    for (Eigen::Index x = 0; x < img.cols(); ++x) m(y, x) = img(y, x) > 0.5f ? 1 : 0;
  return m;
}

void write_png_mask(const std::string& path, const Mask& mask) {
  Image img(mask.rows(), mask.cols());
  for (Eigen::Index y = 0; y < mask.rows(); ++y)
    for (Eigen::Index x = 0; x < mask.cols(); ++x) img(y, x) = mask(y, x) ? 1.0f : 0.0f;
  write_png_gray8(path, img);
}

void write_png_rgb8(const std::string& path, const std::vector<std::uint8_t>& rgb,
                    Eigen::Index h, Eigen::Index w) {
  if (Eigen::Index(rgb.size()) != 3 * h * w) throw ShapeError("write_png_rgb8: buffer size");
  FilePtr fp(std::fopen(path.c_str(), "wb"));
  if (!fp) fail("cannot open for write", path);
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_write_struct(&png, &info);
    fail("libpng init failed", path);
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    fail("png write failed", path);
  }
  png_init_io(png, fp.get());
  png_set_IHDR(png, info, png_uint_32(w), png_uint_32(h), 8, PNG_COLOR_TYPE_RGB,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (Eigen::Index y = 0; y < h; ++y)
    png_write_row(png, const_cast<png_bytep>(rgb.data() + std::size_t(3 * y * w)));
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

}  // namespace nrkd
