#include "visyreve/image.hpp"

#include <algorithm>
#include <cstdio>
#include <memory>

#include <png.h>

#include "visyreve/error.hpp"

namespace visyreve {

std::size_t Mask::count() const {
  return static_cast<std::size_t>(std::count(values.begin(), values.end(), std::uint8_t{1}));
}

Image apply_mask(const Image& image, const Mask& mask) {
  if (mask.width != image.width || mask.height != image.height) {
    throw Error(ErrorCode::InvalidArgument, "mask and image dimensions differ");
  }
  Image out = image;
  const std::size_t n = std::size_t(image.width) * image.height;
  for (std::size_t i = 0; i < n; ++i) {
    if (!mask.values[i]) {
      std::fill_n(out.data.begin() + i * image.channels, image.channels, std::uint8_t{0});
    }
  }
  return out;
}

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const { std::fclose(f); }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

FilePtr open_file(const std::filesystem::path& path, const char* mode) {
  FilePtr f(std::fopen(path.c_str(), mode));
  if (!f) {
    const bool reading = mode[0] == 'r';
    throw Error(reading && !std::filesystem::exists(path) ? ErrorCode::MissingFile
                                                          : ErrorCode::IoError,
                "cannot open " + path.string());
  }
  return f;
}

[[noreturn]] void png_fail(const std::filesystem::path& path) {
  throw Error(ErrorCode::IoError, "libpng failed on " + path.string());
}

}  // namespace

Image load_png(const std::filesystem::path& path) {
  FilePtr file = open_file(path, "rb");
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_read_struct(&png, &info, nullptr);
    png_fail(path);
  }
  Image image;
  std::vector<png_bytep> rows;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    png_fail(path);
  }
  png_init_io(png, file.get());
  png_read_info(png, info);
  const png_byte color = png_get_color_type(png, info);
  if (png_get_bit_depth(png, info) == 16) png_set_strip_16(png);
  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color == PNG_COLOR_TYPE_GRAY && png_get_bit_depth(png, info) < 8) {
    png_set_expand_gray_1_2_4_to_8(png);
  }
  if (color & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
  png_read_update_info(png, info);
  image.width = static_cast<int>(png_get_image_width(png, info));
  image.height = static_cast<int>(png_get_image_height(png, info));
  image.channels = png_get_channels(png, info);
  image.data.resize(std::size_t(image.width) * image.height * image.channels);
  rows.resize(image.height);
  for (int y = 0; y < image.height; ++y) {
    rows[y] = image.data.data() + std::size_t(y) * image.width * image.channels;
  }
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return image;
}

void save_png(const Image& image, const std::filesystem::path& path) {
  if (image.channels != 1 && image.channels != 3) {
    throw Error(ErrorCode::InvalidArgument, "only gray and RGB images can be written");
  }
  FilePtr file = open_file(path, "wb");
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_write_struct(&png, &info);
    png_fail(path);
  }
  std::vector<png_bytep> rows(image.height);
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    png_fail(path);
  }
  png_init_io(png, file.get());
  png_set_compression_level(png, 1);
  png_set_IHDR(png, info, image.width, image.height, 8,
               image.channels == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (int y = 0; y < image.height; ++y) {
    rows[y] = const_cast<png_bytep>(image.data.data() + std::size_t(y) * image.width * image.channels);
  }
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

Mask load_mask_png(const std::filesystem::path& path) {
  const Image img = load_png(path);
  Mask m(img.width, img.height);
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      m.set(x, y, img.at(x, y, 0) >= 128);
    }
  }
  return m;
}

void save_mask_png(const Mask& mask, const std::filesystem::path& path) {
  Image img(mask.width, mask.height, 1);
  for (std::size_t i = 0; i < mask.values.size(); ++i) {
    img.data[i] = mask.values[i] ? 255 : 0;
  }
  save_png(img, path);
}

}  // namespace visyreve
