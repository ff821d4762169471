#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

namespace visyreve {

/// 8-bit image, row-major, interleaved channels (1 = gray, 3 = RGB).
struct Image {
  int width = 0;
  int height = 0;
  int channels = 1;
  std::vector<std::uint8_t> data;

  Image() = default;
  Image(int w, int h, int c) : width(w), height(h), channels(c), data(std::size_t(w) * h * c, 0) {}

  bool empty() const { return data.empty(); }
  std::uint8_t& at(int x, int y, int c = 0) {
    return data[(std::size_t(y) * width + x) * channels + c];
  }
  std::uint8_t at(int x, int y, int c = 0) const {
    return data[(std::size_t(y) * width + x) * channels + c];
  }

  bool operator==(const Image&) const = default;
};

/// Per-pixel boolean, stored as 0/1 bytes.
struct Mask {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> values;

  Mask() = default;
  Mask(int w, int h, bool fill = false) : width(w), height(h), values(std::size_t(w) * h, fill) {}

  bool at(int x, int y) const { return values[std::size_t(y) * width + x] != 0; }
  void set(int x, int y, bool v) { values[std::size_t(y) * width + x] = v ? 1 : 0; }
  std::size_t count() const;

  bool operator==(const Mask&) const = default;
};

/// Copy of `image` with every pixel outside `mask` set to 0.
Image apply_mask(const Image& image, const Mask& mask);

Image load_png(const std::filesystem::path& path);
void save_png(const Image& image, const std::filesystem::path& path);

/// Masks are stored as 8-bit gray PNGs (0 / 255); loading thresholds at 128.
Mask load_mask_png(const std::filesystem::path& path);
void save_mask_png(const Mask& mask, const std::filesystem::path& path);

}  // namespace visyreve
