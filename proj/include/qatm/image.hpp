#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "qatm/geometry.hpp"

namespace qatm {

/// 8-bit interleaved image with 1 (gray) or 3 (RGB) channels.
struct Image {
  std::size_t width = 0;
  std::size_t height = 0;
  std::size_t channels = 1;
  std::vector<std::uint8_t> data;

  Image() = default;
  Image(std::size_t w, std::size_t h, std::size_t c, std::uint8_t fill = 0);
  Image(std::size_t w, std::size_t h, std::size_t c, std::vector<std::uint8_t> pixels);

  std::uint8_t& at(std::size_t x, std::size_t y, std::size_t c = 0) {
    return data[(y * width + x) * channels + c];
  }
  std::uint8_t at(std::size_t x, std::size_t y, std::size_t c = 0) const {
    return data[(y * width + x) * channels + c];
  }

  friend bool operator==(const Image&, const Image&) = default;
};

/// Decodes PNG or binary PGM/PPM (P5/P6), chosen by the file's magic bytes.
/// Alpha channels are dropped; 16-bit PNGs are reduced to 8 bits.
Image load_image(const std::filesystem::path& path);

/// Width and height without decoding the pixel payload where possible.
struct ImageSize {
  std::size_t width = 0;
  std::size_t height = 0;
};
ImageSize read_image_size(const std::filesystem::path& path);

/// Writes P5 for gray images and P6 for RGB.
void save_pnm(const Image& img, const std::filesystem::path& path);
void save_png(const Image& img, const std::filesystem::path& path);

/// ITU-R BT.601 luma.
Image to_grayscale(const Image& img);

/// Copy of a rectangle; throws InvalidArgument if it leaves the image.
Image crop(const Image& img, std::size_t x, std::size_t y, std::size_t w, std::size_t h);

}  // namespace qatm
