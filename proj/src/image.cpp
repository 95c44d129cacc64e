#include "qatm/image.hpp"

#include <png.h>

#include <array>
#include <cctype>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>

#include "qatm/error.hpp"

namespace qatm {
namespace {

void check_channels(std::size_t c) {
  if (c != 1 && c != 3) throw InvalidArgument("images must have 1 or 3 channels");
}

std::vector<std::uint8_t> read_all(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

bool is_png(std::span<const std::uint8_t> bytes) {
  static constexpr std::array<std::uint8_t, 8> kSig{0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
  return bytes.size() >= kSig.size() && std::equal(kSig.begin(), kSig.end(), bytes.begin());
}

// Cursor over a netpbm header: whitespace and '#' comments separate tokens.
struct PnmHeader {
  char kind = 0;
  std::size_t width = 0;
  std::size_t height = 0;
  std::size_t maxval = 0;
  std::size_t payload_offset = 0;
};

PnmHeader parse_pnm_header(std::span<const std::uint8_t> bytes, const std::string& name) {
  if (bytes.size() < 2 || bytes[0] != 'P' || (bytes[1] != '5' && bytes[1] != '6')) {
    throw FormatError(FormatErrorKind::kBadMagic, name + " is neither PNG nor binary PGM/PPM");
  }
  PnmHeader h;
  h.kind = static_cast<char>(bytes[1]);
  std::size_t pos = 2;
  auto next_number = [&]() -> std::size_t {
    while (pos < bytes.size()) {
      if (bytes[pos] == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      } else if (std::isspace(bytes[pos])) {
        ++pos;
      } else {
        break;
      }
    }
    if (pos >= bytes.size() || !std::isdigit(bytes[pos])) {
      throw FormatError(FormatErrorKind::kMalformed, name + ": bad netpbm header");
    }
    std::size_t v = 0;
    while (pos < bytes.size() && std::isdigit(bytes[pos])) {
      v = v * 10 + (bytes[pos] - '0');
      if (v > (1u << 30)) throw FormatError(FormatErrorKind::kDimensionOverflow, name);
      ++pos;
    }
    return v;
  };
  h.width = next_number();
  h.height = next_number();
  h.maxval = next_number();
  if (pos >= bytes.size() || !std::isspace(bytes[pos])) {
    throw FormatError(FormatErrorKind::kMalformed, name + ": bad netpbm header");
  }
  h.payload_offset = pos + 1;
  if (h.width == 0 || h.height == 0 || h.maxval == 0 || h.maxval > 65535) {
    throw FormatError(FormatErrorKind::kMalformed, name + ": bad netpbm dimensions");
  }
  return h;
}

Image decode_pnm(std::span<const std::uint8_t> bytes, const std::string& name) {
  const PnmHeader h = parse_pnm_header(bytes, name);
  const std::size_t channels = h.kind == '5' ? 1 : 3;
  const std::size_t sample_bytes = h.maxval > 255 ? 2 : 1;
  const std::size_t samples = h.width * h.height * channels;
  if (bytes.size() - h.payload_offset < samples * sample_bytes) {
    throw FormatError(FormatErrorKind::kTruncated, name);
  }
  Image img(h.width, h.height, channels);
  const std::uint8_t* p = bytes.data() + h.payload_offset;
  for (std::size_t i = 0; i < samples; ++i) {
    const std::size_t raw = sample_bytes == 2 ? (std::size_t{p[2 * i]} << 8) | p[2 * i + 1] : p[i];
    img.data[i] = static_cast<std::uint8_t>((raw * 255 + h.maxval / 2) / h.maxval);
  }
  return img;
}

Image decode_png(std::span<const std::uint8_t> bytes, const std::string& name) {
  png_image image;
  std::memset(&image, 0, sizeof(image));
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&image, bytes.data(), bytes.size())) {
    throw FormatError(FormatErrorKind::kMalformed, name + ": " + image.message);
  }
  const bool color = (image.format & PNG_FORMAT_FLAG_COLOR) != 0;
  image.format = color ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  Image img(image.width, image.height, color ? 3 : 1);
  if (!png_image_finish_read(&image, nullptr, img.data.data(), 0, nullptr)) {
    const std::string msg = image.message;
    png_image_free(&image);
    throw FormatError(FormatErrorKind::kMalformed, name + ": " + msg);
  }
  return img;
}

}  // namespace

Image::Image(std::size_t w, std::size_t h, std::size_t c, std::uint8_t fill)
    : width(w), height(h), channels(c), data(w * h * c, fill) {
  check_channels(c);
}

Image::Image(std::size_t w, std::size_t h, std::size_t c, std::vector<std::uint8_t> pixels)
    : width(w), height(h), channels(c), data(std::move(pixels)) {
  check_channels(c);
  if (data.size() != w * h * c) throw ShapeMismatch("image data length does not match its size");
}

Image load_image(const std::filesystem::path& path) {
  const auto bytes = read_all(path);
  if (is_png(bytes)) return decode_png(bytes, path.string());
  return decode_pnm(bytes, path.string());
}

ImageSize read_image_size(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<std::uint8_t> head(512);
  in.read(reinterpret_cast<char*>(head.data()), static_cast<std::streamsize>(head.size()));
  head.resize(static_cast<std::size_t>(in.gcount()));
  if (is_png(head)) {
    // IHDR is always the first chunk: width and height are big-endian at 16..23.
    if (head.size() < 24) throw FormatError(FormatErrorKind::kTruncated, path.string());
    auto be32 = [&](std::size_t o) {
      return (std::size_t{head[o]} << 24) | (std::size_t{head[o + 1]} << 16) |
             (std::size_t{head[o + 2]} << 8) | head[o + 3];
    };
    return {be32(16), be32(20)};
  }
  const PnmHeader h = parse_pnm_header(head, path.string());
  return {h.width, h.height};
}

void save_pnm(const Image& img, const std::filesystem::path& path) {
  check_channels(img.channels);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << (img.channels == 1 ? "P5" : "P6") << '\n' << img.width << ' ' << img.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(img.data.data()), static_cast<std::streamsize>(img.data.size()));
  if (!out) throw IoError("failed writing " + path.string());
}

void save_png(const Image& img, const std::filesystem::path& path) {
  check_channels(img.channels);
  png_image image;
  std::memset(&image, 0, sizeof(image));
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(img.width);
  image.height = static_cast<png_uint_32>(img.height);
  image.format = img.channels == 1 ? PNG_FORMAT_GRAY : PNG_FORMAT_RGB;
  if (!png_image_write_to_file(&image, path.c_str(), 0, img.data.data(), 0, nullptr)) {
    throw IoError("cannot write " + path.string() + ": " + image.message);
  }
}

Image to_grayscale(const Image& img) {
  if (img.channels == 1) return img;
  Image out(img.width, img.height, 1);
  for (std::size_t i = 0; i < img.width * img.height; ++i) {
    const double y = 0.299 * img.data[3 * i] + 0.587 * img.data[3 * i + 1] + 0.114 * img.data[3 * i + 2];
    out.data[i] = static_cast<std::uint8_t>(std::lround(y));
  }
  return out;
}

Image crop(const Image& img, std::size_t x, std::size_t y, std::size_t w, std::size_t h) {
  if (w == 0 || h == 0 || x + w > img.width || y + h > img.height) {
    throw InvalidArgument("crop rectangle leaves the image");
  }
  Image out(w, h, img.channels);
  const std::size_t row_bytes = w * img.channels;
  for (std::size_t r = 0; r < h; ++r) {
    const auto* src = img.data.data() + ((y + r) * img.width + x) * img.channels;
    std::copy(src, src + row_bytes, out.data.data() + r * row_bytes);
  }
  return out;
}

}  // namespace qatm
