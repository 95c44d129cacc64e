#include "qatm/features.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <string>

#include "qatm/error.hpp"

namespace qatm {

FeatureMap::FeatureMap(std::size_t height, std::size_t width, std::size_t dim,
                       std::vector<float> data, std::uint32_t stride_px,
                       std::uint32_t source_width, std::uint32_t source_height)
    : height_(height),
      width_(width),
      dim_(dim),
      stride_px_(stride_px),
      source_width_(source_width),
      source_height_(source_height),
      data_(std::move(data)) {
  if (height == 0 || width == 0 || dim == 0) throw InvalidArgument("feature map extents must be positive");
  if (stride_px == 0) throw InvalidArgument("feature map stride must be at least 1");
  if (data_.size() != height * width * dim) throw ShapeMismatch("feature map data length does not match H*W*L");
  if (source_width_ == 0) source_width_ = static_cast<std::uint32_t>(width * stride_px);
  if (source_height_ == 0) source_height_ = static_cast<std::uint32_t>(height * stride_px);
  // Every cell origin must fall inside the source image.
  if ((height - 1) * stride_px >= source_height_ || (width - 1) * stride_px >= source_width_) {
    throw InvalidArgument("feature grid does not fit inside its source image");
  }
  for (float v : data_) {
    if (!std::isfinite(v)) throw InvalidArgument("feature map contains non-finite values");
  }
}

FeatureMap extract_raw_patches(const Image& img, std::size_t patch_size, std::size_t stride,
                               bool normalize) {
  if (patch_size == 0 || stride == 0) throw InvalidArgument("patch size and stride must be positive");
  if (patch_size > img.width || patch_size > img.height) {
    throw InvalidArgument("patch larger than image");
  }
  const std::size_t gh = (img.height - patch_size) / stride + 1;
  const std::size_t gw = (img.width - patch_size) / stride + 1;
  const std::size_t dim = patch_size * patch_size * img.channels;

  std::vector<float> data(gh * gw * dim);
  std::vector<double> patch(dim);
  for (std::size_t gy = 0; gy < gh; ++gy) {
    for (std::size_t gx = 0; gx < gw; ++gx) {
      std::size_t k = 0;
      for (std::size_t dy = 0; dy < patch_size; ++dy) {
        for (std::size_t dx = 0; dx < patch_size; ++dx) {
          for (std::size_t c = 0; c < img.channels; ++c) {
            patch[k++] = img.at(gx * stride + dx, gy * stride + dy, c);
          }
        }
      }
      float* dst = data.data() + (gy * gw + gx) * dim;
      if (!normalize) {
        for (std::size_t i = 0; i < dim; ++i) dst[i] = static_cast<float>(patch[i]);
        continue;
      }
      double mean = 0.0;
      for (double v : patch) mean += v;
      mean /= static_cast<double>(dim);
      double var = 0.0;
      for (double v : patch) var += (v - mean) * (v - mean);
      var /= static_cast<double>(dim);
      if (var <= 1e-12) {
        std::fill(dst, dst + dim, 0.0f);
        continue;
      }
      const double inv_std = 1.0 / std::sqrt(var);
      for (std::size_t i = 0; i < dim; ++i) dst[i] = static_cast<float>((patch[i] - mean) * inv_std);
    }
  }
  return FeatureMap(gh, gw, dim, std::move(data), static_cast<std::uint32_t>(stride),
                    static_cast<std::uint32_t>(img.width), static_cast<std::uint32_t>(img.height));
}

namespace {

void put_u32(unsigned char* p, std::uint32_t v) {
  p[0] = static_cast<unsigned char>(v);
  p[1] = static_cast<unsigned char>(v >> 8);
  p[2] = static_cast<unsigned char>(v >> 16);
  p[3] = static_cast<unsigned char>(v >> 24);
}

std::uint32_t get_u32(const unsigned char* p) {
  return std::uint32_t{p[0]} | (std::uint32_t{p[1]} << 8) | (std::uint32_t{p[2]} << 16) |
         (std::uint32_t{p[3]} << 24);
}

std::uint32_t narrow_u32(std::size_t v, const char* what) {
  if (v > std::numeric_limits<std::uint32_t>::max()) {
    throw FormatError(FormatErrorKind::kDimensionOverflow, std::string(what) + " exceeds 32 bits");
  }
  return static_cast<std::uint32_t>(v);
}

}  // namespace

void save_feature_file(const FeatureMap& map, const std::filesystem::path& path) {
  if (map.empty()) throw InvalidArgument("cannot save an empty feature map");
  unsigned char header[kFtmHeaderBytes];
  std::memcpy(header, "FTM1", 4);
  put_u32(header + 4, kFtmVersion);
  put_u32(header + 8, narrow_u32(map.height(), "height"));
  put_u32(header + 12, narrow_u32(map.width(), "width"));
  put_u32(header + 16, narrow_u32(map.dim(), "dim"));
  put_u32(header + 20, map.stride_px());
  put_u32(header + 24, map.source_width());
  put_u32(header + 28, map.source_height());

  std::vector<unsigned char> payload(map.data().size() * 4);
  for (std::size_t i = 0; i < map.data().size(); ++i) {
    put_u32(payload.data() + 4 * i, std::bit_cast<std::uint32_t>(map.data()[i]));
  }

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(header), sizeof(header));
  out.write(reinterpret_cast<const char*>(payload.data()), static_cast<std::streamsize>(payload.size()));
  if (!out) throw IoError("failed writing " + path.string());
}

FeatureMap load_feature_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  const std::string name = path.string();

  unsigned char header[kFtmHeaderBytes];
  in.read(reinterpret_cast<char*>(header), sizeof(header));
  const auto got = static_cast<std::size_t>(in.gcount());
  if (got < 4 || std::memcmp(header, "FTM1", 4) != 0) {
    throw FormatError(FormatErrorKind::kBadMagic, name);
  }
  if (got < kFtmHeaderBytes) throw FormatError(FormatErrorKind::kTruncated, name + ": short header");
  if (get_u32(header + 4) != kFtmVersion) throw FormatError(FormatErrorKind::kBadVersion, name);

  const std::uint64_t h = get_u32(header + 8);
  const std::uint64_t w = get_u32(header + 12);
  const std::uint64_t l = get_u32(header + 16);
  const std::uint32_t stride = get_u32(header + 20);
  const std::uint32_t src_w = get_u32(header + 24);
  const std::uint32_t src_h = get_u32(header + 28);
  if (h == 0 || w == 0 || l == 0 || stride == 0) {
    throw FormatError(FormatErrorKind::kMalformed, name + ": zero extent or stride");
  }
  // Cap the payload at 2^40 bytes: anything larger is a corrupt header.
  constexpr std::uint64_t kMaxValues = std::uint64_t{1} << 38;
  if (h * w > kMaxValues || h * w * l > kMaxValues) {
    throw FormatError(FormatErrorKind::kDimensionOverflow, name);
  }
  const std::uint64_t count = h * w * l;

  in.seekg(0, std::ios::end);
  const auto file_size = static_cast<std::uint64_t>(in.tellg());
  const std::uint64_t expected = kFtmHeaderBytes + count * 4;
  if (file_size < expected) {
    throw FormatError(FormatErrorKind::kTruncated,
                      name + ": header claims " + std::to_string(count) + " values, payload holds " +
                          std::to_string((file_size - kFtmHeaderBytes) / 4));
  }
  if (file_size > expected) throw FormatError(FormatErrorKind::kMalformed, name + ": trailing bytes");

  std::vector<unsigned char> raw(count * 4);
  in.seekg(kFtmHeaderBytes, std::ios::beg);
  in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (static_cast<std::uint64_t>(in.gcount()) != raw.size()) throw FormatError(FormatErrorKind::kTruncated, name);

  std::vector<float> values(count);
  for (std::size_t i = 0; i < count; ++i) values[i] = std::bit_cast<float>(get_u32(raw.data() + 4 * i));
  try {
    return FeatureMap(h, w, l, std::move(values), stride, src_w, src_h);
  } catch (const InvalidArgument& e) {
    throw FormatError(FormatErrorKind::kMalformed, name + ": " + e.what());
  }
}

FeatureMap crop_feature_map(const FeatureMap& map, std::size_t x, std::size_t y, std::size_t w,
                            std::size_t h) {
  if (w == 0 || h == 0 || x + w > map.width() || y + h > map.height()) {
    throw InvalidArgument("crop leaves the feature grid");
  }
  const std::size_t dim = map.dim();
  std::vector<float> data;
  data.reserve(w * h * dim);
  for (std::size_t r = 0; r < h; ++r) {
    auto row = map.data().subspan(((y + r) * map.width() + x) * dim, w * dim);
    data.insert(data.end(), row.begin(), row.end());
  }
  const std::uint32_t stride = map.stride_px();
  // Source extent of the crop: cell span plus whatever the original map had
  // beyond its last cell origin (the receptive field tail).
  const std::uint32_t tail_w = map.source_width() - static_cast<std::uint32_t>((map.width() - 1) * stride);
  const std::uint32_t tail_h = map.source_height() - static_cast<std::uint32_t>((map.height() - 1) * stride);
  return FeatureMap(h, w, dim, std::move(data), stride,
                    static_cast<std::uint32_t>((w - 1) * stride) + tail_w,
                    static_cast<std::uint32_t>((h - 1) * stride) + tail_h);
}

}  // namespace qatm
