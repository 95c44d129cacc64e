#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace qatm {

/// Dense height x width grid of feature vectors of length dim, stored row-major
/// with the feature index innermost. Each grid cell maps to the source-image
/// pixel (x * stride_px, y * stride_px).
class FeatureMap {
 public:
  FeatureMap() = default;

  /// source_width/height of 0 default to the extent covered by the grid.
  FeatureMap(std::size_t height, std::size_t width, std::size_t dim,
             std::vector<float> data, std::uint32_t stride_px = 1,
             std::uint32_t source_width = 0, std::uint32_t source_height = 0);

  std::size_t height() const noexcept { return height_; }
  std::size_t width() const noexcept { return width_; }
  std::size_t dim() const noexcept { return dim_; }
  std::size_t cells() const noexcept { return height_ * width_; }
  std::uint32_t stride_px() const noexcept { return stride_px_; }
  std::uint32_t source_width() const noexcept { return source_width_; }
  std::uint32_t source_height() const noexcept { return source_height_; }
  bool empty() const noexcept { return data_.empty(); }

  std::span<const float> data() const noexcept { return data_; }

  std::span<const float> cell(std::size_t y, std::size_t x) const noexcept {
    return {data_.data() + (y * width_ + x) * dim_, dim_};
  }
  std::span<const float> cell(std::size_t index) const noexcept {
    return {data_.data() + index * dim_, dim_};
  }

  friend bool operator==(const FeatureMap&, const FeatureMap&) = default;

 private:
  std::size_t height_ = 0;
  std::size_t width_ = 0;
  std::size_t dim_ = 0;
  std::uint32_t stride_px_ = 1;
  std::uint32_t source_width_ = 0;
  std::uint32_t source_height_ = 0;
  std::vector<float> data_;
};

}  // namespace qatm
