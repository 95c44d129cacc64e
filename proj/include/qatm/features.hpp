#pragma once

#include <cstddef>
#include <filesystem>

#include "qatm/feature_map.hpp"
#include "qatm/image.hpp"

namespace qatm {

/// Flattens every patch_size x patch_size patch on a stride grid into a
/// feature of length patch_size^2 * channels, ordered (row, col, channel).
/// With normalize set, each patch is shifted to zero mean and scaled to unit
/// variance so that cosine similarity equals NCC on the raw patches; a patch
/// of zero variance becomes the zero vector. Without it, features hold the
/// raw 0..255 sample values.
FeatureMap extract_raw_patches(const Image& img, std::size_t patch_size, std::size_t stride,
                               bool normalize = true);

// FTM1 container, little-endian:
//   0  magic "FTM1"      16  L (u32)
//   4  version = 1       20  stride_px (u32)
//   8  H (u32)           24  source width (u32)
//   12 W (u32)           28  source height (u32)
//   32 H*W*L float32 values, W fastest within a row, L innermost.
inline constexpr std::size_t kFtmHeaderBytes = 32;
inline constexpr std::uint32_t kFtmVersion = 1;

FeatureMap load_feature_file(const std::filesystem::path& path);
void save_feature_file(const FeatureMap& map, const std::filesystem::path& path);

/// Sub-grid of h x w cells starting at (x, y); pixel metadata follows the cells.
FeatureMap crop_feature_map(const FeatureMap& map, std::size_t x, std::size_t y, std::size_t w,
                            std::size_t h);

}  // namespace qatm
