#pragma once

#include <cstdint>
#include <filesystem>

#include "qatm/qatm.hpp"

namespace qatm {

/// Writes the map at grid resolution as an 8-bit PGM, linearly scaled so that
/// min -> 0 and max -> 255 (a constant map writes all zeros), plus a sidecar
/// "<path>.json" holding min, max, width, height, stride_px and side.
void write_heatmap(const QualityMap& map, std::uint32_t stride_px, const std::filesystem::path& pgm_path);

}  // namespace qatm
