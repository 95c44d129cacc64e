#pragma once

#include <cstddef>
#include <string_view>

#include "qatm/feature_map.hpp"
#include "qatm/geometry.hpp"
#include "qatm/qatm.hpp"

namespace qatm {

enum class Method { kQatm, kSsd, kNcc, kBupm };

std::string_view to_string(Method m) noexcept;
/// Parses "qatm", "ssd", "ncc" or "bupm"; throws InvalidArgument otherwise.
Method parse_method(std::string_view name);

struct MatchResult {
  Window window_grid;
  Box window_px;
  double score = 0.0;       // sum of the response inside window_grid
  double mean_score = 0.0;  // score / window area
  QualityMap response;
  Method method = Method::kQatm;
  double elapsed_ms = 0.0;
};

/// Window of w x h cells maximising the sum of the map, found through a
/// summed-area table. Ties go to the smallest y, then the smallest x.
/// window_px is the grid window scaled by stride_px.
MatchResult best_window(const QualityMap& map, std::size_t w, std::size_t h,
                        std::uint32_t stride_px = 1);

/// Negated sum of squared differences for every placement of the template
/// grid inside the search grid; shape [Hs - Ht + 1, Ws - Wt + 1].
QualityMap score_ssd(const FeatureMap& templ, const FeatureMap& search);

/// Zero-mean normalised cross-correlation per placement, in [-1, 1]. A
/// placement with zero variance on either side scores 0.
QualityMap score_ncc(const FeatureMap& templ, const FeatureMap& search);

/// Best raw similarity of each search cell over all template cells.
QualityMap score_bupm(const Tensor& rho);

}  // namespace qatm
