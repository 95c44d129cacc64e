#pragma once

#include <functional>
#include <optional>

#include "qatm/feature_map.hpp"
#include "qatm/localize.hpp"
#include "qatm/qatm.hpp"

namespace qatm {

struct MatchOptions {
  Method method = Method::kQatm;
  QatmParams params;
};

struct MatchOutcome {
  MatchResult result;
  /// Per-template-cell quality; only produced by the QATM method.
  std::optional<QualityMap> template_map;
};

/// Full matching run on precomputed features: similarity, scoring and
/// localisation. The template's grid extents give the window size and its
/// source size gives the pixel box. elapsed_ms covers exactly this work.
MatchOutcome match(const FeatureMap& templ, const FeatureMap& search, const MatchOptions& options = {});

}  // namespace qatm
