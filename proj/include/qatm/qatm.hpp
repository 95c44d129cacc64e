#pragma once

#include <cstddef>

#include "qatm/tensor.hpp"

namespace qatm {

/// Softmax temperature used when none is given.
inline constexpr double kDefaultAlpha = 28.4;

struct QatmParams {
  double alpha = kDefaultAlpha;

  /// Throws InvalidArgument unless alpha is positive and finite.
  void validate() const;
};

/// Pairwise matching likelihoods, all shaped [Ht, Wt, Hs, Ws].
///   l_t_given_s: softmax over the template axes for each search cell.
///   l_s_given_t: softmax over the search axes for each template cell.
///   qatm:        their elementwise product.
struct QatmTensor {
  Tensor l_t_given_s;
  Tensor l_s_given_t;
  Tensor qatm;
};

enum class MapSide { kSearch, kTemplate };

/// Per-cell matching quality over one image.
struct QualityMap {
  Tensor values;  // [H, W]
  MapSide side = MapSide::kSearch;

  std::size_t height() const { return values.extent(0); }
  std::size_t width() const { return values.extent(1); }
  double at(std::size_t y, std::size_t x) const { return values[y * width() + x]; }
};

struct QualityMaps {
  QualityMap search;
  QualityMap templ;
};

// Axis layout of a similarity tensor [Ht, Wt, Hs, Ws].
inline const AxisSet kTemplateAxes{0, 1};
inline const AxisSet kSearchAxes{2, 3};

QatmTensor likelihoods(const Tensor& rho, const QatmParams& params);

/// search map: max over template cells of qatm; template map: max over search cells.
QualityMaps quality_maps(const QatmTensor& q);

/// d qatm / d alpha for every pair.
Tensor qatm_grad_alpha(const Tensor& rho, const QatmParams& params);

/// Vector-Jacobian product: sum over all pairs p of upstream[p] * d qatm[p] / d rho.
Tensor qatm_grad_rho(const Tensor& rho, const QatmParams& params, const Tensor& upstream);

}  // namespace qatm
