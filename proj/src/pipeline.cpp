#include "qatm/pipeline.hpp"

#include <chrono>

#include "qatm/error.hpp"
#include "qatm/tensor.hpp"

namespace qatm {

MatchOutcome match(const FeatureMap& templ, const FeatureMap& search, const MatchOptions& options) {
  options.params.validate();
  if (templ.empty() || search.empty()) throw InvalidArgument("empty feature map");
  if (templ.dim() != search.dim()) throw ShapeMismatch("feature dimension mismatch between template and search");
  if (templ.height() > search.height() || templ.width() > search.width()) {
    throw InvalidArgument("template grid larger than search grid");
  }

  const auto start = std::chrono::steady_clock::now();
  MatchOutcome out;
  const std::size_t tw = templ.width();
  const std::size_t th = templ.height();
  switch (options.method) {
    case Method::kQatm: {
      const Tensor rho = cosine_similarity_tensor(templ, search);
      auto maps = quality_maps(likelihoods(rho, options.params));
      out.result = best_window(maps.search, tw, th, search.stride_px());
      out.template_map = std::move(maps.templ);
      break;
    }
    case Method::kBupm: {
      const Tensor rho = cosine_similarity_tensor(templ, search);
      out.result = best_window(score_bupm(rho), tw, th, search.stride_px());
      break;
    }
    case Method::kSsd:
    case Method::kNcc: {
      QualityMap placements =
          options.method == Method::kSsd ? score_ssd(templ, search) : score_ncc(templ, search);
      out.result = best_window(placements, 1, 1, search.stride_px());
      out.result.window_grid.w = tw;
      out.result.window_grid.h = th;
      break;
    }
  }
  const auto stop = std::chrono::steady_clock::now();

  out.result.method = options.method;
  out.result.window_px.w = templ.source_width();
  out.result.window_px.h = templ.source_height();
  out.result.elapsed_ms = std::chrono::duration<double, std::milli>(stop - start).count();
  return out;
}

}  // namespace qatm
