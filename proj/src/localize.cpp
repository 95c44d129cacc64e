#include "qatm/localize.hpp"

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "qatm/error.hpp"
#include "qatm/parallel.hpp"

namespace qatm {

std::string_view to_string(Method m) noexcept {
  switch (m) {
    case Method::kQatm: return "qatm";
    case Method::kSsd: return "ssd";
    case Method::kNcc: return "ncc";
    case Method::kBupm: return "bupm";
  }
  return "unknown";
}

Method parse_method(std::string_view name) {
  if (name == "qatm") return Method::kQatm;
  if (name == "ssd") return Method::kSsd;
  if (name == "ncc") return Method::kNcc;
  if (name == "bupm") return Method::kBupm;
  throw InvalidArgument("unknown method '" + std::string(name) + "'");
}

MatchResult best_window(const QualityMap& map, std::size_t w, std::size_t h, std::uint32_t stride_px) {
  if (map.values.rank() != 2) throw ShapeMismatch("quality map must be two-dimensional");
  const std::size_t H = map.height();
  const std::size_t W = map.width();
  if (w == 0 || h == 0) throw InvalidArgument("window extents must be positive");
  if (w > W || h > H) throw InvalidArgument("window larger than map");

  // sat[(y)(W+1) + x] = sum of map over [0, y) x [0, x).
  std::vector<double> sat((H + 1) * (W + 1), 0.0);
  double magnitude = 0.0;
  for (std::size_t y = 0; y < H; ++y) {
    double row = 0.0;
    for (std::size_t x = 0; x < W; ++x) {
      const double v = map.at(y, x);
      magnitude += std::abs(v);
      row += v;
      sat[(y + 1) * (W + 1) + x + 1] = sat[y * (W + 1) + x + 1] + row;
    }
  }
  auto window_sum = [&](std::size_t x, std::size_t y) {
    return sat[(y + h) * (W + 1) + x + w] - sat[y * (W + 1) + x + w] - sat[(y + h) * (W + 1) + x] +
           sat[y * (W + 1) + x];
  };

  // Table differences carry rounding noise, so equal windows can differ in the
  // last bits; anything within that noise counts as a tie.
  const double tie_eps = 1e-12 * std::max(magnitude, 1.0);
  double best = -std::numeric_limits<double>::infinity();
  for (std::size_t y = 0; y + h <= H; ++y) {
    for (std::size_t x = 0; x + w <= W; ++x) best = std::max(best, window_sum(x, y));
  }
  Window win{};
  bool found = false;
  for (std::size_t y = 0; y + h <= H && !found; ++y) {
    for (std::size_t x = 0; x + w <= W; ++x) {
      if (window_sum(x, y) >= best - tie_eps) {
        win = {x, y, w, h};
        found = true;
        break;
      }
    }
  }

  // Report the exact sum for the chosen window.
  double score = 0.0;
  for (std::size_t y = win.y; y < win.y + h; ++y) {
    for (std::size_t x = win.x; x < win.x + w; ++x) score += map.at(y, x);
  }

  MatchResult r;
  r.window_grid = win;
  r.window_px = {static_cast<double>(win.x * stride_px), static_cast<double>(win.y * stride_px),
                 static_cast<double>(w * stride_px), static_cast<double>(h * stride_px)};
  r.score = score;
  r.mean_score = score / static_cast<double>(w * h);
  r.response = map;
  return r;
}

namespace {

void check_placement(const FeatureMap& t, const FeatureMap& s) {
  if (t.empty() || s.empty()) throw InvalidArgument("empty feature map");
  if (t.dim() != s.dim()) throw ShapeMismatch("feature dimension mismatch");
  if (t.height() > s.height() || t.width() > s.width()) {
    throw InvalidArgument("template grid larger than search grid");
  }
}

template <typename PlacementScore>
QualityMap score_placements(const FeatureMap& t, const FeatureMap& s, PlacementScore&& score) {
  check_placement(t, s);
  const std::size_t ph = s.height() - t.height() + 1;
  const std::size_t pw = s.width() - t.width() + 1;
  Tensor values({ph, pw});
  parallel_for(0, ph, [&](std::size_t lo, std::size_t hi) {
    for (std::size_t y = lo; y < hi; ++y) {
      for (std::size_t x = 0; x < pw; ++x) values[y * pw + x] = score(x, y);
    }
  });
  return {std::move(values), MapSide::kSearch};
}

}  // namespace

QualityMap score_ssd(const FeatureMap& t, const FeatureMap& s) {
  const std::size_t row_len = t.width() * t.dim();
  return score_placements(t, s, [&](std::size_t px, std::size_t py) {
    double ssd = 0.0;
    for (std::size_t r = 0; r < t.height(); ++r) {
      const float* a = t.cell(r, 0).data();
      const float* b = s.cell(py + r, px).data();
      for (std::size_t k = 0; k < row_len; ++k) {
        const double d = static_cast<double>(a[k]) - b[k];
        ssd += d * d;
      }
    }
    return -ssd;
  });
}

QualityMap score_ncc(const FeatureMap& t, const FeatureMap& s) {
  check_placement(t, s);
  const std::size_t row_len = t.width() * t.dim();
  const double n = static_cast<double>(t.height() * row_len);

  double t_mean = 0.0;
  for (float v : t.data()) t_mean += v;
  t_mean /= n;
  double t_var = 0.0;
  for (float v : t.data()) t_var += (v - t_mean) * (v - t_mean);

  return score_placements(t, s, [&](std::size_t px, std::size_t py) {
    double s_sum = 0.0;
    for (std::size_t r = 0; r < t.height(); ++r) {
      const float* b = s.cell(py + r, px).data();
      for (std::size_t k = 0; k < row_len; ++k) s_sum += b[k];
    }
    const double s_mean = s_sum / n;
    double cross = 0.0;
    double s_var = 0.0;
    for (std::size_t r = 0; r < t.height(); ++r) {
      const float* a = t.cell(r, 0).data();
      const float* b = s.cell(py + r, px).data();
      for (std::size_t k = 0; k < row_len; ++k) {
        const double ds = b[k] - s_mean;
        cross += (a[k] - t_mean) * ds;
        s_var += ds * ds;
      }
    }
    const double denom = std::sqrt(t_var * s_var);
    if (denom <= 1e-12 * n) return 0.0;
    return std::clamp(cross / denom, -1.0, 1.0);
  });
}

QualityMap score_bupm(const Tensor& rho) {
  if (rho.rank() != 4) throw ShapeMismatch("similarity tensor must have rank 4 [Ht, Wt, Hs, Ws]");
  return {grouped_max(rho, kTemplateAxes), MapSide::kSearch};
}

}  // namespace qatm
