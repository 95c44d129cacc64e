#pragma once

// Brute-force reference implementations used as test oracles. They work on
// plain nested loops over explicit indices and share no code with the
// library kernels they check.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <random>
#include <vector>

#include "qatm/feature_map.hpp"
#include "qatm/tensor.hpp"

namespace qatm::test {

/// rho[t][s] over flattened template / search cells.
using Matrix = std::vector<std::vector<double>>;

inline Matrix to_matrix(const Tensor& rho) {
  const std::size_t nt = rho.extent(0) * rho.extent(1);
  const std::size_t ns = rho.extent(2) * rho.extent(3);
  Matrix m(nt, std::vector<double>(ns));
  for (std::size_t t = 0; t < nt; ++t) {
    for (std::size_t s = 0; s < ns; ++s) m[t][s] = rho[t * ns + s];
  }
  return m;
}

/// Textbook softmax likelihoods: L(t|s) normalised over t, L(s|t) over s.
template <typename Real>
struct BasicOracleQatm {
  using M = std::vector<std::vector<Real>>;
  M l_t_given_s, l_s_given_t, qatm;
};
using OracleQatm = BasicOracleQatm<double>;

template <typename Real>
BasicOracleQatm<Real> basic_oracle_qatm(const std::vector<std::vector<Real>>& rho, Real alpha) {
  using std::exp;
  const std::size_t nt = rho.size();
  const std::size_t ns = rho[0].size();
  const std::vector<std::vector<Real>> zero(nt, std::vector<Real>(ns));
  BasicOracleQatm<Real> o{zero, zero, zero};
  for (std::size_t s = 0; s < ns; ++s) {
    Real mx = -std::numeric_limits<Real>::infinity();
    for (std::size_t t = 0; t < nt; ++t) mx = std::max(mx, rho[t][s]);
    Real z = 0;
    for (std::size_t t = 0; t < nt; ++t) z += exp(alpha * (rho[t][s] - mx));
    for (std::size_t t = 0; t < nt; ++t) o.l_t_given_s[t][s] = exp(alpha * (rho[t][s] - mx)) / z;
  }
  for (std::size_t t = 0; t < nt; ++t) {
    Real mx = -std::numeric_limits<Real>::infinity();
    for (std::size_t s = 0; s < ns; ++s) mx = std::max(mx, rho[t][s]);
    Real z = 0;
    for (std::size_t s = 0; s < ns; ++s) z += exp(alpha * (rho[t][s] - mx));
    for (std::size_t s = 0; s < ns; ++s) o.l_s_given_t[t][s] = exp(alpha * (rho[t][s] - mx)) / z;
  }
  for (std::size_t t = 0; t < nt; ++t) {
    for (std::size_t s = 0; s < ns; ++s) o.qatm[t][s] = o.l_t_given_s[t][s] * o.l_s_given_t[t][s];
  }
  return o;
}

inline OracleQatm oracle_qatm(const Matrix& rho, double alpha) { return basic_oracle_qatm<double>(rho, alpha); }

// Finite differences run in extended precision: near-saturated instances have
// gradients around 1e-9, below what a double-precision difference quotient
// with h = 1e-4 can resolve.
using Wide = long double;
using WideMatrix = std::vector<std::vector<Wide>>;

inline WideMatrix widen(const Matrix& m) {
  WideMatrix w(m.size());
  for (std::size_t i = 0; i < m.size(); ++i) w[i].assign(m[i].begin(), m[i].end());
  return w;
}

inline Wide wide_weighted_qatm(const WideMatrix& rho, Wide alpha, const WideMatrix& upstream) {
  const auto q = basic_oracle_qatm<Wide>(rho, alpha).qatm;
  Wide sum = 0;
  for (std::size_t t = 0; t < rho.size(); ++t) {
    for (std::size_t s = 0; s < rho[0].size(); ++s) sum += upstream[t][s] * q[t][s];
  }
  return sum;
}

/// sum_p upstream[p] * qatm[p] evaluated by the oracle.
inline double oracle_weighted_qatm(const Matrix& rho, double alpha, const Matrix& upstream) {
  return static_cast<double>(wide_weighted_qatm(widen(rho), alpha, widen(upstream)));
}

/// Central finite difference of every qatm entry with respect to alpha.
inline Matrix fd_grad_alpha(const Matrix& rho, double alpha, double h) {
  const WideMatrix r = widen(rho);
  const auto plus = basic_oracle_qatm<Wide>(r, Wide(alpha) + h).qatm;
  const auto minus = basic_oracle_qatm<Wide>(r, Wide(alpha) - h).qatm;
  Matrix g = rho;
  for (std::size_t t = 0; t < g.size(); ++t) {
    for (std::size_t s = 0; s < g[0].size(); ++s) g[t][s] = static_cast<double>((plus[t][s] - minus[t][s]) / (2 * Wide(h)));
  }
  return g;
}

/// Central finite difference of sum(upstream * qatm) with respect to each rho entry.
inline Matrix fd_grad_rho(const Matrix& rho, double alpha, const Matrix& upstream, double h) {
  Matrix g = rho;
  WideMatrix work = widen(rho);
  const WideMatrix up = widen(upstream);
  for (std::size_t t = 0; t < rho.size(); ++t) {
    for (std::size_t s = 0; s < rho[0].size(); ++s) {
      work[t][s] = Wide(rho[t][s]) + h;
      const Wide fp = wide_weighted_qatm(work, alpha, up);
      work[t][s] = Wide(rho[t][s]) - h;
      const Wide fm = wide_weighted_qatm(work, alpha, up);
      work[t][s] = rho[t][s];
      g[t][s] = static_cast<double>((fp - fm) / (2 * Wide(h)));
    }
  }
  return g;
}

/// max_i |a_i - b_i| / max_i |b_i| (the max-norm relative error).
inline double max_relative_error(const Tensor& a, const Matrix& b) {
  const std::size_t ns = b[0].size();
  double err = 0.0, scale = 0.0;
  for (std::size_t t = 0; t < b.size(); ++t) {
    for (std::size_t s = 0; s < ns; ++s) {
      err = std::max(err, std::abs(a[t * ns + s] - b[t][s]));
      scale = std::max(scale, std::abs(b[t][s]));
    }
  }
  return scale > 0.0 ? err / scale : err;
}

/// Naive cosine similarity of two vectors; 0 if either has zero norm.
inline double oracle_cosine(std::span<const float> a, std::span<const float> b) {
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    dot += double(a[k]) * b[k];
    na += double(a[k]) * a[k];
    nb += double(b[k]) * b[k];
  }
  if (na == 0.0 || nb == 0.0) return 0.0;
  return dot / std::sqrt(na * nb);
}

/// Exhaustive search for the w x h window with the largest sum; first
/// maximum in (y, x) order wins.
struct OracleWindow {
  std::size_t x = 0, y = 0;
  double sum = -std::numeric_limits<double>::infinity();
};

inline OracleWindow oracle_best_window(const std::vector<std::vector<double>>& map, std::size_t w, std::size_t h) {
  OracleWindow best;
  for (std::size_t y = 0; y + h <= map.size(); ++y) {
    for (std::size_t x = 0; x + w <= map[0].size(); ++x) {
      double sum = 0.0;
      for (std::size_t dy = 0; dy < h; ++dy) {
        for (std::size_t dx = 0; dx < w; ++dx) sum += map[y + dy][x + dx];
      }
      if (sum > best.sum) best = {x, y, sum};
    }
  }
  return best;
}

inline Tensor random_tensor(const Shape& shape, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
  Tensor t(shape);
  std::uniform_real_distribution<double> u(lo, hi);
  for (auto& v : t.data()) v = u(rng);
  return t;
}

inline FeatureMap random_feature_map(std::size_t h, std::size_t w, std::size_t dim, std::mt19937_64& rng) {
  std::normal_distribution<float> n(0.0f, 1.0f);
  std::vector<float> data(h * w * dim);
  for (auto& v : data) v = n(rng);
  return FeatureMap(h, w, dim, std::move(data));
}

}  // namespace qatm::test
