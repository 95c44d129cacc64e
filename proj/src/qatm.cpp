#include "qatm/qatm.hpp"

#include <cmath>

#include "qatm/detail/groups.hpp"
#include "qatm/error.hpp"
#include "qatm/parallel.hpp"

namespace qatm {
namespace {

void require_rank4(const Tensor& rho) {
  if (rho.rank() != 4) throw ShapeMismatch("similarity tensor must have rank 4 [Ht, Wt, Hs, Ws]");
}

// For each slice along axes: out[i] += scale * p[i] * (v[i] - sum_slice(p * v)).
// With v = rho this is the derivative of a softmax w.r.t. its temperature;
// with v = upstream gradient it is the softmax vector-Jacobian product.
void accumulate_centered(const Tensor& p, const Tensor& v, const Tensor* weight, const AxisSet& axes,
                         double scale, Tensor& out) {
  const auto layout = detail::make_group_layout(p.shape(), axes);
  const double* pp = p.data().data();
  const double* vv = v.data().data();
  const double* ww = weight ? weight->data().data() : nullptr;
  double* dst = out.data().data();
  parallel_for(0, layout.bases.size(), [&](std::size_t lo, std::size_t hi) {
    for (std::size_t g = lo; g < hi; ++g) {
      const std::size_t base = layout.bases[g];
      double mean = 0.0;
      for (std::size_t m : layout.members) {
        const std::size_t i = base + m;
        mean += pp[i] * vv[i] * (ww ? ww[i] : 1.0);
      }
      for (std::size_t m : layout.members) {
        const std::size_t i = base + m;
        dst[i] += scale * pp[i] * (vv[i] * (ww ? ww[i] : 1.0) - mean);
      }
    }
  }, 16);
}

}  // namespace

void QatmParams::validate() const {
  if (!(alpha > 0.0) || !std::isfinite(alpha)) throw InvalidArgument("alpha must be positive and finite");
}

QatmTensor likelihoods(const Tensor& rho, const QatmParams& params) {
  params.validate();
  require_rank4(rho);
  QatmTensor q;
  q.l_t_given_s = grouped_softmax(rho, kTemplateAxes, params.alpha);
  q.l_s_given_t = grouped_softmax(rho, kSearchAxes, params.alpha);
  q.qatm = Tensor(rho.shape());
  const auto a = q.l_t_given_s.data();
  const auto b = q.l_s_given_t.data();
  auto out = q.qatm.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] * b[i];
  return q;
}

QualityMaps quality_maps(const QatmTensor& q) {
  require_rank4(q.qatm);
  return {QualityMap{grouped_max(q.qatm, kTemplateAxes), MapSide::kSearch},
          QualityMap{grouped_max(q.qatm, kSearchAxes), MapSide::kTemplate}};
}

Tensor qatm_grad_alpha(const Tensor& rho, const QatmParams& params) {
  params.validate();
  require_rank4(rho);
  const Tensor a = grouped_softmax(rho, kTemplateAxes, params.alpha);
  const Tensor b = grouped_softmax(rho, kSearchAxes, params.alpha);

  // dA/dalpha = A (rho - <rho>_A), likewise for B; product rule on A * B.
  Tensor da(rho.shape());
  Tensor db(rho.shape());
  accumulate_centered(a, rho, nullptr, kTemplateAxes, 1.0, da);
  accumulate_centered(b, rho, nullptr, kSearchAxes, 1.0, db);

  Tensor grad(rho.shape());
  for (std::size_t i = 0; i < grad.size(); ++i) grad[i] = da[i] * b[i] + a[i] * db[i];
  return grad;
}

Tensor qatm_grad_rho(const Tensor& rho, const QatmParams& params, const Tensor& upstream) {
  params.validate();
  require_rank4(rho);
  if (upstream.shape() != rho.shape()) throw ShapeMismatch("upstream gradient shape differs from rho");
  const Tensor a = grouped_softmax(rho, kTemplateAxes, params.alpha);
  const Tensor b = grouped_softmax(rho, kSearchAxes, params.alpha);

  // Q = A * B: the cotangent reaching A is G * B and the one reaching B is G * A.
  // Softmax VJP: g_x = alpha * p * (g_p - sum(p * g_p)).
  Tensor grad(rho.shape());
  accumulate_centered(a, upstream, &b, kTemplateAxes, params.alpha, grad);
  accumulate_centered(b, upstream, &a, kSearchAxes, params.alpha, grad);
  return grad;
}

}  // namespace qatm
