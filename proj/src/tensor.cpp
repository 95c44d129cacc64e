#include "qatm/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "qatm/detail/groups.hpp"
#include "qatm/error.hpp"
#include "qatm/parallel.hpp"

namespace qatm {
namespace {

std::size_t checked_volume(const Shape& shape) {
  std::size_t volume = 1;
  for (std::size_t extent : shape) {
    if (extent == 0) throw InvalidArgument("tensor extents must be positive");
    if (volume > std::numeric_limits<std::size_t>::max() / extent) {
      throw InvalidArgument("tensor volume overflows");
    }
    volume *= extent;
  }
  return volume;
}

void require_finite(const Tensor& x, const char* op) {
  for (double v : x.data()) {
    if (!std::isfinite(v)) throw InvalidArgument(std::string(op) + ": non-finite input");
  }
}

// Unit-normalised copy of every cell, in double precision.
std::vector<double> normalized_cells(const FeatureMap& map) {
  const std::size_t dim = map.dim();
  std::vector<double> out(map.cells() * dim, 0.0);
  for (std::size_t c = 0; c < map.cells(); ++c) {
    auto cell = map.cell(c);
    double norm2 = 0.0;
    for (float v : cell) norm2 += static_cast<double>(v) * v;
    if (norm2 <= 0.0) continue;
    const double inv = 1.0 / std::sqrt(norm2);
    for (std::size_t k = 0; k < dim; ++k) out[c * dim + k] = cell[k] * inv;
  }
  return out;
}

}  // namespace

Tensor::Tensor(Shape shape, double fill)
    : shape_(std::move(shape)), data_(checked_volume(shape_), fill) {}

Tensor::Tensor(Shape shape, std::vector<double> values)
    : shape_(std::move(shape)), data_(std::move(values)) {
  if (checked_volume(shape_) != data_.size()) {
    throw ShapeMismatch("tensor data length does not match its shape");
  }
}

Shape Tensor::strides() const {
  Shape s(shape_.size(), 1);
  for (std::size_t i = shape_.size(); i-- > 1;) s[i - 1] = s[i] * shape_[i];
  return s;
}

std::size_t Tensor::offset(std::initializer_list<std::size_t> index) const {
  if (index.size() != shape_.size()) throw ShapeMismatch("index rank does not match tensor rank");
  std::size_t off = 0;
  std::size_t axis = 0;
  for (std::size_t i : index) {
    if (i >= shape_[axis]) throw InvalidArgument("tensor index out of range");
    off = off * shape_[axis] + i;
    ++axis;
  }
  return off;
}

double& Tensor::at(std::initializer_list<std::size_t> index) { return data_[offset(index)]; }
double Tensor::at(std::initializer_list<std::size_t> index) const { return data_[offset(index)]; }

namespace detail {

GroupLayout make_group_layout(const Shape& shape, const AxisSet& group_axes) {
  if (group_axes.empty()) throw InvalidArgument("axis set must not be empty");
  std::vector<bool> grouped(shape.size(), false);
  for (std::size_t axis : group_axes) {
    if (axis >= shape.size()) throw InvalidArgument("axis out of range");
    if (grouped[axis]) throw InvalidArgument("duplicate axis in axis set");
    grouped[axis] = true;
  }

  Shape strides(shape.size(), 1);
  for (std::size_t i = shape.size(); i-- > 1;) strides[i - 1] = strides[i] * shape[i];

  // Row-major enumeration of offsets spanned by the selected axes.
  auto enumerate = [&](bool select) {
    std::vector<std::size_t> offsets{0};
    for (std::size_t axis = 0; axis < shape.size(); ++axis) {
      if (grouped[axis] != select) continue;
      std::vector<std::size_t> next;
      next.reserve(offsets.size() * shape[axis]);
      for (std::size_t base : offsets) {
        for (std::size_t i = 0; i < shape[axis]; ++i) next.push_back(base + i * strides[axis]);
      }
      offsets = std::move(next);
    }
    return offsets;
  };

  GroupLayout layout;
  layout.members = enumerate(true);
  layout.bases = enumerate(false);
  for (std::size_t axis = 0; axis < shape.size(); ++axis) {
    if (!grouped[axis]) layout.outer_shape.push_back(shape[axis]);
  }
  if (layout.members.empty()) throw InvalidArgument("empty group");
  return layout;
}

}  // namespace detail

Tensor cosine_similarity_tensor(const FeatureMap& templ, const FeatureMap& search) {
  if (templ.empty() || search.empty()) throw InvalidArgument("cosine similarity of an empty feature map");
  if (templ.dim() != search.dim()) {
    throw ShapeMismatch("feature dimension mismatch: " + std::to_string(templ.dim()) + " vs " +
                        std::to_string(search.dim()));
  }
  const std::size_t dim = templ.dim();
  const std::size_t nt = templ.cells();
  const std::size_t ns = search.cells();
  const std::vector<double> tn = normalized_cells(templ);
  const std::vector<double> sn = normalized_cells(search);

  Tensor out({templ.height(), templ.width(), search.height(), search.width()});
  double* dst = out.data().data();
  parallel_for(0, nt, [&](std::size_t lo, std::size_t hi) {
    for (std::size_t t = lo; t < hi; ++t) {
      const double* a = tn.data() + t * dim;
      double* row = dst + t * ns;
      for (std::size_t s = 0; s < ns; ++s) {
        const double* b = sn.data() + s * dim;
        double dot = 0.0;
        for (std::size_t k = 0; k < dim; ++k) dot += a[k] * b[k];
        row[s] = std::clamp(dot, -1.0, 1.0);
      }
    }
  });
  return out;
}

Tensor grouped_softmax(const Tensor& x, const AxisSet& group_axes, double alpha) {
  if (!(alpha > 0.0) || !std::isfinite(alpha)) throw InvalidArgument("alpha must be positive and finite");
  require_finite(x, "grouped_softmax");
  const auto layout = detail::make_group_layout(x.shape(), group_axes);

  Tensor out(x.shape());
  const double* src = x.data().data();
  double* dst = out.data().data();
  const auto& members = layout.members;
  parallel_for(0, layout.bases.size(), [&](std::size_t lo, std::size_t hi) {
    for (std::size_t g = lo; g < hi; ++g) {
      const std::size_t base = layout.bases[g];
      double peak = -std::numeric_limits<double>::infinity();
      for (std::size_t m : members) peak = std::max(peak, src[base + m]);
      double sum = 0.0;
      for (std::size_t m : members) {
        const double e = std::exp(alpha * (src[base + m] - peak));
        dst[base + m] = e;
        sum += e;
      }
      const double inv = 1.0 / sum;
      for (std::size_t m : members) dst[base + m] *= inv;
    }
  }, 16);
  return out;
}

Tensor grouped_max(const Tensor& x, const AxisSet& reduce_axes) {
  if (x.size() == 0) throw InvalidArgument("grouped_max of an empty tensor");
  const auto layout = detail::make_group_layout(x.shape(), reduce_axes);

  Tensor out(layout.outer_shape);
  const double* src = x.data().data();
  double* dst = out.data().data();
  parallel_for(0, layout.bases.size(), [&](std::size_t lo, std::size_t hi) {
    for (std::size_t g = lo; g < hi; ++g) {
      const std::size_t base = layout.bases[g];
      double best = -std::numeric_limits<double>::infinity();
      for (std::size_t m : layout.members) best = std::max(best, src[base + m]);
      dst[g] = best;
    }
  }, 16);
  return out;
}

}  // namespace qatm
