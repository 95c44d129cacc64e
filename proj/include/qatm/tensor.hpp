#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

#include "qatm/feature_map.hpp"

namespace qatm {

using Shape = std::vector<std::size_t>;
using AxisSet = std::vector<std::size_t>;

/// Dense row-major array of doubles with strictly positive extents.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, double fill = 0.0);
  Tensor(Shape shape, std::vector<double> values);

  const Shape& shape() const noexcept { return shape_; }
  std::size_t rank() const noexcept { return shape_.size(); }
  std::size_t size() const noexcept { return data_.size(); }
  std::size_t extent(std::size_t axis) const { return shape_.at(axis); }
  Shape strides() const;

  std::span<const double> data() const noexcept { return data_; }
  std::span<double> data() noexcept { return data_; }

  double& operator[](std::size_t i) noexcept { return data_[i]; }
  double operator[](std::size_t i) const noexcept { return data_[i]; }

  double& at(std::initializer_list<std::size_t> index);
  double at(std::initializer_list<std::size_t> index) const;

  friend bool operator==(const Tensor&, const Tensor&) = default;

 private:
  std::size_t offset(std::initializer_list<std::size_t> index) const;

  Shape shape_;
  std::vector<double> data_;
};

/// Cosine similarity of every (template cell, search cell) pair, shaped
/// [Ht, Wt, Hs, Ws]. Zero-norm vectors have similarity 0 with everything.
Tensor cosine_similarity_tensor(const FeatureMap& templ, const FeatureMap& search);

/// Softmax of alpha * x over each slice spanned by group_axes. Every slice
/// sums to one.
Tensor grouped_softmax(const Tensor& x, const AxisSet& group_axes, double alpha);

/// Maximum over reduce_axes; the result keeps the remaining axes in order.
Tensor grouped_max(const Tensor& x, const AxisSet& reduce_axes);

}  // namespace qatm
