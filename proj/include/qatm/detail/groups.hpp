#pragma once

#include <cstddef>
#include <vector>

#include "qatm/tensor.hpp"

namespace qatm::detail {

/// Flat offsets splitting a tensor into slices along a set of axes. Slice g
/// consists of bases[g] + members[m] for every m. Bases enumerate the
/// remaining axes in row-major order.
struct GroupLayout {
  std::vector<std::size_t> bases;
  std::vector<std::size_t> members;
  Shape outer_shape;
};

GroupLayout make_group_layout(const Shape& shape, const AxisSet& group_axes);

}  // namespace qatm::detail
