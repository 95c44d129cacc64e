#pragma once

#include <cstddef>

namespace qatm {

/// Axis-aligned rectangle; (x, y) is the top-left corner.
struct Box {
  double x = 0.0;
  double y = 0.0;
  double w = 0.0;
  double h = 0.0;

  double area() const noexcept { return w > 0.0 && h > 0.0 ? w * h : 0.0; }
  friend bool operator==(const Box&, const Box&) = default;
};

/// Candidate window on a grid, in cells.
struct Window {
  std::size_t x = 0;
  std::size_t y = 0;
  std::size_t w = 0;
  std::size_t h = 0;

  friend bool operator==(const Window&, const Window&) = default;
};

}  // namespace qatm
