#pragma once

// Initial-condition presets.

#include <array>

#include "activefv/grid.hpp"

namespace activefv {

// f = 1/(2 pi): the homogeneous state with unit mass.
inline DensityField uniform_state(const GridSpec& g) {
  return DensityField(g, 1.0 / kTwoPi);
}

// C 1_{|x - a| <= w or |x + a| <= w}, with C chosen for unit mass. Cell
// averages are exact for any alignment of the bump edges.
inline DensityField two_bump(const GridSpec& g, double center_offset,
                             double half_width) {
  if (!(half_width > 0.0)) throw InputError("two_bump half width must be > 0");
  const std::array<Interval, 2> bumps{
      Interval{-center_offset - half_width, -center_offset + half_width},
      Interval{center_offset - half_width, center_offset + half_width}};
  return normalized(x_indicator_init(g, bumps, 1.0));
}

}  // namespace activefv
