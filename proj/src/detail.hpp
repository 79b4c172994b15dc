#pragma once

// Internal helpers shared by the grid-propagator translation units.

#include <cstdint>
#include <vector>

#include "ontosim/fft.hpp"
#include "ontosim/grid.hpp"

namespace ontosim::detail {

inline std::vector<int> grid_dims(const GridSpec& g) {
  return std::vector<int>(static_cast<std::size_t>(g.axes()),
                          g.points_per_axis);
}

/// sum_a k_a^2 / (2 m_(particle of a)) per grid cell, in mode order.
/// `axis_mask` (optional) restricts the sum to selected axes.
inline std::vector<double> kinetic_table(const GridSpec& g,
                                         const std::vector<double>& masses,
                                         const std::vector<bool>* axis_mask =
                                             nullptr) {
  const int P = g.points_per_axis;
  const int axes = g.axes();
  std::vector<double> k2(static_cast<std::size_t>(P));
  std::vector<double> table(g.size(), 0.0);
  for (int a = 0; a < axes; ++a) {
    if (axis_mask && !(*axis_mask)[static_cast<std::size_t>(a)]) continue;
    const double m = masses[static_cast<std::size_t>(a / g.dim_per_particle)];
    for (int j = 0; j < P; ++j) {
      double k = fft::wavenumber(j, P, g.extent);
      k2[static_cast<std::size_t>(j)] = k * k / (2.0 * m);
    }
    uint64_t post = 1;
    for (int b = a + 1; b < axes; ++b) post *= static_cast<uint64_t>(P);
    const uint64_t cells = g.size();
    for (uint64_t c = 0; c < cells; ++c)
      table[c] += k2[static_cast<std::size_t>((c / post) % P)];
  }
  return table;
}

}  // namespace ontosim::detail
