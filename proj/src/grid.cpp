#include "ontosim/grid.hpp"

#include <cmath>
#include <string>

#include "ontosim/errors.hpp"
#include "ontosim/numeric.hpp"

namespace ontosim {

void GridSpec::validate() const {
  std::vector<std::string> bad;
  if (dim_per_particle < 1 || dim_per_particle > 3)
    bad.push_back("dim_per_particle must be in [1,3], got " +
                  std::to_string(dim_per_particle));
  if (particles < 1)
    bad.push_back("particles must be >= 1, got " + std::to_string(particles));
  if (points_per_axis < 8)
    bad.push_back("points_per_axis must be >= 8, got " +
                  std::to_string(points_per_axis));
  if (!(extent > 0.0))
    bad.push_back("extent must be > 0, got " + std::to_string(extent));
  if (memory_budget == 0) bad.push_back("memory_budget must be > 0");
  if (bad.empty()) {
    // Overflow-safe P^(N*d) vs budget check.
    uint64_t cells = 1;
    bool over = false;
    for (int a = 0; a < axes(); ++a) {
      uint64_t next = cells * static_cast<uint64_t>(points_per_axis);
      if (next / static_cast<uint64_t>(points_per_axis) != cells ||
          next > memory_budget) {
        over = true;
        break;
      }
      cells = next;
    }
    if (over)
      bad.push_back("grid of " + std::to_string(points_per_axis) + "^" +
                    std::to_string(axes()) + " cells exceeds memory budget " +
                    std::to_string(memory_budget));
  }
  if (!bad.empty()) throw ValidationError(std::move(bad));
}

uint64_t GridSpec::size() const {
  uint64_t cells = 1;
  for (int a = 0; a < axes(); ++a)
    cells *= static_cast<uint64_t>(points_per_axis);
  return cells;
}

double GridSpec::cell_volume() const {
  return std::pow(spacing(), static_cast<double>(axes()));
}

int GridSpec::axis_cell(double x) const {
  double rel = (x - min_coord()) / spacing();
  int idx = static_cast<int>(std::floor(rel));
  if (boundary == Boundary::periodic) {
    idx %= points_per_axis;
    if (idx < 0) idx += points_per_axis;
  } else {
    if (idx < 0) idx = 0;
    if (idx >= points_per_axis) idx = points_per_axis - 1;
  }
  return idx;
}

uint64_t GridSpec::flatten(const std::vector<int>& idx) const {
  uint64_t flat = 0;
  for (int a = 0; a < axes(); ++a)
    flat = flat * static_cast<uint64_t>(points_per_axis) +
           static_cast<uint64_t>(idx[static_cast<std::size_t>(a)]);
  return flat;
}

std::vector<int> GridSpec::unflatten(uint64_t flat) const {
  std::vector<int> idx(static_cast<std::size_t>(axes()));
  for (int a = axes() - 1; a >= 0; --a) {
    idx[static_cast<std::size_t>(a)] =
        static_cast<int>(flat % static_cast<uint64_t>(points_per_axis));
    flat /= static_cast<uint64_t>(points_per_axis);
  }
  return idx;
}

Configuration canonicalize(const Configuration& c, const GridSpec& grid) {
  Configuration out = c;
  const double lo = grid.min_coord();
  const double span = grid.extent;
  for (double& x : out.q) {
    if (grid.boundary == Boundary::periodic) {
      x = wrap_periodic(x, lo, span);
    } else {
      if (x < lo) x = lo;
      if (x > lo + span) x = lo + span;
    }
  }
  return out;
}

}  // namespace ontosim
