#pragma once

#include <cstdint>
#include <vector>

namespace ontosim {

enum class Boundary { periodic, box };

/// Geometry of the configuration-space grid: N particles in d dimensions,
/// P points per axis over a centred extent [-L/2, L/2).  The flattened grid
/// has P^(N*d) cells laid out row-major with axis 0 slowest.
struct GridSpec {
  int dim_per_particle = 1;          // d, spatial dimensions per particle
  int particles = 1;                 // N
  int points_per_axis = 8;           // P, shared by all axes
  double extent = 1.0;               // L, shared by all axes
  Boundary boundary = Boundary::periodic;
  uint64_t memory_budget = uint64_t(1) << 28;  // max complex amplitudes

  /// Throws ValidationError listing every violated constraint.
  void validate() const;

  int axes() const { return dim_per_particle * particles; }
  double spacing() const { return extent / points_per_axis; }
  double min_coord() const { return -extent / 2.0; }
  double axis_coord(int index) const { return min_coord() + index * spacing(); }

  /// Number of grid cells, P^(N*d).  validate() guarantees it fits the
  /// memory budget.
  uint64_t size() const;

  /// Volume of one cell, spacing^(N*d).
  double cell_volume() const;

  /// Cell index along one axis for coordinate x: periodic wrap or box clamp.
  int axis_cell(double x) const;

  /// Row-major flat index from per-axis indices (size axes()).
  uint64_t flatten(const std::vector<int>& idx) const;

  /// Inverse of flatten().
  std::vector<int> unflatten(uint64_t flat) const;

  bool same_geometry(const GridSpec& other) const {
    return dim_per_particle == other.dim_per_particle &&
           particles == other.particles &&
           points_per_axis == other.points_per_axis &&
           extent == other.extent && boundary == other.boundary;
  }
};

/// A point in configuration space: N*d coordinates, particle-major.
struct Configuration {
  std::vector<double> q;
};

/// Wraps (periodic) or clamps (box) every coordinate into the grid extent.
Configuration canonicalize(const Configuration& c, const GridSpec& grid);

struct TimedConfiguration {
  double t = 0.0;
  Configuration config;
};

/// Time-ordered samples of one configuration-space path.
struct Trajectory {
  std::vector<TimedConfiguration> samples;
};

}  // namespace ontosim
