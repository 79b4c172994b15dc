#pragma once

#include <complex>
#include <cstdint>
#include <vector>

#include "ontosim/grid.hpp"
#include "ontosim/numeric.hpp"
#include "ontosim/rng.hpp"

namespace ontosim {

/// Wave function on the configuration grid.  Amplitudes are stored
/// spin-major: block s (s in [0, spin_dims^N)) holds the full grid for that
/// joint spin index, row-major in the grid axes.  Units are hbar = 1
/// throughout; amplitudes carry continuum normalization, i.e.
/// sum |psi|^2 * cell_volume == 1 for a normalized state.
struct WaveFunction {
  GridSpec grid;
  int spin_dims = 1;  // components per particle: 1 (spinless) or 2
  double time = 0.0;
  std::vector<cx> amplitudes;

  int spin_states() const {
    int s = 1;
    for (int i = 0; i < grid.particles; ++i) s *= spin_dims;
    return s;
  }
  uint64_t grid_size() const { return grid.size(); }

  cx& at(int spin, uint64_t cell) {
    return amplitudes[static_cast<uint64_t>(spin) * grid_size() + cell];
  }
  cx at(int spin, uint64_t cell) const {
    return amplitudes[static_cast<uint64_t>(spin) * grid_size() + cell];
  }
};

/// Allocates a zeroed state on the grid; validates the grid and spin_dims.
WaveFunction make_state(const GridSpec& grid, int spin_dims = 1);

/// Quadrature L2 norm, sqrt(sum |psi|^2 * cell_volume).
double norm(const WaveFunction& psi);

/// Returns psi scaled to unit norm.  A state whose norm is already within
/// 1e-12 of 1 is returned unchanged, which makes normalize(normalize(x))
/// bitwise identical to normalize(x).  Throws ZeroNorm below 1e-300.
WaveFunction normalize(const WaveFunction& psi);

/// |psi|^2 summed over spin, one value per grid cell (continuum density:
/// multiply by cell volume to get probabilities).
std::vector<double> probability_density(const WaveFunction& psi);

/// Position density of one particle: all other axes integrated out.
/// Length P^d, normalized so sum * spacing^d == 1 for a unit state.
std::vector<double> marginal_density(const WaveFunction& psi, int particle);

/// Draws a configuration from |psi|^2 by inverse CDF over cells plus a
/// uniform jitter inside the chosen cell.
Configuration sample_configuration(const WaveFunction& psi, Rng& rng);

/// Batched version: builds the cell CDF once.
std::vector<Configuration> sample_configurations(const WaveFunction& psi,
                                                 int count, Rng& rng);

/// <phi|psi> with quadrature weights (conjugate-linear in phi).
cx inner_product(const WaveFunction& phi, const WaveFunction& psi);

/// Normalized Gaussian packet; centers/widths/momenta have one entry per
/// axis (particle-major).  widths are the standard deviations of |psi|^2.
WaveFunction gaussian_packet(const GridSpec& grid,
                             const std::vector<double>& centers,
                             const std::vector<double>& widths,
                             const std::vector<double>& momenta);

/// Normalized linear combination a*psi1 + b*psi2 (same grid and spin).
WaveFunction superpose(cx a, const WaveFunction& psi1, cx b,
                       const WaveFunction& psi2);

}  // namespace ontosim
