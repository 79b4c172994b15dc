#pragma once

#include <utility>
#include <vector>

#include "ontosim/hamiltonian.hpp"
#include "ontosim/rng.hpp"
#include "ontosim/stats.hpp"
#include "ontosim/wavefunction.hpp"

namespace ontosim {

enum class LambdaMode { uniform, mass_proportional };

struct GrwParams {
  double collapse_rate = 1e-2;   // per particle (uniform mode), per unit time
  double collapse_width = 1.0;   // spatial width of the localization kernel
  LambdaMode lambda_mode = LambdaMode::uniform;
  /// Mass that carries the base rate in mass_proportional mode;
  /// 0 selects the smallest particle mass.
  double reference_mass = 0.0;

  /// collapse_width must resolve on the grid (>= 2 spacings).
  void validate(const GridSpec& grid) const;

  double rate_for(int particle, const std::vector<double>& masses) const;
  double total_rate(const std::vector<double>& masses) const;
};

struct CollapseEvent {
  double time = 0.0;
  std::vector<double> center;  // d components
  int label = 0;               // particle index
};

/// Normalized density of collapse centers for the given particle: its
/// position marginal convolved with a Gaussian of width collapse_width
/// (wrapped images on periodic grids; renormalized after truncation on box
/// grids).  Quadrature integral is 1 up to rounding.
std::vector<double> collapse_center_density(const WaveFunction& psi, int label,
                                            const GrwParams& params);

/// Exponential waiting time to the next collapse; the total rate is
/// N*lambda (uniform) or lambda * sum(m_i)/m_ref (mass_proportional).
double sample_waiting_time(const GrwParams& params,
                           const std::vector<double>& masses, Rng& rng);

/// Draws (label, center): the label proportionally to its rate, the center
/// from collapse_center_density via inverse CDF with in-cell jitter.
std::pair<int, std::vector<double>> sample_collapse(
    const WaveFunction& psi, const GrwParams& params,
    const std::vector<double>& masses, Rng& rng);

/// Multiplies psi by the square-root localization Gaussian
/// exp(-(q_label - center)^2 / (4 width^2)) (minimum-image difference on
/// periodic grids) and renormalizes.
WaveFunction apply_collapse(const WaveFunction& psi, int label,
                            const std::vector<double>& center,
                            const GrwParams& params);

/// Mass-weighted sum of the particle position marginals on the shared
/// d-dimensional grid.
std::vector<double> matter_density(const WaveFunction& psi,
                                   const std::vector<double>& masses);

/// One piecewise-deterministic history: unitary evolution interrupted by
/// collapses at pre-sampled exponential times (jump times are exact, no
/// thinning).  Snapshot times record the matter density; a snapshot that
/// coincides with a jump records the pre-collapse state.  dt_max bounds the
/// unitary sub-steps; dt_max <= 0 takes each inter-jump gap in one step,
/// which requires V == 0 (where that single step is exact).
struct GrwRun {
  std::vector<CollapseEvent> flashes;
  std::vector<std::pair<double, std::vector<double>>> matter_snapshots;
  WaveFunction psi_final;
};
GrwRun run_grw(const WaveFunction& psi0, const HamiltonianSpec& h,
               const GrwParams& params, double duration,
               const std::vector<double>& snapshot_times, double dt_max,
               Rng rng);

struct WeightedState {
  WaveFunction psi;
  double weight = 1.0;
};

/// Runs n_runs histories per ensemble (the initial state drawn by weight)
/// and compares the two flash/matter records:
///  - two-sample KS on first-flash time and first-flash position (axis 0),
///  - two-sample KS on the matter-density centroid at the final time.
/// Also reports the Frobenius distance between the ensemble density
/// matrices: ensembles with equal density matrices must agree in the flash
/// statistics but may still differ in the matter record.
struct FlashComparison {
  bool density_matrices_equal = false;
  double density_matrix_distance = 0.0;
  KsResult first_flash_time;
  KsResult first_flash_position;
  KsResult matter_centroid;
  std::size_t flashless_runs_a = 0, flashless_runs_b = 0;
};
FlashComparison flash_history_statistic(
    const std::vector<WeightedState>& ensemble_a,
    const std::vector<WeightedState>& ensemble_b, const HamiltonianSpec& h,
    const GrwParams& params, double duration, int n_runs, Rng rng,
    double level);

}  // namespace ontosim
