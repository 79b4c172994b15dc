#pragma once

#include "ontosim/hamiltonian.hpp"
#include "ontosim/wavefunction.hpp"

namespace ontosim {

/// Time-stepping scheme.  `auto_select` picks spectral on periodic grids and
/// crank_nicolson on box grids; the explicit values exist for cross-checks.
enum class StepScheme { auto_select, spectral, crank_nicolson };

/// One step of dt under H (Strang split, globally O(dt^2); exactly
/// norm-preserving; exact when V == 0 under the spectral scheme).
/// psi.time advances by dt.  Throws IncompatibleGrid if the scheme cannot
/// serve the grid's boundary.
WaveFunction schrodinger_step(const WaveFunction& psi,
                              const HamiltonianSpec& h, double dt,
                              StepScheme scheme = StepScheme::auto_select);

/// Reusable stepper: caches the kinetic mode table / tridiagonal factors for
/// a fixed (grid, masses, scheme) so inner loops avoid re-deriving them.
class SchrodingerStepper {
 public:
  SchrodingerStepper(const GridSpec& grid, const HamiltonianSpec& h,
                     StepScheme scheme = StepScheme::auto_select);

  void step(WaveFunction& psi, double dt) const;

  /// Advances by `duration` in sub-steps of at most dt_max; the final
  /// sub-step is sized to land exactly.  dt_max <= 0 means a single step
  /// (valid only when that is exact, i.e. spectral scheme with V == 0).
  void advance(WaveFunction& psi, double duration, double dt_max) const;

  StepScheme resolved_scheme() const { return scheme_; }

 private:
  void step_spectral(WaveFunction& psi, double dt) const;
  void step_crank_nicolson(WaveFunction& psi, double dt) const;

  GridSpec grid_;
  HamiltonianSpec h_;
  StepScheme scheme_;
  std::vector<double> kinetic_;  // spectral: per-mode kinetic energy
};

}  // namespace ontosim
