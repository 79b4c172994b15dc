#pragma once

#include <vector>

#include "ontosim/wavefunction.hpp"

namespace ontosim {

/// A family of per-particle generators H_k: particle k's kinetic term plus
/// an optional single-particle potential, plus an optional shared
/// interaction term assigned to the generators flagged in interaction_on.
/// All terms are time independent.
struct MultiTimeSpec {
  std::vector<double> masses;                   // one per particle
  std::vector<std::vector<double>> potentials;  // per particle; empty = none
  std::vector<double> interaction;              // full grid; empty = none
  std::vector<bool> interaction_on;             // per particle; empty = all

  void validate(const GridSpec& grid) const;
};

/// H_k applied to psi (spectral kinetic over particle k's axes only).
WaveFunction apply_partial_hamiltonian(const MultiTimeSpec& spec,
                                       const WaveFunction& psi, int particle);

/// || (H_1 H_2 - H_2 H_1) psi ||, the obstruction to evolving the two time
/// arguments independently.  Zero (to rounding) exactly when the generators
/// commute, i.e. when the shared interaction term is absent.  N == 2 only.
double multitime_consistency_residual(const MultiTimeSpec& spec,
                                      const WaveFunction& psi);

}  // namespace ontosim
