#pragma once

#include <vector>

#include "ontosim/wavefunction.hpp"

namespace ontosim {

enum class HamiltonianKind { schrodinger, dirac1d };

/// H = sum_i p_i^2 / (2 m_i) + V(q) for kind schrodinger, or the 1+1D
/// free-fermion form (alpha = sigma_x, beta = sigma_z mass term) for kind
/// dirac1d.  `potential` is a full-grid array (empty means V == 0); for
/// dirac1d it acts as a scalar external potential.
struct HamiltonianSpec {
  HamiltonianKind kind = HamiltonianKind::schrodinger;
  std::vector<double> masses;     // one per particle, > 0
  std::vector<double> potential;  // size grid.size() or empty

  void validate(const GridSpec& grid) const;
};

/// H applied to psi (spectral kinetic term).  Used for energy bookkeeping
/// and commutator checks, not for time stepping.
WaveFunction apply_hamiltonian(const HamiltonianSpec& h,
                               const WaveFunction& psi);

/// <psi|H|psi> (real for Hermitian H; the imaginary residue is discarded).
double energy_expectation(const HamiltonianSpec& h, const WaveFunction& psi);

}  // namespace ontosim
