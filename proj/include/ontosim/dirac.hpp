#pragma once

#include "ontosim/hamiltonian.hpp"
#include "ontosim/wavefunction.hpp"

namespace ontosim {

/// One exact step of the free 1+1D two-component evolution
/// H = alpha p + beta m with alpha = sigma_x and beta = sigma_z:
/// every momentum mode rotates under its own 2x2 Hamiltonian
/// [[m, k], [k, -m]], so the step is exact for any dt and exactly
/// norm-preserving.  Requires spin_dims == 2, one particle, d == 1,
/// periodic boundary.  Throws WrongSpinDims otherwise.
WaveFunction dirac_step_1d(const WaveFunction& psi, double mass, double dt);

/// Positive-energy packet: Gaussian envelope exp(-(x-c)^2/(4 w^2) + i p0 x)
/// projected mode-by-mode onto the positive-energy eigenspinor of
/// [[m, k], [k, -m]].  Group velocity of the carrier is p0/E(p0).
/// `width` is the |psi|^2 standard deviation of the envelope.
WaveFunction dirac_packet_1d(const GridSpec& grid, double mass, double center,
                             double width, double momentum);

/// Positive-energy unit spinor of [[m, k], [k, -m]] (real components).
void dirac_spinor_plus(double mass, double k, double out[2]);

}  // namespace ontosim
