#include "ontosim/hamiltonian.hpp"

#include <cmath>
#include <string>

#include "detail.hpp"
#include "ontosim/errors.hpp"
#include "ontosim/fft.hpp"

namespace ontosim {

void HamiltonianSpec::validate(const GridSpec& grid) const {
  std::vector<std::string> bad;
  if (masses.size() != static_cast<std::size_t>(grid.particles))
    bad.push_back("masses: expected one per particle (" +
                  std::to_string(grid.particles) + "), got " +
                  std::to_string(masses.size()));
  for (double m : masses)
    if (!(m > 0.0)) {
      bad.push_back("masses must be > 0");
      break;
    }
  if (!potential.empty() && potential.size() != grid.size())
    bad.push_back("potential: expected grid-sized array (" +
                  std::to_string(grid.size()) + "), got " +
                  std::to_string(potential.size()));
  if (kind == HamiltonianKind::dirac1d && grid.dim_per_particle != 1)
    bad.push_back("dirac1d requires one spatial dimension per particle");
  if (!bad.empty()) throw ValidationError(std::move(bad));
}

WaveFunction apply_hamiltonian(const HamiltonianSpec& h,
                               const WaveFunction& psi) {
  h.validate(psi.grid);
  const GridSpec& g = psi.grid;
  WaveFunction out = psi;

  if (h.kind == HamiltonianKind::schrodinger) {
    if (psi.spin_dims != 1)
      throw WrongSpinDims("apply_hamiltonian(schrodinger): spinless only");
    std::vector<double> table = detail::kinetic_table(g, h.masses);
    std::vector<int> dims = detail::grid_dims(g);
    fft::forward(out.amplitudes.data(), dims);
    for (uint64_t c = 0; c < g.size(); ++c) out.amplitudes[c] *= table[c];
    fft::inverse(out.amplitudes.data(), dims);
  } else {
    if (psi.spin_dims != 2)
      throw WrongSpinDims("apply_hamiltonian(dirac1d): two-component only");
    if (g.particles != 1)
      throw UnsupportedN("apply_hamiltonian(dirac1d): one particle only");
    const int P = g.points_per_axis;
    std::vector<int> dims = {P};
    const double m = h.masses[0];
    cx* up = out.amplitudes.data();
    cx* dn = out.amplitudes.data() + P;
    fft::forward(up, dims);
    fft::forward(dn, dims);
    for (int j = 0; j < P; ++j) {
      double k = fft::wavenumber_deriv(j, P, g.extent);
      cx a = up[j], b = dn[j];
      up[j] = m * a + k * b;
      dn[j] = k * a - m * b;
    }
    fft::inverse(up, dims);
    fft::inverse(dn, dims);
  }

  if (!h.potential.empty()) {
    const uint64_t cells = g.size();
    for (int s = 0; s < psi.spin_states(); ++s)
      for (uint64_t c = 0; c < cells; ++c)
        out.at(s, c) += h.potential[c] * psi.at(s, c);
  }
  return out;
}

double energy_expectation(const HamiltonianSpec& h, const WaveFunction& psi) {
  WaveFunction hpsi = apply_hamiltonian(h, psi);
  return inner_product(psi, hpsi).real();
}

}  // namespace ontosim
