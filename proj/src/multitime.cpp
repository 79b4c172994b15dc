#include "ontosim/multitime.hpp"

#include <string>

#include "detail.hpp"
#include "ontosim/errors.hpp"
#include "ontosim/fft.hpp"

namespace ontosim {

void MultiTimeSpec::validate(const GridSpec& grid) const {
  std::vector<std::string> bad;
  const std::size_t n = static_cast<std::size_t>(grid.particles);
  if (masses.size() != n)
    bad.push_back("masses: expected " + std::to_string(n) + " entries");
  for (double m : masses)
    if (!(m > 0.0)) {
      bad.push_back("masses must be > 0");
      break;
    }
  if (!potentials.empty() && potentials.size() != n)
    bad.push_back("potentials: expected none or one per particle");
  for (const auto& v : potentials)
    if (!v.empty() && v.size() != grid.size()) {
      bad.push_back("potentials entries must be empty or grid-sized");
      break;
    }
  if (!interaction.empty() && interaction.size() != grid.size())
    bad.push_back("interaction must be empty or grid-sized");
  if (!interaction_on.empty() && interaction_on.size() != n)
    bad.push_back("interaction_on: expected none or one flag per particle");
  if (!bad.empty()) throw ValidationError(std::move(bad));
}

WaveFunction apply_partial_hamiltonian(const MultiTimeSpec& spec,
                                       const WaveFunction& psi, int particle) {
  spec.validate(psi.grid);
  if (psi.spin_dims != 1)
    throw WrongSpinDims("apply_partial_hamiltonian: spinless states only");
  if (particle < 0 || particle >= psi.grid.particles)
    throw SimError("apply_partial_hamiltonian: particle index out of range");
  const GridSpec& g = psi.grid;
  const int d = g.dim_per_particle;

  std::vector<bool> mask(static_cast<std::size_t>(g.axes()), false);
  for (int a = particle * d; a < (particle + 1) * d; ++a)
    mask[static_cast<std::size_t>(a)] = true;
  std::vector<double> table = detail::kinetic_table(g, spec.masses, &mask);
  std::vector<int> dims = detail::grid_dims(g);

  WaveFunction out = psi;
  fft::forward(out.amplitudes.data(), dims);
  for (uint64_t c = 0; c < g.size(); ++c) out.amplitudes[c] *= table[c];
  fft::inverse(out.amplitudes.data(), dims);

  const std::size_t p = static_cast<std::size_t>(particle);
  if (!spec.potentials.empty() && !spec.potentials[p].empty())
    for (uint64_t c = 0; c < g.size(); ++c)
      out.amplitudes[c] += spec.potentials[p][c] * psi.amplitudes[c];
  const bool couples = !spec.interaction.empty() &&
                       (spec.interaction_on.empty() || spec.interaction_on[p]);
  if (couples)
    for (uint64_t c = 0; c < g.size(); ++c)
      out.amplitudes[c] += spec.interaction[c] * psi.amplitudes[c];
  return out;
}

double multitime_consistency_residual(const MultiTimeSpec& spec,
                                      const WaveFunction& psi) {
  if (psi.grid.particles != 2)
    throw UnsupportedN(
        "multitime_consistency_residual: implemented for two particles, got " +
        std::to_string(psi.grid.particles));
  WaveFunction h2 = apply_partial_hamiltonian(spec, psi, 1);
  WaveFunction h1h2 = apply_partial_hamiltonian(spec, h2, 0);
  WaveFunction h1 = apply_partial_hamiltonian(spec, psi, 0);
  WaveFunction h2h1 = apply_partial_hamiltonian(spec, h1, 1);
  for (std::size_t i = 0; i < h1h2.amplitudes.size(); ++i)
    h1h2.amplitudes[i] -= h2h1.amplitudes[i];
  return norm(h1h2);
}

}  // namespace ontosim
