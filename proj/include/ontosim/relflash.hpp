#pragma once

#include <array>
#include <utility>
#include <vector>

#include "ontosim/grid.hpp"
#include "ontosim/numeric.hpp"
#include "ontosim/rng.hpp"
#include "ontosim/wavefunction.hpp"

/// 1+1-dimensional Minkowski space, metric signature (+,-), c = 1.
/// Two-component Dirac spinors in the representation where the velocity
/// operator is sigma_x and the mass term sigma_z; the free one-particle
/// Hamiltonian of mode k is [[m, k], [k, -m]].
namespace ontosim::rel {

struct SpacetimePoint {
  double t = 0.0;
  double x = 0.0;
};

/// Future-pointing timelike unit vector, upper index: u.u = (u0)^2 - (u1)^2
/// must equal 1 and u0 > 0.
using FourVelocity = std::array<double, 2>;

/// The unit vector of rapidity chi: (cosh chi, sinh chi).
FourVelocity boost_vector(double rapidity);

/// Last flash of one label before the construction starts.
struct SeedFlash {
  SpacetimePoint point;
  FourVelocity u{1.0, 0.0};
  int label = 0;
};

/// Checks u0 = sqrt(1 + u1^2) within 1e-12 and u0 > 0.
void validate_seed(const SeedFlash& seed);

/// Wave function of N in {1, 2} free Dirac particles with one time argument
/// per particle.  Stored as coefficients over the momentum modes of a
/// periodic grid in the per-mode energy eigenbasis, so evaluation at any
/// combination of times at or after the initial surface is exact.
class MultiTimeWaveFunction {
 public:
  /// Product state from per-particle two-spinor grid states (all on the
  /// same grid, spin_dims == 2); factors.size() selects N.
  static MultiTimeWaveFunction from_factors(
      const std::vector<WaveFunction>& factors,
      const std::vector<double>& masses);

  /// General (possibly entangled) two-particle state from spin-major
  /// amplitudes over the (x1, x2) grid: 4 blocks of P^2 values, spinor
  /// index a*2 + b slowest, x1 before x2.
  static MultiTimeWaveFunction from_grid2(const GridSpec& grid,
                                          const std::vector<double>& masses,
                                          const std::vector<cx>& amplitudes,
                                          double t0);

  int particles() const { return particles_; }
  const GridSpec& grid() const { return grid_; }
  double initial_time() const { return t0_; }
  const std::vector<double>& masses() const { return masses_; }

  /// Two-spinor at one spacetime point (N == 1 only).
  std::array<cx, 2> evaluate1(const SpacetimePoint& p) const;
  /// Four-spinor (index a*2 + b) at a pair of points (N == 2 only).
  /// Throws Unreachable when a time precedes the initial surface.
  std::array<cx, 4> evaluate2(const SpacetimePoint& p1,
                              const SpacetimePoint& p2) const;

  /// Mode coefficients, energy basis: index (k1*P + k2)*4 + s1*2 + s2 for
  /// N == 2, k*2 + s for N == 1, s = 0 positive / 1 negative energy.
  const std::vector<cx>& coefficients() const { return coeff_; }

 private:
  MultiTimeWaveFunction() = default;
  void check_time(double t) const;

  GridSpec grid_;
  int particles_ = 0;
  std::vector<double> masses_;
  double t0_ = 0.0;
  std::vector<cx> coeff_;
  std::vector<double> energies_;  // per particle: P mode energies
};

/// j^{mu nu}(x1, x2) = psibar (gamma^mu x gamma^nu) psi for N == 2, with
/// gamma^0 = sigma_z, gamma^1 = i sigma_y; real, and j^{00} >= 0.
using CurrentTensor = std::array<std::array<double, 2>, 2>;
CurrentTensor multitime_current(const MultiTimeWaveFunction& psi,
                                const SpacetimePoint& x1,
                                const SpacetimePoint& x2);

/// j^mu(x) = psibar gamma^mu psi for N == 1.
std::array<double, 2> single_current(const MultiTimeWaveFunction& psi,
                                     const SpacetimePoint& x);

/// Hypersurface guidance velocities on the flat leaf through x1, x2:
/// v1 = j^{10}/j^{00}, v2 = j^{01}/j^{00}, clamped to |v| <= 1.
/// Throws NodeProximity when j^{00} <= node_guard.
std::pair<double, double> hbd_velocity(const MultiTimeWaveFunction& psi,
                                       const SpacetimePoint& x1,
                                       const SpacetimePoint& x2,
                                       double node_guard = 1e-14);

struct Flash {
  int label = 0;
  SpacetimePoint point;
  FourVelocity u{1.0, 0.0};
};

struct FlashRecord {
  std::vector<SeedFlash> seeds;
  std::vector<std::vector<Flash>> generations;
};

struct FlashSamplerOptions {
  double chi_max = 5.0;  // rapidity cutoff of the hyperbola
  int cells = 256;       // discretization of [-chi_max, chi_max]
};

/// Discretized density over the hyperbola of timelike distance T from the
/// previous flash of `label`, the other label's latest flash plugged into
/// the remaining argument: weight_j ~ j^{mu nu} n_mu u_nu * T * dchi at the
/// cell center, clipped at zero.
struct HyperbolaDensity {
  double T = 0.0;
  double chi_max = 5.0;
  std::vector<double> weight;  // per cell, sums to `total`
  double total = 0.0;          // the normalizer before dividing out
  double edge_mass = 0.0;      // (first + last cell) / total
};

HyperbolaDensity hyperbola_density(const MultiTimeWaveFunction& psi,
                                   const std::vector<Flash>& latest,
                                   int label, double T,
                                   const FlashSamplerOptions& opts);

/// Inverse-CDF draw from hyperbola_density (one uniform: cell plus jitter
/// from the leftover fraction).  The flash's u is the surface normal at the
/// sampled rapidity.  Throws DegenerateDensity when the normalizer
/// underflows.
Flash sample_on_hyperbola(const MultiTimeWaveFunction& psi,
                          const std::vector<Flash>& latest, int label,
                          double T, const FlashSamplerOptions& opts,
                          Rng& rng);

/// T ~ Exp(lambda), then sample_on_hyperbola.
Flash sample_next_flash(const MultiTimeWaveFunction& psi,
                        const std::vector<Flash>& latest, int label,
                        double lambda, const FlashSamplerOptions& opts,
                        Rng& rng);

enum class LabelOrder {
  round_robin,   // labels 0..N-1 in order within each generation
  random_label,  // a fresh random label order per generation
};

/// Builds flashes generation by generation: every generation produces one
/// flash per label, each sampled with the other labels' most recent
/// flashes plugged into the remaining arguments.
FlashRecord run_sf(const MultiTimeWaveFunction& psi,
                   const std::vector<SeedFlash>& seeds, double lambda,
                   int n_generations, LabelOrder order,
                   const FlashSamplerOptions& opts, Rng rng);

}  // namespace ontosim::rel
