#pragma once

#include <Eigen/Dense>
#include <complex>
#include <cstdint>
#include <map>
#include <utility>
#include <vector>

#include "ontosim/bohm.hpp"
#include "ontosim/grid.hpp"
#include "ontosim/rng.hpp"

namespace ontosim::bell {

struct LatticeSpec {
  int sites = 8;          // 1D periodic ring
  int max_particles = 3;  // hard-core cap, <= sites
  void validate() const;
};

/// A configuration: the set of occupied sites, strictly increasing.
using SiteSet = std::vector<int>;

/// Enumeration of every configuration with 0..max_particles particles,
/// ordered by particle number, then lexicographically.  Provides the
/// index <-> configuration maps used by states and interactions.
class SectorBasis {
 public:
  explicit SectorBasis(const LatticeSpec& lattice);

  const LatticeSpec& lattice() const { return lattice_; }
  std::size_t size() const { return configs_.size(); }
  const SiteSet& config(std::size_t index) const { return configs_[index]; }
  /// Throws UnknownConfiguration for anything not in the enumeration.
  std::size_t index_of(const SiteSet& config) const;
  int particle_count(std::size_t index) const {
    return static_cast<int>(configs_[index].size());
  }
  /// First index of the n-particle sector.
  std::size_t sector_begin(int n) const {
    return sector_begin_[static_cast<std::size_t>(n)];
  }

 private:
  LatticeSpec lattice_;
  std::vector<SiteSet> configs_;
  std::map<SiteSet, std::size_t> index_;
  std::vector<std::size_t> sector_begin_;
};

/// State over the configuration basis, counting-measure normalization:
/// sum_q |amp(q)|^2 == 1.
struct SectoredState {
  const SectorBasis* basis = nullptr;  // not owned
  Eigen::VectorXcd amp;
  double time = 0.0;
};

SectoredState make_sectored_state(const SectorBasis& basis);
double state_norm(const SectoredState& psi);
SectoredState normalize(const SectoredState& psi);

/// Hermitian off-diagonal interaction.  add(i, j, v) accumulates
/// <i|H|j> += v together with <j|H|i> += conj(v), so hermiticity holds by
/// construction; hermiticity_violation() checks the stored table anyway.
class InteractionSpec {
 public:
  explicit InteractionSpec(std::size_t dimension);

  void add(std::size_t i, std::size_t j, std::complex<double> value);
  std::complex<double> element(std::size_t i, std::size_t j) const;
  /// Entries <i|H|j> of column j, ordered by row index.
  const std::vector<std::pair<std::size_t, std::complex<double>>>& column(
      std::size_t j) const {
    return cols_[j];
  }
  std::size_t dimension() const { return cols_.size(); }
  double hermiticity_violation() const;

 private:
  std::vector<std::vector<std::pair<std::size_t, std::complex<double>>>> cols_;
};

/// Creation/annihilation with one site-independent amplitude: for every
/// configuration q and empty site s, <q + s|H|q> = amplitude.
void add_uniform_creation(InteractionSpec& h, const SectorBasis& basis,
                          std::complex<double> amplitude);

/// Nearest-neighbour hopping on the ring (needs >= 3 sites): for every
/// configuration and occupied site with a free right neighbour,
/// <moved|H|q> = amplitude (the reverse move enters via hermiticity).
void add_ring_hopping(InteractionSpec& h, const SectorBasis& basis,
                      std::complex<double> amplitude);

struct BellHamiltonian {
  std::vector<double> diagonal;  // <q|H|q>
  InteractionSpec offdiag;
};

/// Diagonal energy proportional to particle number.
BellHamiltonian make_bell_hamiltonian(const SectorBasis& basis,
                                      double energy_per_particle);

/// Net probability current into `to` from `from`:
/// 2 Im( conj(psi(to)) <to|H|from> psi(from) ).  Exactly antisymmetric
/// under swapping the arguments.
double probability_current(const SectoredState& psi, std::size_t to,
                           std::size_t from, const InteractionSpec& h);

/// Minimal jump rates out of configuration `from`:
/// sigma(to <- from) = [current(to, from)]^+ / |psi(from)|^2.
/// Only strictly positive rates are returned.  Throws ZeroOccupancy when
/// |psi(from)|^2 <= 1e-300.
std::vector<std::pair<std::size_t, double>> jump_rates(
    const SectoredState& psi, std::size_t from, const InteractionSpec& h);

/// Exact evolution amp(t) = exp(-i H t) amp(0) through the dense
/// eigendecomposition; the basis is small by construction.
class ExactPropagator {
 public:
  ExactPropagator(const SectorBasis& basis, const BellHamiltonian& h);
  Eigen::VectorXcd evolve(const Eigen::VectorXcd& amp0, double t) const;

 private:
  Eigen::VectorXd evals_;
  Eigen::MatrixXcd evecs_;
};

struct JumpEvent {
  double time = 0.0;
  std::size_t from = 0, to = 0;
};

/// Piecewise-constant path through configuration space: `occupation`
/// records (time, config index) from each time onward, starting at t=0 and
/// gaining an entry per jump.
struct JumpPath {
  std::vector<std::pair<double, std::size_t>> occupation;
  std::vector<JumpEvent> jumps;
};

/// Markov jump process over configurations: psi evolves exactly, the walker
/// jump-tests each sub-step with probability 1 - exp(-R dt) and picks the
/// destination proportionally to the rates.  Sub-steps auto-refine so that
/// R * dt <= 0.05; refinement beyond a factor 2^20 throws StiffRates.
JumpPath simulate_pure_jump(const SectoredState& psi0,
                            const BellHamiltonian& h, std::size_t q0,
                            double duration, double dt, Rng rng);

/// Ensemble of independent walkers sharing the deterministic psi path;
/// returns configuration occupancy counts at the final time.
std::vector<uint64_t> pure_jump_occupancy(const SectoredState& psi0,
                                          const BellHamiltonian& h,
                                          std::size_t q0, double duration,
                                          double dt, int n_runs, Rng rng);

// ---------------------------------------------------------------------------
// Hybrid model: continuum sectors with jumps between them.

/// A fixed particle A on a periodic 1D grid plus at most one created
/// particle B.  The interaction creates/annihilates B around A with a
/// Gaussian profile: <(x_i, y_j)|H|x_i> = g K(y_j - x_i) sqrt(h) with
/// K(r) = exp(-r^2 / (2 w^2)) and h the grid spacing (minimum-image r).
struct HybridModel {
  GridSpec grid1;  // one particle, d == 1, periodic
  double mass_a = 1.0;
  double mass_b = 1.0;
  double coupling = 0.1;      // g
  double kernel_width = 1.0;  // w

  void validate() const;
  GridSpec grid2() const;  // the two-particle grid with the same axis
};

/// Two-sector state; `lower` is psi over x, `upper` psi over (x, y),
/// row-major with x slowest, both with continuum normalization.  The total
/// weight W1 + W2 is 1 for a normalized state.
struct HybridState {
  std::vector<cx> lower;
  std::vector<cx> upper;
  double time = 0.0;
};

HybridState make_hybrid_packet(const HybridModel& model, double center,
                               double width, double momentum);

/// {W1, W2}: quadrature weights of the two sectors.
std::pair<double, double> hybrid_sector_weights(const HybridModel& model,
                                                const HybridState& psi);

/// One Strang step: half kinetic, exact interaction rotation, half kinetic.
void hybrid_step(HybridState& psi, const HybridModel& model, double dt);

struct HybridSample {
  double t = 0.0;
  int sector = 1;  // 1 or 2
  std::vector<double> q;
};
struct HybridJump {
  double time = 0.0;
  int from_sector = 1, to_sector = 2;
  std::vector<double> q_before, q_after;
};
struct HybridPath {
  std::vector<HybridSample> samples;
  std::vector<HybridJump> jumps;
};

/// Guidance motion inside a sector, minimal-rate jumps between sectors.
/// q0 has one entry (start in sector 1) or two (start in sector 2).
/// The path is sampled every cfg.dt.
HybridPath simulate_hybrid(const HybridState& psi0, const HybridModel& model,
                           const std::vector<double>& q0, double duration,
                           const BohmRunConfig& cfg, Rng rng);

/// Lockstep ensemble over one shared psi: walkers start in sector 1 from
/// |lower|^2 and report the sector-2 fraction at each requested time next
/// to the quantum weight W2(t).
struct HybridEnsembleReport {
  std::vector<double> times;
  std::vector<double> fraction_upper;  // empirical, among active walkers
  std::vector<double> expected_upper;  // W2 from psi
  std::size_t walkers = 0;
  std::size_t node_failures = 0;
};
HybridEnsembleReport hybrid_ensemble(const HybridState& psi0,
                                     const HybridModel& model, int n_walkers,
                                     const std::vector<double>& times,
                                     const BohmRunConfig& cfg, Rng rng);

}  // namespace ontosim::bell
