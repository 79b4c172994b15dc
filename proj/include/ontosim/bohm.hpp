#pragma once

#include <memory>
#include <vector>

#include "ontosim/hamiltonian.hpp"
#include "ontosim/rng.hpp"
#include "ontosim/stats.hpp"
#include "ontosim/wavefunction.hpp"

namespace ontosim {

enum class Integrator { rk4, midpoint };
enum class Interpolation { trilinear, spectral };

struct BohmRunConfig {
  double dt = 1e-3;
  Integrator integrator = Integrator::rk4;
  Interpolation interpolation = Interpolation::trilinear;
  /// Guidance is undefined where |psi|^2 <= node_guard; evaluation there
  /// raises NodeProximity rather than extrapolating.
  double node_guard = 1e-12;
  /// Diagnostic hook: scales every guidance velocity.  1.0 is the physical
  /// law; anything else deliberately breaks equivariance for pipeline tests.
  double velocity_scale = 1.0;
};

/// Snapshot of the guidance data of one state: probability density and
/// probability current on the grid.  Velocities are evaluated as
/// interpolated current over interpolated density, which stays bounded near
/// nodes (the raw velocity field diverges there).
class GuidanceField {
 public:
  GuidanceField(const WaveFunction& psi, const std::vector<double>& masses,
                Interpolation interpolation, double node_guard,
                double velocity_scale = 1.0);

  /// Velocity vector at q; throws NodeProximity below the node guard.
  std::vector<double> velocity_at(const Configuration& q) const;

  double density_at(const Configuration& q) const;
  double time() const { return time_; }
  const GridSpec& grid() const { return grid_; }

 private:
  void eval_spectral(const Configuration& q, double* density,
                     std::vector<double>* current) const;

  GridSpec grid_;
  double time_;
  Interpolation interpolation_;
  double node_guard_;
  double velocity_scale_;
  std::vector<double> masses_;
  std::vector<double> density_;               // |psi|^2 per cell
  std::vector<std::vector<double>> current_;  // per axis, per cell
  std::shared_ptr<const WaveFunction> psi_;   // kept for spectral evaluation
};

/// Guidance velocity dq/dt = Im(psi* grad psi) / (m |psi|^2) at q.
std::vector<double> bohm_velocity(const WaveFunction& psi,
                                  const Configuration& q,
                                  const std::vector<double>& masses,
                                  Interpolation interpolation =
                                      Interpolation::trilinear,
                                  double node_guard = 1e-12);

/// Two-component 1D velocity psi^dag sigma_x psi / psi^dag psi; always in
/// [-1, 1].
double dirac_velocity_1d(const WaveFunction& psi, double x,
                         double node_guard = 1e-12);

/// Advances one configuration under the guidance law while evolving psi.
/// The path is sampled every cfg.dt (the last step is shortened to land on
/// `duration` exactly).  Velocity fields are frozen per half-step: the
/// integrator stages use the fields at t, t + dt/2 and t + dt.
struct GuidedRun {
  Trajectory trajectory;
  WaveFunction psi_final;
};
GuidedRun advance_trajectory(const WaveFunction& psi0,
                             const HamiltonianSpec& h, const Configuration& q0,
                             const BohmRunConfig& cfg, double duration);

/// One integrator step of a batch of walkers given the three field
/// snapshots.  Walkers flagged inactive are skipped; a walker that hits a
/// node is deactivated and recorded in `failures` as (index, time).
void guided_step(const GuidanceField& at_start, const GuidanceField& at_mid,
                 const GuidanceField& at_end, double dt,
                 const BohmRunConfig& cfg, std::vector<Configuration>& walkers,
                 std::vector<char>& active,
                 std::vector<std::pair<std::size_t, double>>& failures);

/// Samples n walkers from |psi_0|^2, transports them alongside psi, and
/// KS-tests each axis of the empirical distribution against |psi_t|^2 at
/// the requested times.  Walkers that fail on a node are excluded from
/// later statistics; a failure fraction above `failure_limit` throws
/// RunFailure.
struct EquivarianceTest {
  double time = 0.0;
  int axis = 0;
  KsResult ks;
};
struct EquivarianceReport {
  std::vector<EquivarianceTest> tests;
  std::size_t walkers = 0;
  std::size_t node_failures = 0;
  bool pass = false;  // every KS passed and failures stayed under the limit
};
EquivarianceReport equivariance_statistic(
    const WaveFunction& psi0, const HamiltonianSpec& h, int n_walkers,
    const std::vector<double>& times, const BohmRunConfig& cfg, Rng rng,
    double level = 0.01, double failure_limit = 0.01);

}  // namespace ontosim
