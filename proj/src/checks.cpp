#include "ontosim/checks.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "ontosim/belltype.hpp"
#include "ontosim/bohm.hpp"
#include "ontosim/config.hpp"
#include "ontosim/dirac.hpp"
#include "ontosim/errors.hpp"
#include "ontosim/grw.hpp"
#include "ontosim/multitime.hpp"
#include "ontosim/relflash.hpp"
#include "ontosim/rng.hpp"
#include "ontosim/runner.hpp"
#include "ontosim/stats.hpp"
#include "ontosim/wavefunction.hpp"

namespace ontosim::harness {
namespace {

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

double pick_level(double override_level, double fallback) {
  return override_level > 0.0 ? override_level : fallback;
}

// --------------------------------------------------------------------------
// Flash-rate arithmetic: a mole-scale particle number times the per-particle
// collapse rate must reproduce 1e8 events per second exactly in double
// precision (both factors are powers of ten).
CheckResult check_flash_rate_arithmetic(double) {
  CheckResult r{"flash-rate-arithmetic", false, ""};
  const double particles = 1e23;
  const double rate_per_particle = 1e-15;
  const double total = particles * rate_per_particle;
  r.pass = (total == 1e8);
  r.detail = "1e23 * 1e-15 = " + num(total) + " per second, expected 1e8";
  return r;
}

// --------------------------------------------------------------------------
// Equivariance of the guidance law: walkers drawn from |psi_0|^2 and
// transported along the velocity field stay |psi_t|^2 distributed.  Two
// crossing Gaussian packets, 1e4 walkers, KS per sampled time at 1%.
CheckResult check_bohm_equivariance(double level) {
  CheckResult r{"bohm-equivariance", false, ""};
  const double lvl = pick_level(level, 0.01);

  GridSpec g;
  g.dim_per_particle = 1;
  g.particles = 1;
  g.points_per_axis = 1024;
  g.extent = 48.0;

  HamiltonianSpec h;
  h.masses = {1.0};

  WaveFunction left = gaussian_packet(g, {-2.0}, {1.1}, {0.35});
  WaveFunction right = gaussian_packet(g, {2.0}, {1.1}, {-0.35});
  WaveFunction psi0 = superpose(cx(1.0, 0.0), left, cx(1.0, 0.0), right);

  BohmRunConfig cfg;
  cfg.dt = 0.004;

  EquivarianceReport rep = equivariance_statistic(
      psi0, h, 10000, {1.5, 3.0, 4.5}, cfg, Rng(20260815, 2), lvl, 0.01);

  double worst = 0.0;
  for (const auto& t : rep.tests)
    worst = std::max(worst, t.ks.statistic / t.ks.critical);
  r.pass = rep.pass;
  r.detail = "10000 walkers, 3 times; worst KS D/crit = " + num(worst) +
             " at level " + num(lvl) + "; node failures " +
             std::to_string(rep.node_failures);
  return r;
}

// --------------------------------------------------------------------------
// Free spreading packet: the guided trajectory obeys the similarity law
// Q(t) = c + (Q0 - c) s(t)/s0 with s(t)^2 = s0^2 (1 + (t / 2 m s0^2)^2).
// One spreading time, max relative error below 0.5%.
CheckResult check_bohm_free_packet_scaling(double) {
  CheckResult r{"bohm-free-packet-scaling", false, ""};

  GridSpec g;
  g.dim_per_particle = 1;
  g.particles = 1;
  g.points_per_axis = 2048;
  g.extent = 60.0;

  HamiltonianSpec h;
  h.masses = {1.0};

  const double center = -5.0;
  const double s0 = 1.0;
  const double offset = 1.5;  // Q0 - center, in units of s0
  WaveFunction psi0 = gaussian_packet(g, {center}, {s0}, {0.0});

  BohmRunConfig cfg;
  cfg.dt = 1e-3;

  Configuration q0;
  q0.q = {center + offset * s0};
  GuidedRun run = advance_trajectory(psi0, h, q0, cfg, 2.0);

  double worst = 0.0;
  for (const auto& sample : run.trajectory.samples) {
    const double t = sample.t;
    const double s = s0 * std::sqrt(1.0 + (t / (2.0 * s0 * s0)) *
                                              (t / (2.0 * s0 * s0)));
    const double expected = center + offset * s;
    worst = std::max(worst,
                     std::abs(sample.config.q[0] - expected) /
                         std::abs(expected));
  }
  r.pass = worst < 5e-3;
  r.detail = "max |Q - Q_scaling| / |Q_scaling| = " + num(worst) +
             ", threshold 0.005";
  return r;
}

// --------------------------------------------------------------------------
// Collapse event statistics.  (a) Five particles at unit rate for 100 time
// units: the flash count per history is Poisson with mean 500, so the
// sample mean and variance over 1e3 histories must both land within 5% of
// 500.  (b) The (label, center) sampler follows rate share times the
// smeared position marginal: chi-square on a two-particle state at 0.1%.
CheckResult check_grw_poisson_counts(double level) {
  CheckResult r{"grw-poisson-counts", false, ""};
  const double lvl = pick_level(level, 0.001);

  GridSpec g;
  g.dim_per_particle = 1;
  g.particles = 5;
  g.points_per_axis = 8;
  g.extent = 8.0;

  HamiltonianSpec h;
  h.masses.assign(5, 1.0);

  GrwParams params;
  params.collapse_rate = 1.0;
  params.collapse_width = 2.2;

  WaveFunction psi0 = gaussian_packet(g, std::vector<double>(5, 0.0),
                                      std::vector<double>(5, 0.9),
                                      std::vector<double>(5, 0.0));

  const int n_runs = 1000;
  const double duration = 100.0;
  const double expected_count = 500.0;
  Rng rng(611953, 4);

  double sum = 0.0, sumsq = 0.0;
  for (int i = 0; i < n_runs; ++i) {
    GrwRun run = run_grw(psi0, h, params, duration, {}, 0.0, rng.split(i));
    const double c = static_cast<double>(run.flashes.size());
    sum += c;
    sumsq += c * c;
  }
  const double mean = sum / n_runs;
  const double var = (sumsq - n_runs * mean * mean) / (n_runs - 1);
  const bool mean_ok = std::abs(mean - expected_count) <= 0.05 * expected_count;
  const bool var_ok = std::abs(var - expected_count) <= 0.05 * expected_count;

  // (b) center sampler against the smeared marginals, mass-proportional
  // rates so the label share is 1/3 vs 2/3.
  GridSpec g2;
  g2.dim_per_particle = 1;
  g2.particles = 2;
  g2.points_per_axis = 64;
  g2.extent = 16.0;

  GrwParams p2;
  p2.collapse_rate = 1.0;
  p2.collapse_width = 0.6;
  p2.lambda_mode = LambdaMode::mass_proportional;
  p2.reference_mass = 1.0;
  const std::vector<double> masses2 = {1.0, 2.0};

  WaveFunction part_a = gaussian_packet(g2, {-3.0, 2.0}, {0.9, 1.3},
                                        {0.3, -0.2});
  WaveFunction part_b = gaussian_packet(g2, {1.5, -1.0}, {1.2, 0.8},
                                        {-0.4, 0.5});
  WaveFunction psi2 = superpose(cx(0.8, 0.0), part_a, cx(0.0, 0.6), part_b);

  const int P = g2.points_per_axis;
  const double spacing = g2.spacing();
  const double total_rate = p2.total_rate(masses2);
  std::vector<double> probs(static_cast<std::size_t>(2 * P), 0.0);
  for (int label = 0; label < 2; ++label) {
    const double share = p2.rate_for(label, masses2) / total_rate;
    std::vector<double> dens = collapse_center_density(psi2, label, p2);
    for (int j = 0; j < P; ++j)
      probs[static_cast<std::size_t>(label * P + j)] =
          share * dens[static_cast<std::size_t>(j)] * spacing;
  }

  const int n_draws = 10000;
  std::vector<uint64_t> counts(static_cast<std::size_t>(2 * P), 0);
  Rng draw_rng(611953, 9);
  for (int i = 0; i < n_draws; ++i) {
    auto [label, c] = sample_collapse(psi2, p2, masses2, draw_rng);
    const int cell = g2.axis_cell(c[0]);
    counts[static_cast<std::size_t>(label * P + cell)] += 1;
  }
  Chi2Result chi2 = chi2_against(counts, probs, lvl);

  r.pass = mean_ok && var_ok && chi2.pass;
  r.detail = "count mean " + num(mean) + ", variance " + num(var) +
             " (each within 5% of 500: " + (mean_ok ? "yes" : "no") + "/" +
             (var_ok ? "yes" : "no") + "); center sampler " +
             chi2.describe();
  return r;
}

// --------------------------------------------------------------------------
// A collapse multiplies the density by a Gaussian, so an initial packet of
// |psi|^2 deviation s ends with variance 1/(1/s^2 + 1/sigma^2).
CheckResult check_grw_collapse_narrowing(double) {
  CheckResult r{"grw-collapse-narrowing", false, ""};

  GridSpec g;
  g.dim_per_particle = 1;
  g.particles = 1;
  g.points_per_axis = 512;
  g.extent = 40.0;

  const double s = 1.3;
  GrwParams params;
  params.collapse_rate = 1.0;
  params.collapse_width = 0.9;

  WaveFunction psi = gaussian_packet(g, {-1.0}, {s}, {0.4});
  WaveFunction post = apply_collapse(psi, 0, {-0.6}, params);

  auto [mean, var] = grid_mean_var(probability_density(post), g.min_coord(),
                                   g.spacing());
  const double sigma = params.collapse_width;
  const double expected = 1.0 / (1.0 / (s * s) + 1.0 / (sigma * sigma));
  const double rel = std::abs(var - expected) / expected;
  r.pass = rel < 1e-2;
  r.detail = "posterior variance " + num(var) + " vs product-Gaussian " +
             num(expected) + " (rel err " + num(rel) +
             ", threshold 0.01); mean " + num(mean);
  return r;
}

// --------------------------------------------------------------------------
// Flash records depend on the state only through its density matrix.  Two
// ensembles built from the same pair of orthogonal states (even/odd
// packets: once superposed, once as the raw pair) share the density matrix,
// so their first-flash statistics must be indistinguishable -- while the
// matter-density centroid, which is not a function of the density matrix
// per history, separates them.
CheckResult check_grwf_ensemble_equivalence(double level) {
  CheckResult r{"grwf-ensemble-equivalence", false, ""};
  const double lvl = pick_level(level, 0.01);

  GridSpec g;
  g.dim_per_particle = 1;
  g.particles = 1;
  g.points_per_axis = 128;
  g.extent = 32.0;

  HamiltonianSpec h;
  h.masses = {1.0};

  WaveFunction even = gaussian_packet(g, {0.0}, {1.0}, {0.0});
  WaveFunction odd = even;
  for (int j = 0; j < g.points_per_axis; ++j)
    odd.amplitudes[static_cast<std::size_t>(j)] *= g.axis_coord(j);
  odd = normalize(odd);

  WaveFunction plus = superpose(cx(1.0, 0.0), even, cx(1.0, 0.0), odd);
  WaveFunction minus = superpose(cx(1.0, 0.0), even, cx(-1.0, 0.0), odd);

  std::vector<WeightedState> mixed = {{plus, 0.5}, {minus, 0.5}};
  std::vector<WeightedState> pair = {{even, 0.5}, {odd, 0.5}};

  GrwParams params;
  params.collapse_rate = 1.0;
  params.collapse_width = 4.0;

  FlashComparison cmp = flash_history_statistic(mixed, pair, h, params, 4.0,
                                                1000, Rng(907117, 3), lvl);

  r.pass = cmp.density_matrices_equal && cmp.first_flash_time.pass &&
           cmp.first_flash_position.pass && !cmp.matter_centroid.pass;
  r.detail = "density-matrix distance " + num(cmp.density_matrix_distance) +
             "; first-flash time KS " +
             (cmp.first_flash_time.pass ? "pass" : "FAIL") +
             ", position KS " +
             (cmp.first_flash_position.pass ? "pass" : "FAIL") +
             "; centroid KS detects the difference: " +
             (cmp.matter_centroid.pass ? "NO" : "yes");
  return r;
}

// --------------------------------------------------------------------------
// Structural identities of the minimal jump rates on randomized states and
// interactions: net current realized exactly, at most one direction open
// per pair, current antisymmetry at rounding level -- plus the worked
// two-configuration example sigma = 2 eps one way, 0 the other.
CheckResult check_bell_minimal_rates(double) {
  CheckResult r{"bell-minimal-rates", false, ""};

  bell::LatticeSpec lat;
  lat.sites = 5;
  lat.max_particles = 2;
  bell::SectorBasis basis(lat);
  const std::size_t dim = basis.size();

  Rng rng(371221, 6);
  double worst_resid = 0.0;
  double worst_anti = 0.0;
  bool one_sided = true;
  int instances = 0;

  for (int inst = 0; inst < 120; ++inst) {
    bell::InteractionSpec hi(dim);
    int added = 0;
    for (std::size_t i = 0; i < dim; ++i)
      for (std::size_t j = i + 1; j < dim; ++j)
        if (rng.uniform() < 0.35) {
          hi.add(i, j, cx(rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)));
          ++added;
        }
    if (added == 0) hi.add(0, 1, cx(0.3, 0.1));

    bell::SectoredState st = bell::make_sectored_state(basis);
    for (std::size_t k = 0; k < dim; ++k) {
      double re = 0.0, im = 0.0;
      do {
        re = rng.uniform(-1.0, 1.0);
        im = rng.uniform(-1.0, 1.0);
      } while (re * re + im * im < 0.02);
      st.amp[static_cast<Eigen::Index>(k)] = cx(re, im);
    }
    st = bell::normalize(st);
    ++instances;

    std::vector<std::vector<std::pair<std::size_t, double>>> rates(dim);
    for (std::size_t from = 0; from < dim; ++from)
      rates[from] = bell::jump_rates(st, from, hi);
    auto rate_of = [&rates](std::size_t to, std::size_t from) {
      for (const auto& [dest, sigma] : rates[from])
        if (dest == to) return sigma;
      return 0.0;
    };

    for (std::size_t to = 0; to < dim; ++to)
      for (std::size_t from = to + 1; from < dim; ++from) {
        if (hi.element(to, from) == cx(0.0, 0.0)) continue;
        const double jtf = bell::probability_current(st, to, from, hi);
        const double jft = bell::probability_current(st, from, to, hi);
        worst_anti = std::max(worst_anti, std::abs(jtf + jft));
        const double stf = rate_of(to, from);
        const double sft = rate_of(from, to);
        if (stf > 0.0 && sft > 0.0) one_sided = false;
        const double rho_from =
            std::norm(st.amp[static_cast<Eigen::Index>(from)]);
        const double rho_to = std::norm(st.amp[static_cast<Eigen::Index>(to)]);
        worst_resid = std::max(
            worst_resid, std::abs(stf * rho_from - sft * rho_to - jtf));
      }
  }

  // Worked example: two coupled one-particle configurations with equal
  // amplitudes and <q|H|q'> = i eps give sigma(q' -> q) = 2 eps and a
  // closed reverse direction.
  bell::LatticeSpec lat2;
  lat2.sites = 2;
  lat2.max_particles = 1;
  bell::SectorBasis basis2(lat2);
  const std::size_t iq = basis2.index_of({0});
  const std::size_t iq_prime = basis2.index_of({1});
  const double eps = 0.35;
  bell::InteractionSpec hi2(basis2.size());
  hi2.add(iq, iq_prime, cx(0.0, eps));

  bell::SectoredState st2 = bell::make_sectored_state(basis2);
  st2.amp[static_cast<Eigen::Index>(iq)] = cx(1.0 / std::sqrt(2.0), 0.0);
  st2.amp[static_cast<Eigen::Index>(iq_prime)] = cx(1.0 / std::sqrt(2.0), 0.0);
  st2 = bell::normalize(st2);

  double forward = 0.0;
  for (const auto& [dest, sigma] : bell::jump_rates(st2, iq_prime, hi2))
    if (dest == iq) forward = sigma;
  bool reverse_closed = true;
  for (const auto& [dest, sigma] : bell::jump_rates(st2, iq, hi2))
    if (dest == iq_prime && sigma > 0.0) reverse_closed = false;
  const bool example_ok =
      std::abs(forward - 2.0 * eps) < 1e-14 && reverse_closed;

  r.pass = worst_resid < 1e-12 && one_sided && worst_anti < 1e-14 &&
           example_ok;
  r.detail = std::to_string(instances) +
             " randomized instances: current residual " + num(worst_resid) +
             " (< 1e-12), antisymmetry " + num(worst_anti) +
             " (< 1e-14), one-sided " + (one_sided ? "yes" : "NO") +
             "; example rate " + num(forward) + " vs 2 eps = " +
             num(2.0 * eps) + ", reverse " +
             (reverse_closed ? "closed" : "OPEN");
  return r;
}

// --------------------------------------------------------------------------
// The jump process over lattice configurations keeps the walker ensemble
// aligned with |psi_t|^2: occupancy chi-square at the final time.
CheckResult check_bell_jump_equivariance(double level) {
  CheckResult r{"bell-jump-equivariance", false, ""};
  const double lvl = pick_level(level, 0.001);

  bell::LatticeSpec lat;
  lat.sites = 8;
  lat.max_particles = 3;
  bell::SectorBasis basis(lat);

  bell::BellHamiltonian h = bell::make_bell_hamiltonian(basis, 1.0);
  bell::add_uniform_creation(h.offdiag, basis, cx(0.05, 0.0));
  bell::add_ring_hopping(h.offdiag, basis, cx(0.1, 0.0));

  const std::size_t q0 = basis.index_of({0});
  bell::SectoredState psi0 = bell::make_sectored_state(basis);
  psi0.amp[static_cast<Eigen::Index>(q0)] = cx(1.0, 0.0);

  const double duration = 3.0;
  std::vector<uint64_t> counts = bell::pure_jump_occupancy(
      psi0, h, q0, duration, 0.0025, 10000, Rng(528461, 5));

  bell::ExactPropagator prop(basis, h);
  Eigen::VectorXcd amp_t = prop.evolve(psi0.amp, duration);
  std::vector<double> probs(basis.size(), 0.0);
  for (std::size_t k = 0; k < basis.size(); ++k)
    probs[k] = std::norm(amp_t[static_cast<Eigen::Index>(k)]);

  Chi2Result chi2 = chi2_against(counts, probs, lvl);
  r.pass = chi2.pass;
  r.detail = "10000 runs over " + std::to_string(basis.size()) +
             " configurations: " + chi2.describe();
  return r;
}

// --------------------------------------------------------------------------
// Two-sector walker ensemble: the fraction that has jumped to the created
// sector tracks the quantum weight of that sector within 3 standard errors
// at every probe time.
CheckResult check_hybrid_sector_weights(double) {
  CheckResult r{"hybrid-sector-weights", false, ""};

  bell::HybridModel model;
  model.grid1.dim_per_particle = 1;
  model.grid1.particles = 1;
  model.grid1.points_per_axis = 64;
  model.grid1.extent = 16.0;
  model.mass_a = 1.0;
  model.mass_b = 1.0;
  model.coupling = 0.18;
  model.kernel_width = 1.0;

  bell::HybridState psi0 = bell::make_hybrid_packet(model, 0.0, 1.5, 0.0);

  BohmRunConfig cfg;
  cfg.dt = 0.01;

  const int n_walkers = 1000;
  bell::HybridEnsembleReport rep = bell::hybrid_ensemble(
      psi0, model, n_walkers, {1.0, 2.0, 3.0}, cfg, Rng(774031, 8));

  const double active = static_cast<double>(rep.walkers - rep.node_failures);
  bool all_ok = active > 0.0;
  std::string lines;
  for (std::size_t i = 0; i < rep.times.size(); ++i) {
    const double w2 = rep.expected_upper[i];
    const double se = std::sqrt(std::max(w2 * (1.0 - w2), 1e-12) / active);
    const bool ok = std::abs(rep.fraction_upper[i] - w2) <= 3.0 * se;
    all_ok = all_ok && ok;
    lines += " t=" + num(rep.times[i]) + ": " + num(rep.fraction_upper[i]) +
             " vs " + num(w2) + " (3se " + num(3.0 * se) + ") " +
             (ok ? "ok" : "OFF") + ";";
  }
  r.pass = all_ok;
  r.detail = std::to_string(rep.walkers) + " walkers, " +
             std::to_string(rep.node_failures) + " node failures;" + lines;
  return r;
}

// --------------------------------------------------------------------------
// Independent time arguments need commuting per-particle generators: the
// commutator residual vanishes (to rounding) for external potentials only
// and grows by orders of magnitude once a pair interaction is switched on.
CheckResult check_multitime_consistency(double) {
  CheckResult r{"multitime-consistency", false, ""};

  GridSpec g;
  g.dim_per_particle = 1;
  g.particles = 2;
  g.points_per_axis = 64;
  g.extent = 16.0;

  const int P = g.points_per_axis;
  const double L = g.extent;
  const uint64_t cells = g.size();
  std::vector<double> v1(cells), v2(cells), w(cells);
  for (uint64_t c = 0; c < cells; ++c) {
    const double x1 = g.axis_coord(static_cast<int>(c / P));
    const double x2 = g.axis_coord(static_cast<int>(c % P));
    const double tau = 2.0 * M_PI / L;
    v1[c] = 0.3 * std::cos(tau * x1);
    v2[c] = 0.8 * std::sin(tau * x2);
    w[c] = 0.5 * std::cos(tau * (x1 - x2));
  }

  MultiTimeSpec free_spec;
  free_spec.masses = {1.0, 1.5};
  free_spec.potentials = {v1, v2};

  MultiTimeSpec coupled_spec = free_spec;
  coupled_spec.interaction = w;

  WaveFunction psi = gaussian_packet(g, {-2.0, 1.0}, {1.0, 1.2},
                                     {0.5, -0.3});

  const double r_free = multitime_consistency_residual(free_spec, psi);
  const double r_int = multitime_consistency_residual(coupled_spec, psi);

  r.pass = r_free < 1e-10 && r_int > 1e3 * std::max(r_free, 1e-300);
  r.detail = "commutator residual " + num(r_free) +
             " without interaction (< 1e-10), " + num(r_int) +
             " with interaction (ratio " + num(r_int / std::max(r_free, 1e-300)) +
             ", required > 1e3)";
  return r;
}

// --------------------------------------------------------------------------
// Independent reimplementation of the one-particle hyperbola density for
// the cross-check below: plain DFT of the packet, positive-energy
// projection, direct mode-sum evaluation and rejection sampling.  Shares no
// code with the library path beyond the input state.
struct OracleField {
  std::vector<double> k, energy;
  std::vector<std::array<double, 2>> spinor;
  std::vector<cx> coeff;
  double t0 = 0.0;
};

OracleField oracle_decompose(const WaveFunction& f, double mass) {
  const int P = f.grid.points_per_axis;
  const double L = f.grid.extent;
  const double x0 = f.grid.min_coord();
  const double h = f.grid.spacing();
  OracleField o;
  o.t0 = f.time;
  o.k.resize(static_cast<std::size_t>(P));
  o.energy.resize(static_cast<std::size_t>(P));
  o.spinor.resize(static_cast<std::size_t>(P));
  o.coeff.resize(static_cast<std::size_t>(P));
  for (int a = 0; a < P; ++a) {
    const double k = 2.0 * M_PI * (2 * a < P ? a : a - P) / L;
    const double e = std::sqrt(mass * mass + k * k);
    const double nrm = std::sqrt(2.0 * e * (e + mass));
    o.k[static_cast<std::size_t>(a)] = k;
    o.energy[static_cast<std::size_t>(a)] = e;
    o.spinor[static_cast<std::size_t>(a)] = {(e + mass) / nrm, k / nrm};
    cx a0 = 0.0, a1 = 0.0;
    for (int j = 0; j < P; ++j) {
      const cx phase = std::polar(1.0, -k * (x0 + j * h));
      a0 += f.at(0, static_cast<uint64_t>(j)) * phase;
      a1 += f.at(1, static_cast<uint64_t>(j)) * phase;
    }
    o.coeff[static_cast<std::size_t>(a)] =
        o.spinor[static_cast<std::size_t>(a)][0] * a0 +
        o.spinor[static_cast<std::size_t>(a)][1] * a1;
  }
  return o;
}

double oracle_surface_density(const OracleField& o,
                              const rel::SpacetimePoint& base, double T,
                              double chi) {
  const double t = base.t + T * std::cosh(chi);
  const double x = base.x + T * std::sinh(chi);
  cx p0 = 0.0, p1 = 0.0;
  for (std::size_t a = 0; a < o.k.size(); ++a) {
    const cx phase = std::polar(1.0, o.k[a] * x - o.energy[a] * (t - o.t0));
    p0 += o.coeff[a] * o.spinor[a][0] * phase;
    p1 += o.coeff[a] * o.spinor[a][1] * phase;
  }
  const double j0 = std::norm(p0) + std::norm(p1);
  const double j1 = 2.0 * std::real(std::conj(p0) * p1);
  const double w = std::cosh(chi) * j0 - std::sinh(chi) * j1;
  return w > 0.0 ? w : 0.0;
}

// --------------------------------------------------------------------------
// Relativistic flash sampler.  (a) The inverse-CDF draws reproduce the
// discretized surface density (chi-square at 0.1%, 1e4 draws).  (b) Every
// flash lies in the strict timelike future of its predecessor.  (c) A
// one-particle rejection sampler built from scratch agrees with the library
// draws (two-sample KS at 1%).
CheckResult check_flash_sampler(double level) {
  CheckResult r{"flash-sampler", false, ""};
  const double chi2_lvl = pick_level(level, 0.001);
  const double ks_lvl = pick_level(level, 0.01);

  GridSpec g;
  g.dim_per_particle = 1;
  g.particles = 1;
  g.points_per_axis = 64;
  g.extent = 24.0;

  // (a) two-particle surface density vs its own sampler.
  WaveFunction fa = dirac_packet_1d(g, 1.0, -2.0, 1.0, 0.4);
  WaveFunction fb = dirac_packet_1d(g, 1.0, 2.0, 1.0, -0.4);
  rel::MultiTimeWaveFunction psi2 =
      rel::MultiTimeWaveFunction::from_factors({fa, fb}, {1.0, 1.0});

  std::vector<rel::Flash> latest2 = {
      {0, {0.0, -2.0}, {1.0, 0.0}},
      {1, {0.0, 2.0}, {1.0, 0.0}},
  };
  rel::FlashSamplerOptions opts;
  opts.chi_max = 5.0;
  opts.cells = 128;
  const double T_fixed = 1.5;

  rel::HyperbolaDensity dens =
      rel::hyperbola_density(psi2, latest2, 1, T_fixed, opts);
  std::vector<double> probs(dens.weight.size());
  for (std::size_t j = 0; j < dens.weight.size(); ++j)
    probs[j] = dens.weight[j] / dens.total;

  const int n_draws = 10000;
  const double dchi = 2.0 * opts.chi_max / opts.cells;
  std::vector<uint64_t> counts(dens.weight.size(), 0);
  Rng rng_a(150261, 11);
  for (int i = 0; i < n_draws; ++i) {
    rel::Flash f = rel::sample_on_hyperbola(psi2, latest2, 1, T_fixed, opts,
                                            rng_a);
    const double chi = std::asinh(f.u[1]);
    int cell = static_cast<int>(std::floor((chi + opts.chi_max) / dchi));
    cell = std::clamp(cell, 0, opts.cells - 1);
    counts[static_cast<std::size_t>(cell)] += 1;
  }
  Chi2Result chi2 = chi2_against(counts, probs, chi2_lvl);

  // (b) causal ordering across generated flash histories, both label
  // orders.
  std::vector<rel::SeedFlash> seeds2 = {
      {{0.0, -2.0}, {1.0, 0.0}, 0},
      {{0.0, 2.0}, {1.0, 0.0}, 1},
  };
  uint64_t flashes_checked = 0, causal_violations = 0, label_violations = 0;
  Rng rng_b(150261, 12);
  for (int rep = 0; rep < 120; ++rep) {
    const rel::LabelOrder order = rep % 2 == 0 ? rel::LabelOrder::round_robin
                                               : rel::LabelOrder::random_label;
    rel::FlashRecord rec =
        rel::run_sf(psi2, seeds2, 1.0, 4, order, opts, rng_b.split(rep));
    std::vector<rel::SpacetimePoint> last = {seeds2[0].point, seeds2[1].point};
    for (const auto& gen : rec.generations) {
      std::vector<int> seen;
      for (const auto& f : gen) {
        seen.push_back(f.label);
        const double dt = f.point.t - last[static_cast<std::size_t>(f.label)].t;
        const double dx = f.point.x - last[static_cast<std::size_t>(f.label)].x;
        ++flashes_checked;
        if (!(dt > 0.0 && dt * dt - dx * dx > 0.0)) ++causal_violations;
        last[static_cast<std::size_t>(f.label)] = f.point;
      }
      std::sort(seen.begin(), seen.end());
      if (seen != std::vector<int>{0, 1}) ++label_violations;
    }
  }

  // (c) one-particle cross-implementation agreement, fixed surface.
  WaveFunction f1 = dirac_packet_1d(g, 1.0, 0.0, 1.0, 0.3);
  rel::MultiTimeWaveFunction psi1 =
      rel::MultiTimeWaveFunction::from_factors({f1}, {1.0});
  std::vector<rel::Flash> latest1 = {{0, {0.25, 0.4}, rel::boost_vector(0.3)}};
  const double T1 = 1.2;
  rel::FlashSamplerOptions opts1;  // default cells = 256

  const int n_ks = 2000;
  std::vector<double> lib_chi(n_ks);
  Rng rng_c(150261, 13);
  for (int i = 0; i < n_ks; ++i) {
    rel::Flash f = rel::sample_on_hyperbola(psi1, latest1, 0, T1, opts1,
                                            rng_c);
    lib_chi[static_cast<std::size_t>(i)] = std::asinh(f.u[1]);
  }

  OracleField oracle = oracle_decompose(f1, 1.0);
  double fmax = 0.0;
  for (int j = 0; j <= 2000; ++j) {
    const double chi = -opts1.chi_max + 2.0 * opts1.chi_max * j / 2000.0;
    fmax = std::max(fmax,
                    oracle_surface_density(oracle, latest1[0].point, T1, chi));
  }
  std::vector<double> oracle_chi;
  oracle_chi.reserve(static_cast<std::size_t>(n_ks));
  Rng rng_d(150261, 14);
  const double bound = 1.2 * fmax;
  int proposals = 0;
  while (static_cast<int>(oracle_chi.size()) < n_ks && proposals < 400000) {
    ++proposals;
    const double chi = rng_d.uniform(-opts1.chi_max, opts1.chi_max);
    const double y = rng_d.uniform(0.0, bound);
    if (y < oracle_surface_density(oracle, latest1[0].point, T1, chi))
      oracle_chi.push_back(chi);
  }
  bool oracle_filled = static_cast<int>(oracle_chi.size()) == n_ks;
  KsResult ks;
  if (oracle_filled) ks = ks_two_sample(lib_chi, oracle_chi, ks_lvl);

  r.pass = chi2.pass && causal_violations == 0 && label_violations == 0 &&
           flashes_checked > 0 && oracle_filled && ks.pass;
  r.detail = "draw histogram " + chi2.describe() + "; causal ordering " +
             std::to_string(flashes_checked - causal_violations) + "/" +
             std::to_string(flashes_checked) + " flashes; cross-sampler KS D=" +
             num(ks.statistic) + " (crit " + num(ks.critical) + ")";
  return r;
}

// --------------------------------------------------------------------------
// Determinism of the experiment runner: the same configuration and seed
// must produce byte-identical record and manifest files, independent of
// output directory and worker-thread count.
std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

CheckResult check_run_determinism(double) {
  CheckResult r{"run-determinism", false, ""};
  namespace fs = std::filesystem;

  const fs::path base = fs::temp_directory_path() / "ontosim-verify";
  fs::remove_all(base);
  fs::create_directories(base);

  struct Scenario {
    const char* tag;
    const char* text;
    int threads_b;
  };
  const Scenario scenarios[] = {
      {"grw",
       R"({"model":"grw","seed":7,"snapshot_times":[0.5,1.0],"params":{)"
       R"("points":16,"extent":8.0,"particles":1,"collapse_rate":1.0,)"
       R"("collapse_width":1.1,"duration":2.0,"runs":4,)"
       R"("packet":{"width":[0.8]}}})",
       2},
      {"bell_pure",
       R"({"model":"bell_pure","seed":11,"params":{"sites":5,)"
       R"("max_particles":2,"creation_amplitude":0.08,"hopping_amplitude":0.1,)"
       R"("duration":0.5,"dt":0.005,"runs":40}})",
       1},
      {"sf_flash",
       R"({"model":"sf_flash","seed":3,"params":{)"
       R"("points":64,"extent":24.0,"masses":[1.0],"generations":2,)"
       R"("runs":3,"cells":64}})",
       2},
  };

  bool all_ok = true;
  std::string detail;
  for (const Scenario& sc : scenarios) {
    const fs::path cfg_path = base / (std::string(sc.tag) + ".json");
    {
      std::ofstream out(cfg_path);
      out << sc.text;
    }
    ExperimentConfig cfg = load_config(cfg_path.string());

    cfg.out_dir = (base / (std::string(sc.tag) + "-a")).string();
    run_experiment(cfg, 1);
    const std::string records_a = slurp(fs::path(cfg.out_dir) / "records.jsonl");
    const std::string manifest_a = slurp(fs::path(cfg.out_dir) / "manifest.json");

    cfg.out_dir = (base / (std::string(sc.tag) + "-b")).string();
    run_experiment(cfg, sc.threads_b);
    const std::string records_b = slurp(fs::path(cfg.out_dir) / "records.jsonl");
    const std::string manifest_b = slurp(fs::path(cfg.out_dir) / "manifest.json");

    const bool ok = !records_a.empty() && records_a == records_b &&
                    !manifest_a.empty() && manifest_a == manifest_b;
    all_ok = all_ok && ok;
    detail += std::string(sc.tag) + ": " +
              (ok ? "identical" : "DIFFERENT") + " (" +
              std::to_string(records_a.size()) + " bytes); ";
  }
  fs::remove_all(base);

  r.pass = all_ok;
  r.detail = detail + "rerun and thread-count invariant";
  return r;
}

using CheckFn = CheckResult (*)(double);
struct CheckEntry {
  const char* name;
  CheckFn fn;
};

const CheckEntry kChecks[] = {
    {"flash-rate-arithmetic", check_flash_rate_arithmetic},
    {"bohm-equivariance", check_bohm_equivariance},
    {"bohm-free-packet-scaling", check_bohm_free_packet_scaling},
    {"grw-poisson-counts", check_grw_poisson_counts},
    {"grw-collapse-narrowing", check_grw_collapse_narrowing},
    {"grwf-ensemble-equivalence", check_grwf_ensemble_equivalence},
    {"bell-minimal-rates", check_bell_minimal_rates},
    {"bell-jump-equivariance", check_bell_jump_equivariance},
    {"hybrid-sector-weights", check_hybrid_sector_weights},
    {"multitime-consistency", check_multitime_consistency},
    {"flash-sampler", check_flash_sampler},
    {"run-determinism", check_run_determinism},
};

}  // namespace

std::vector<std::string> verification_names() {
  std::vector<std::string> names;
  for (const CheckEntry& e : kChecks) names.emplace_back(e.name);
  return names;
}

std::vector<CheckResult> run_verification(const std::vector<std::string>& names,
                                          double level) {
  std::vector<CheckResult> results;
  for (const CheckEntry& e : kChecks) {
    if (!names.empty()) {
      bool wanted = false;
      for (const std::string& n : names)
        if (std::string(e.name).find(n) != std::string::npos) wanted = true;
      if (!wanted) continue;
    }
    CheckResult res;
    try {
      res = e.fn(level);
    } catch (const std::exception& ex) {
      res.name = e.name;
      res.pass = false;
      res.detail = std::string("exception: ") + ex.what();
    }
    results.push_back(std::move(res));
  }
  return results;
}

}  // namespace ontosim::harness
