#include "ontosim/bohm.hpp"

#include <algorithm>
#include <cmath>

#include "detail.hpp"
#include "ontosim/errors.hpp"
#include "ontosim/fft.hpp"
#include "ontosim/schrodinger.hpp"

namespace ontosim {

namespace {

// Multilinear interpolation of a per-cell field at continuum point q.
// Values live on the nodes x_j; periodic grids wrap the last interval, box
// grids clamp.
double interpolate(const std::vector<double>& field, const GridSpec& g,
                   const Configuration& q) {
  const int axes = g.axes();
  const int P = g.points_per_axis;
  const double h = g.spacing();
  int base[16];
  double frac[16];
  for (int a = 0; a < axes; ++a) {
    double t = (q.q[static_cast<std::size_t>(a)] - g.min_coord()) / h;
    double fl = std::floor(t);
    int j = static_cast<int>(fl);
    double f = t - fl;
    if (g.boundary == Boundary::periodic) {
      j %= P;
      if (j < 0) j += P;
    } else {
      if (j < 0) {
        j = 0;
        f = 0.0;
      }
      if (j >= P - 1) {
        j = P - 2;
        f = 1.0;
      }
    }
    base[a] = j;
    frac[a] = f;
  }
  double value = 0.0;
  for (int corner = 0; corner < (1 << axes); ++corner) {
    double w = 1.0;
    uint64_t flat = 0;
    for (int a = 0; a < axes; ++a) {
      int bit = (corner >> a) & 1;
      int j = base[a] + bit;
      if (g.boundary == Boundary::periodic && j >= P) j -= P;
      w *= bit ? frac[a] : (1.0 - frac[a]);
      flat = flat * static_cast<uint64_t>(P) + static_cast<uint64_t>(j);
    }
    if (w != 0.0) value += w * field[flat];
  }
  return value;
}

std::vector<std::vector<cx>> spectral_gradients(const WaveFunction& psi) {
  const GridSpec& g = psi.grid;
  std::vector<int> dims = detail::grid_dims(g);
  std::vector<cx> hat = psi.amplitudes;
  fft::forward(hat.data(), dims);
  const int P = g.points_per_axis;
  std::vector<std::vector<cx>> grads(
      static_cast<std::size_t>(g.axes()));
  for (int a = 0; a < g.axes(); ++a) {
    uint64_t post = 1;
    for (int b = a + 1; b < g.axes(); ++b) post *= static_cast<uint64_t>(P);
    std::vector<cx> d = hat;
    for (uint64_t c = 0; c < g.size(); ++c) {
      double k = fft::wavenumber_deriv(
          static_cast<int>((c / post) % static_cast<uint64_t>(P)), P,
          g.extent);
      d[c] *= cx(0.0, k);
    }
    fft::inverse(d.data(), dims);
    grads[static_cast<std::size_t>(a)] = std::move(d);
  }
  return grads;
}

}  // namespace

GuidanceField::GuidanceField(const WaveFunction& psi,
                             const std::vector<double>& masses,
                             Interpolation interpolation, double node_guard,
                             double velocity_scale)
    : grid_(psi.grid),
      time_(psi.time),
      interpolation_(interpolation),
      node_guard_(node_guard),
      velocity_scale_(velocity_scale),
      masses_(masses) {
  if (psi.spin_dims != 1)
    throw WrongSpinDims("GuidanceField: spinless states only");
  if (masses.size() != static_cast<std::size_t>(grid_.particles))
    throw SimError("GuidanceField: one mass per particle required");
  for (double m : masses_)
    if (!(m > 0.0)) throw SimError("GuidanceField: masses must be > 0");
  if (grid_.boundary != Boundary::periodic &&
      interpolation_ == Interpolation::spectral)
    throw IncompatibleGrid("spectral interpolation requires periodic grid");

  if (interpolation_ == Interpolation::spectral) {
    // Keep the normalized mode coefficients so evaluation is a direct
    // trigonometric sum.
    auto hat = std::make_shared<WaveFunction>(psi);
    fft::forward(hat->amplitudes.data(), detail::grid_dims(grid_));
    const double scale = 1.0 / static_cast<double>(grid_.size());
    for (cx& a : hat->amplitudes) a *= scale;
    psi_ = std::move(hat);
    return;
  }
  density_ = probability_density(psi);
  std::vector<std::vector<cx>> grads = spectral_gradients(psi);
  current_.resize(static_cast<std::size_t>(grid_.axes()));
  for (int a = 0; a < grid_.axes(); ++a) {
    const double m = masses_[static_cast<std::size_t>(a / grid_.dim_per_particle)];
    std::vector<double>& cur = current_[static_cast<std::size_t>(a)];
    cur.resize(grid_.size());
    const std::vector<cx>& dpsi = grads[static_cast<std::size_t>(a)];
    for (uint64_t c = 0; c < grid_.size(); ++c)
      cur[c] = std::imag(std::conj(psi.amplitudes[c]) * dpsi[c]) / m;
  }
}

void GuidanceField::eval_spectral(const Configuration& q, double* density,
                                  std::vector<double>* current) const {
  const GridSpec& g = grid_;
  const int P = g.points_per_axis;
  // Direct trigonometric evaluation: psi(q) and grad psi(q) from the mode
  // expansion.  O(grid size) per call; meant for cross-checks, not for hot
  // ensemble loops.
  const std::vector<cx>& hat = psi_->amplitudes;
  cx value(0.0, 0.0);
  std::vector<cx> grad(static_cast<std::size_t>(g.axes()), cx(0.0, 0.0));
  for (uint64_t c = 0; c < g.size(); ++c) {
    double phase = 0.0;
    double kvec[16];
    uint64_t rest = c;
    for (int a = g.axes() - 1; a >= 0; --a) {
      int idx = static_cast<int>(rest % static_cast<uint64_t>(P));
      rest /= static_cast<uint64_t>(P);
      double k = fft::wavenumber_deriv(idx, P, g.extent);
      kvec[a] = k;
      phase += k * (q.q[static_cast<std::size_t>(a)] - g.min_coord());
    }
    cx mode = hat[c] * cx(std::cos(phase), std::sin(phase));
    value += mode;
    for (int a = 0; a < g.axes(); ++a)
      grad[static_cast<std::size_t>(a)] += mode * cx(0.0, kvec[a]);
  }
  *density = std::norm(value);
  current->assign(static_cast<std::size_t>(g.axes()), 0.0);
  for (int a = 0; a < g.axes(); ++a) {
    const double m = masses_[static_cast<std::size_t>(a / g.dim_per_particle)];
    (*current)[static_cast<std::size_t>(a)] =
        std::imag(std::conj(value) * grad[static_cast<std::size_t>(a)]) / m;
  }
}

double GuidanceField::density_at(const Configuration& q) const {
  Configuration qc = canonicalize(q, grid_);
  if (interpolation_ == Interpolation::spectral) {
    double rho;
    std::vector<double> cur;
    eval_spectral(qc, &rho, &cur);
    return rho;
  }
  return interpolate(density_, grid_, qc);
}

std::vector<double> GuidanceField::velocity_at(const Configuration& q) const {
  if (q.q.size() != static_cast<std::size_t>(grid_.axes()))
    throw SimError("velocity_at: configuration has wrong dimension");
  Configuration qc = canonicalize(q, grid_);
  double rho;
  std::vector<double> cur(static_cast<std::size_t>(grid_.axes()));
  if (interpolation_ == Interpolation::spectral) {
    eval_spectral(qc, &rho, &cur);
  } else {
    rho = interpolate(density_, grid_, qc);
    for (int a = 0; a < grid_.axes(); ++a)
      cur[static_cast<std::size_t>(a)] =
          interpolate(current_[static_cast<std::size_t>(a)], grid_, qc);
  }
  if (!(rho > node_guard_))
    throw NodeProximity("guidance velocity requested at a node", time_);
  for (double& c : cur) c *= velocity_scale_ / rho;
  return cur;
}

std::vector<double> bohm_velocity(const WaveFunction& psi,
                                  const Configuration& q,
                                  const std::vector<double>& masses,
                                  Interpolation interpolation,
                                  double node_guard) {
  GuidanceField field(psi, masses, interpolation, node_guard);
  return field.velocity_at(q);
}

double dirac_velocity_1d(const WaveFunction& psi, double x,
                         double node_guard) {
  if (psi.spin_dims != 2 || psi.grid.particles != 1 ||
      psi.grid.dim_per_particle != 1)
    throw WrongSpinDims("dirac_velocity_1d: two-component 1D state required");
  const GridSpec& g = psi.grid;
  const uint64_t P = g.size();
  std::vector<double> rho(P), cur(P);
  for (uint64_t j = 0; j < P; ++j) {
    cx up = psi.at(0, j), dn = psi.at(1, j);
    rho[j] = std::norm(up) + std::norm(dn);
    cur[j] = 2.0 * std::real(std::conj(up) * dn);  // psi^dag sigma_x psi
  }
  Configuration q{{x}};
  Configuration qc = canonicalize(q, g);
  double r = interpolate(rho, g, qc);
  double c = interpolate(cur, g, qc);
  if (!(r > node_guard))
    throw NodeProximity("dirac velocity requested at a node", psi.time);
  double v = c / r;
  // |j| <= rho holds cell-wise and interpolation preserves it; clip the
  // last-ulp excess so callers can rely on |v| <= 1 exactly.
  if (v > 1.0) v = 1.0;
  if (v < -1.0) v = -1.0;
  return v;
}

void guided_step(const GuidanceField& at_start, const GuidanceField& at_mid,
                 const GuidanceField& at_end, double dt,
                 const BohmRunConfig& cfg, std::vector<Configuration>& walkers,
                 std::vector<char>& active,
                 std::vector<std::pair<std::size_t, double>>& failures) {
  const GridSpec& g = at_start.grid();
  const int axes = g.axes();
  auto shifted = [axes](const Configuration& q, const std::vector<double>& v,
                        double scale) {
    Configuration out = q;
    for (int a = 0; a < axes; ++a)
      out.q[static_cast<std::size_t>(a)] +=
          scale * v[static_cast<std::size_t>(a)];
    return out;
  };
  for (std::size_t w = 0; w < walkers.size(); ++w) {
    if (!active[w]) continue;
    try {
      Configuration& q = walkers[w];
      if (cfg.integrator == Integrator::rk4) {
        std::vector<double> k1 = at_start.velocity_at(q);
        std::vector<double> k2 = at_mid.velocity_at(shifted(q, k1, dt / 2));
        std::vector<double> k3 = at_mid.velocity_at(shifted(q, k2, dt / 2));
        std::vector<double> k4 = at_end.velocity_at(shifted(q, k3, dt));
        for (int a = 0; a < axes; ++a)
          q.q[static_cast<std::size_t>(a)] +=
              dt / 6.0 *
              (k1[static_cast<std::size_t>(a)] +
               2.0 * k2[static_cast<std::size_t>(a)] +
               2.0 * k3[static_cast<std::size_t>(a)] +
               k4[static_cast<std::size_t>(a)]);
      } else {
        std::vector<double> k1 = at_start.velocity_at(q);
        std::vector<double> k2 = at_mid.velocity_at(shifted(q, k1, dt / 2));
        for (int a = 0; a < axes; ++a)
          q.q[static_cast<std::size_t>(a)] +=
              dt * k2[static_cast<std::size_t>(a)];
      }
      q = canonicalize(q, g);
    } catch (const NodeProximity& e) {
      active[w] = 0;
      failures.emplace_back(w, e.time());
    }
  }
}

GuidedRun advance_trajectory(const WaveFunction& psi0,
                             const HamiltonianSpec& h, const Configuration& q0,
                             const BohmRunConfig& cfg, double duration) {
  if (!(cfg.dt > 0.0)) throw SimError("advance_trajectory: dt must be > 0");
  if (duration < 0.0) throw SimError("advance_trajectory: negative duration");
  h.validate(psi0.grid);
  SchrodingerStepper stepper(psi0.grid, h);

  GuidedRun run;
  run.psi_final = normalize(psi0);
  Configuration q = canonicalize(q0, psi0.grid);
  run.trajectory.samples.push_back({run.psi_final.time, q});

  GuidanceField field(run.psi_final, h.masses, cfg.interpolation,
                      cfg.node_guard, cfg.velocity_scale);
  std::vector<Configuration> walkers = {q};
  std::vector<char> active = {1};
  std::vector<std::pair<std::size_t, double>> failures;

  const double t_end = run.psi_final.time + duration;
  while (run.psi_final.time < t_end - 1e-12) {
    double dt = std::min(cfg.dt, t_end - run.psi_final.time);
    stepper.step(run.psi_final, dt / 2.0);
    GuidanceField mid(run.psi_final, h.masses, cfg.interpolation,
                      cfg.node_guard, cfg.velocity_scale);
    stepper.step(run.psi_final, dt / 2.0);
    GuidanceField end(run.psi_final, h.masses, cfg.interpolation,
                      cfg.node_guard, cfg.velocity_scale);
    guided_step(field, mid, end, dt, cfg, walkers, active, failures);
    if (!failures.empty())
      throw NodeProximity("trajectory hit a node", failures.front().second);
    field = std::move(end);
    run.trajectory.samples.push_back({run.psi_final.time, walkers[0]});
  }
  return run;
}

EquivarianceReport equivariance_statistic(
    const WaveFunction& psi0, const HamiltonianSpec& h, int n_walkers,
    const std::vector<double>& times, const BohmRunConfig& cfg, Rng rng,
    double level, double failure_limit) {
  if (n_walkers < 2)
    throw EmptySample("equivariance_statistic: need at least two walkers");
  if (times.empty())
    throw EmptySample("equivariance_statistic: need at least one time");
  if (!(cfg.dt > 0.0)) throw SimError("equivariance_statistic: dt must be > 0");
  h.validate(psi0.grid);

  WaveFunction psi = normalize(psi0);
  const GridSpec& g = psi.grid;
  SchrodingerStepper stepper(g, h);

  std::vector<double> sorted_times = times;
  std::sort(sorted_times.begin(), sorted_times.end());
  if (sorted_times.front() < psi.time - 1e-12)
    throw SimError("equivariance_statistic: requested time precedes state");

  std::vector<Configuration> walkers =
      sample_configurations(psi, n_walkers, rng);
  std::vector<char> active(walkers.size(), 1);
  std::vector<std::pair<std::size_t, double>> failures;

  EquivarianceReport report;
  report.walkers = walkers.size();

  GuidanceField field(psi, h.masses, cfg.interpolation, cfg.node_guard,
                      cfg.velocity_scale);

  auto run_tests_at = [&](double t) {
    std::vector<double> rho = probability_density(psi);
    for (int a = 0; a < g.axes(); ++a) {
      // Axis marginal: integrate the other axes out.
      const int P = g.points_per_axis;
      uint64_t post = 1;
      for (int b = a + 1; b < g.axes(); ++b) post *= static_cast<uint64_t>(P);
      std::vector<double> marg(static_cast<std::size_t>(P), 0.0);
      for (uint64_t c = 0; c < g.size(); ++c)
        marg[static_cast<std::size_t>((c / post) % static_cast<uint64_t>(P))] +=
            rho[c];
      double total = neumaier_sum(marg);
      std::vector<double> cdf(marg.size() + 1, 0.0);
      for (std::size_t j = 0; j < marg.size(); ++j)
        cdf[j + 1] = cdf[j] + marg[j] / total;
      const double x0 = g.min_coord();
      const double hsp = g.spacing();
      auto piecewise_cdf = [&, x0, hsp](double x) {
        double t_rel = (x - x0) / hsp;
        if (t_rel <= 0.0) return 0.0;
        if (t_rel >= static_cast<double>(marg.size())) return 1.0;
        std::size_t j = static_cast<std::size_t>(t_rel);
        double f = t_rel - static_cast<double>(j);
        return cdf[j] + f * (cdf[j + 1] - cdf[j]);
      };
      std::vector<double> positions;
      positions.reserve(walkers.size());
      for (std::size_t w = 0; w < walkers.size(); ++w)
        if (active[w])
          positions.push_back(walkers[w].q[static_cast<std::size_t>(a)]);
      if (positions.empty())
        throw RunFailure("equivariance_statistic: all walkers failed");
      EquivarianceTest test;
      test.time = t;
      test.axis = a;
      test.ks = ks_one_sample(std::move(positions), piecewise_cdf, level);
      report.tests.push_back(std::move(test));
    }
  };

  for (double target : sorted_times) {
    while (psi.time < target - 1e-12) {
      double dt = std::min(cfg.dt, target - psi.time);
      stepper.step(psi, dt / 2.0);
      GuidanceField mid(psi, h.masses, cfg.interpolation, cfg.node_guard,
                        cfg.velocity_scale);
      stepper.step(psi, dt / 2.0);
      GuidanceField end(psi, h.masses, cfg.interpolation, cfg.node_guard,
                        cfg.velocity_scale);
      guided_step(field, mid, end, dt, cfg, walkers, active, failures);
      field = std::move(end);
    }
    run_tests_at(target);
  }

  report.node_failures = failures.size();
  double failure_fraction =
      static_cast<double>(report.node_failures) /
      static_cast<double>(report.walkers);
  if (failure_fraction > failure_limit)
    throw RunFailure("equivariance_statistic: node failure fraction " +
                     std::to_string(failure_fraction) + " exceeds limit " +
                     std::to_string(failure_limit));
  report.pass = true;
  for (const auto& t : report.tests) report.pass = report.pass && t.ks.pass;
  return report;
}

}  // namespace ontosim
