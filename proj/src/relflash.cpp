#include "ontosim/relflash.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "detail.hpp"
#include "ontosim/dirac.hpp"
#include "ontosim/errors.hpp"
#include "ontosim/fft.hpp"

namespace ontosim::rel {

FourVelocity boost_vector(double rapidity) {
  return {std::cosh(rapidity), std::sinh(rapidity)};
}

void validate_seed(const SeedFlash& seed) {
  std::vector<std::string> bad;
  if (!(seed.u[0] > 0.0)) bad.push_back("seed u0 must be positive");
  if (!(std::abs(seed.u[0] - std::sqrt(1.0 + sqr(seed.u[1]))) <= 1e-12))
    bad.push_back("seed u is not a unit timelike vector");
  if (!std::isfinite(seed.point.t) || !std::isfinite(seed.point.x))
    bad.push_back("seed point must be finite");
  if (!bad.empty()) throw ValidationError(std::move(bad));
}

namespace {

// Per-particle mode tables: wavenumber, energy, and the positive-energy
// spinor (a, b); the negative-energy one is (-b, a).
struct ModeTables {
  std::vector<double> k, energy, ua, ub;
};

ModeTables make_tables(const GridSpec& g, double mass) {
  const int P = g.points_per_axis;
  ModeTables t;
  t.k.resize(static_cast<std::size_t>(P));
  t.energy.resize(static_cast<std::size_t>(P));
  t.ua.resize(static_cast<std::size_t>(P));
  t.ub.resize(static_cast<std::size_t>(P));
  for (int j = 0; j < P; ++j) {
    double k = fft::wavenumber(j, P, g.extent);
    double spinor[2];
    dirac_spinor_plus(mass, k, spinor);
    t.k[static_cast<std::size_t>(j)] = k;
    t.energy[static_cast<std::size_t>(j)] = std::sqrt(mass * mass + k * k);
    t.ua[static_cast<std::size_t>(j)] = spinor[0];
    t.ub[static_cast<std::size_t>(j)] = spinor[1];
  }
  return t;
}

void check_relflash_grid(const GridSpec& g) {
  g.validate();
  std::vector<std::string> bad;
  if (g.dim_per_particle != 1 || g.particles != 1)
    bad.push_back("multi-time states use a one-particle 1D axis grid");
  if (g.boundary != Boundary::periodic)
    bad.push_back("multi-time states require a periodic grid");
  if (!bad.empty()) throw ValidationError(std::move(bad));
}

void check_masses(const std::vector<double>& masses) {
  for (double m : masses)
    if (!(m > 0.0))
      throw ValidationError({"masses must be positive (the massless k = 0 "
                             "mode has a degenerate energy basis)"});
}

}  // namespace

void MultiTimeWaveFunction::check_time(double t) const {
  if (t < t0_ - 1e-9)
    throw Unreachable("evaluation at t=" + std::to_string(t) +
                      " precedes the initial surface t0=" +
                      std::to_string(t0_));
}

MultiTimeWaveFunction MultiTimeWaveFunction::from_factors(
    const std::vector<WaveFunction>& factors,
    const std::vector<double>& masses) {
  if (factors.empty() || factors.size() > 2)
    throw UnsupportedN("multi-time states support N = 1 or 2 particles, got " +
                       std::to_string(factors.size()));
  if (masses.size() != factors.size())
    throw ValidationError({"one mass per factor required"});
  check_masses(masses);
  check_relflash_grid(factors[0].grid);
  for (const WaveFunction& f : factors) {
    if (f.spin_dims != 2)
      throw WrongSpinDims("multi-time factors must be two-spinor states");
    if (!f.grid.same_geometry(factors[0].grid))
      throw IncompatibleGrid("multi-time factors must share one grid");
    if (std::abs(f.time - factors[0].time) > 1e-12)
      throw ValidationError({"factors must sit on one initial surface"});
  }

  const GridSpec& g = factors[0].grid;
  const int P = g.points_per_axis;
  const double scale = g.spacing() / std::sqrt(g.extent);

  // Per-particle coefficients in the energy basis.
  std::vector<std::vector<cx>> c(factors.size());
  for (std::size_t p = 0; p < factors.size(); ++p) {
    ModeTables t = make_tables(g, masses[p]);
    std::vector<cx> hat0(factors[p].amplitudes.begin(),
                         factors[p].amplitudes.begin() + P);
    std::vector<cx> hat1(factors[p].amplitudes.begin() + P,
                         factors[p].amplitudes.begin() + 2 * P);
    fft::forward(hat0.data(), {P});
    fft::forward(hat1.data(), {P});
    c[p].resize(static_cast<std::size_t>(2 * P));
    for (int j = 0; j < P; ++j) {
      // The index-space transform phases modes relative to grid point 0;
      // shift them so coefficients pair with plane waves e^{ikx} in
      // absolute coordinates.
      cx offset = std::polar(1.0, -t.k[static_cast<std::size_t>(j)] *
                                      g.min_coord());
      cx a = hat0[static_cast<std::size_t>(j)] * scale * offset;
      cx b = hat1[static_cast<std::size_t>(j)] * scale * offset;
      double ua = t.ua[static_cast<std::size_t>(j)];
      double ub = t.ub[static_cast<std::size_t>(j)];
      c[p][static_cast<std::size_t>(2 * j)] = ua * a + ub * b;
      c[p][static_cast<std::size_t>(2 * j + 1)] = -ub * a + ua * b;
    }
  }

  MultiTimeWaveFunction psi;
  psi.grid_ = g;
  psi.particles_ = static_cast<int>(factors.size());
  psi.masses_ = masses;
  psi.t0_ = factors[0].time;
  if (psi.particles_ == 1) {
    psi.coeff_ = std::move(c[0]);
  } else {
    psi.coeff_.resize(static_cast<std::size_t>(P) * P * 4);
    for (int k1 = 0; k1 < P; ++k1)
      for (int k2 = 0; k2 < P; ++k2)
        for (int s1 = 0; s1 < 2; ++s1)
          for (int s2 = 0; s2 < 2; ++s2)
            psi.coeff_[(static_cast<std::size_t>(k1) * P + k2) * 4 +
                       static_cast<std::size_t>(s1 * 2 + s2)] =
                c[0][static_cast<std::size_t>(2 * k1 + s1)] *
                c[1][static_cast<std::size_t>(2 * k2 + s2)];
  }
  psi.energies_.clear();
  for (std::size_t p = 0; p < factors.size(); ++p) {
    ModeTables t = make_tables(g, masses[p]);
    psi.energies_.insert(psi.energies_.end(), t.energy.begin(),
                         t.energy.end());
  }

  double sum = 0.0;
  for (const cx& a : psi.coeff_) sum += std::norm(a);
  if (sum <= 1e-300) throw ZeroNorm("multi-time state has zero norm");
  double inv = 1.0 / std::sqrt(sum);
  for (cx& a : psi.coeff_) a *= inv;
  return psi;
}

MultiTimeWaveFunction MultiTimeWaveFunction::from_grid2(
    const GridSpec& grid, const std::vector<double>& masses,
    const std::vector<cx>& amplitudes, double t0) {
  check_relflash_grid(grid);
  if (masses.size() != 2)
    throw ValidationError({"from_grid2 needs exactly two masses"});
  check_masses(masses);
  const int P = grid.points_per_axis;
  const std::size_t cells = static_cast<std::size_t>(P) * P;
  if (amplitudes.size() != 4 * cells)
    throw ValidationError({"from_grid2 needs 4 spin blocks of P^2 values"});

  // hat[ab](k1, k2), then project each momentum pair onto the energy basis.
  std::vector<std::vector<cx>> hat(4);
  for (int ab = 0; ab < 4; ++ab) {
    hat[static_cast<std::size_t>(ab)].assign(
        amplitudes.begin() + static_cast<std::ptrdiff_t>(ab * cells),
        amplitudes.begin() + static_cast<std::ptrdiff_t>((ab + 1) * cells));
    fft::forward(hat[static_cast<std::size_t>(ab)].data(), {P, P});
  }
  ModeTables t1 = make_tables(grid, masses[0]);
  ModeTables t2 = make_tables(grid, masses[1]);
  const double scale = sqr(grid.spacing()) / grid.extent;

  MultiTimeWaveFunction psi;
  psi.grid_ = grid;
  psi.particles_ = 2;
  psi.masses_ = masses;
  psi.t0_ = t0;
  psi.coeff_.resize(cells * 4);
  for (int k1 = 0; k1 < P; ++k1) {
    double u1[2][2] = {{t1.ua[static_cast<std::size_t>(k1)],
                        t1.ub[static_cast<std::size_t>(k1)]},
                       {-t1.ub[static_cast<std::size_t>(k1)],
                        t1.ua[static_cast<std::size_t>(k1)]}};
    for (int k2 = 0; k2 < P; ++k2) {
      double u2[2][2] = {{t2.ua[static_cast<std::size_t>(k2)],
                          t2.ub[static_cast<std::size_t>(k2)]},
                         {-t2.ub[static_cast<std::size_t>(k2)],
                          t2.ua[static_cast<std::size_t>(k2)]}};
      std::size_t cell = static_cast<std::size_t>(k1) * P +
                         static_cast<std::size_t>(k2);
      // Same absolute-coordinate phase shift as in from_factors, one
      // factor per particle momentum.
      cx offset = std::polar(1.0, -(t1.k[static_cast<std::size_t>(k1)] +
                                    t2.k[static_cast<std::size_t>(k2)]) *
                                      grid.min_coord());
      for (int s1 = 0; s1 < 2; ++s1)
        for (int s2 = 0; s2 < 2; ++s2) {
          cx acc(0.0, 0.0);
          for (int a = 0; a < 2; ++a)
            for (int b = 0; b < 2; ++b)
              acc += u1[s1][a] * u2[s2][b] *
                     hat[static_cast<std::size_t>(a * 2 + b)][cell];
          psi.coeff_[cell * 4 + static_cast<std::size_t>(s1 * 2 + s2)] =
              acc * scale * offset;
        }
    }
  }
  psi.energies_ = t1.energy;
  psi.energies_.insert(psi.energies_.end(), t2.energy.begin(),
                       t2.energy.end());

  double sum = 0.0;
  for (const cx& a : psi.coeff_) sum += std::norm(a);
  if (sum <= 1e-300) throw ZeroNorm("multi-time state has zero norm");
  double inv = 1.0 / std::sqrt(sum);
  for (cx& a : psi.coeff_) a *= inv;
  return psi;
}

std::array<cx, 2> MultiTimeWaveFunction::evaluate1(
    const SpacetimePoint& p) const {
  if (particles_ != 1)
    throw UnsupportedN("evaluate1 requires a one-particle state");
  check_time(p.t);
  const int P = grid_.points_per_axis;
  const double tau = p.t - t0_;
  ModeTables t = make_tables(grid_, masses_[0]);
  const double inv_rt_l = 1.0 / std::sqrt(grid_.extent);
  std::array<cx, 2> out{cx(0.0, 0.0), cx(0.0, 0.0)};
  for (int j = 0; j < P; ++j) {
    double k = t.k[static_cast<std::size_t>(j)];
    double e = t.energy[static_cast<std::size_t>(j)];
    cx space = std::polar(1.0, k * p.x);
    cx down = std::polar(1.0, -e * tau);  // positive-energy phase
    cx plus = coeff_[static_cast<std::size_t>(2 * j)] * space * down;
    cx minus =
        coeff_[static_cast<std::size_t>(2 * j + 1)] * space * std::conj(down);
    double ua = t.ua[static_cast<std::size_t>(j)];
    double ub = t.ub[static_cast<std::size_t>(j)];
    out[0] += (ua * plus - ub * minus) * inv_rt_l;
    out[1] += (ub * plus + ua * minus) * inv_rt_l;
  }
  return out;
}

std::array<cx, 4> MultiTimeWaveFunction::evaluate2(
    const SpacetimePoint& p1, const SpacetimePoint& p2) const {
  if (particles_ != 2)
    throw UnsupportedN("evaluate2 requires a two-particle state");
  check_time(p1.t);
  check_time(p2.t);
  const int P = grid_.points_per_axis;
  const double tau1 = p1.t - t0_, tau2 = p2.t - t0_;
  ModeTables t1 = make_tables(grid_, masses_[0]);
  ModeTables t2 = make_tables(grid_, masses_[1]);

  // Per-mode factors u_s(k) exp(i k x - i (+/-) E tau) for each particle.
  auto factors = [P](const ModeTables& t, double x,
                     double tau) -> std::vector<cx> {
    std::vector<cx> f(static_cast<std::size_t>(P) * 4);
    for (int j = 0; j < P; ++j) {
      cx space = std::polar(1.0, t.k[static_cast<std::size_t>(j)] * x);
      cx down = std::polar(1.0, -t.energy[static_cast<std::size_t>(j)] * tau);
      cx plus = space * down;
      cx minus = space * std::conj(down);
      double ua = t.ua[static_cast<std::size_t>(j)];
      double ub = t.ub[static_cast<std::size_t>(j)];
      f[static_cast<std::size_t>(j * 4 + 0)] = ua * plus;   // s=+, comp 0
      f[static_cast<std::size_t>(j * 4 + 1)] = ub * plus;   // s=+, comp 1
      f[static_cast<std::size_t>(j * 4 + 2)] = -ub * minus;  // s=-, comp 0
      f[static_cast<std::size_t>(j * 4 + 3)] = ua * minus;   // s=-, comp 1
    }
    return f;
  };
  std::vector<cx> f1 = factors(t1, p1.x, tau1);
  std::vector<cx> f2 = factors(t2, p2.x, tau2);

  std::array<cx, 4> out{cx(0.0, 0.0), cx(0.0, 0.0), cx(0.0, 0.0),
                        cx(0.0, 0.0)};
  const double inv_l = 1.0 / grid_.extent;
  for (int k1 = 0; k1 < P; ++k1)
    for (int k2 = 0; k2 < P; ++k2) {
      const cx* block = coeff_.data() +
                        (static_cast<std::size_t>(k1) * P + k2) * 4;
      for (int s1 = 0; s1 < 2; ++s1)
        for (int s2 = 0; s2 < 2; ++s2) {
          cx c = block[s1 * 2 + s2];
          if (c == cx(0.0, 0.0)) continue;
          for (int a = 0; a < 2; ++a) {
            cx left = f1[static_cast<std::size_t>(k1 * 4 + s1 * 2 + a)];
            for (int b = 0; b < 2; ++b)
              out[static_cast<std::size_t>(a * 2 + b)] +=
                  c * left *
                  f2[static_cast<std::size_t>(k2 * 4 + s2 * 2 + b)] * inv_l;
          }
        }
    }
  return out;
}

CurrentTensor multitime_current(const MultiTimeWaveFunction& psi,
                                const SpacetimePoint& x1,
                                const SpacetimePoint& x2) {
  std::array<cx, 4> w = psi.evaluate2(x1, x2);
  CurrentTensor j;
  j[0][0] = std::norm(w[0]) + std::norm(w[1]) + std::norm(w[2]) +
            std::norm(w[3]);
  // sigma_x on the first spinor index: (a=0) <-> (a=1).
  j[1][0] = 2.0 * std::real(std::conj(w[0]) * w[2] + std::conj(w[1]) * w[3]);
  // sigma_x on the second spinor index: (b=0) <-> (b=1).
  j[0][1] = 2.0 * std::real(std::conj(w[0]) * w[1] + std::conj(w[2]) * w[3]);
  // sigma_x on both.
  j[1][1] = 2.0 * std::real(std::conj(w[0]) * w[3] + std::conj(w[1]) * w[2]);
  return j;
}

std::array<double, 2> single_current(const MultiTimeWaveFunction& psi,
                                     const SpacetimePoint& x) {
  std::array<cx, 2> w = psi.evaluate1(x);
  return {std::norm(w[0]) + std::norm(w[1]),
          2.0 * std::real(std::conj(w[0]) * w[1])};
}

std::pair<double, double> hbd_velocity(const MultiTimeWaveFunction& psi,
                                       const SpacetimePoint& x1,
                                       const SpacetimePoint& x2,
                                       double node_guard) {
  if (psi.particles() != 2)
    throw UnsupportedN("hbd_velocity requires a two-particle state");
  CurrentTensor j = multitime_current(psi, x1, x2);
  if (j[0][0] <= node_guard)
    throw NodeProximity("hbd_velocity: j^00 below the node guard", x1.t);
  double v1 = j[1][0] / j[0][0];
  double v2 = j[0][1] / j[0][0];
  return {std::clamp(v1, -1.0, 1.0), std::clamp(v2, -1.0, 1.0)};
}

namespace {

// The moving particle's effective mode weights after contracting the fixed
// arguments: density(x) = sum_c phi_c^dag (n_mu A^mu) phi_c with
// phi_{c,comp}(x) = sum_{k,s} spin_{s,comp}(k) e^{i k x - i s E tau} g_c[k,s].
struct EffectiveModes {
  ModeTables tables;                // moving particle
  std::vector<std::vector<cx>> g;  // fields x (k*2 + s)
};

EffectiveModes contract_fixed(const MultiTimeWaveFunction& psi,
                              const std::vector<Flash>& latest, int label) {
  const GridSpec& grid = psi.grid();
  const int P = grid.points_per_axis;
  EffectiveModes em;
  em.tables = make_tables(grid, psi.masses()[static_cast<std::size_t>(label)]);

  if (psi.particles() == 1) {
    em.g.assign(1, std::vector<cx>(psi.coefficients().begin(),
                                   psi.coefficients().end()));
    const double inv = 1.0 / std::sqrt(grid.extent);
    for (cx& a : em.g[0]) a *= inv;
    return em;
  }

  const Flash& fixed = latest[static_cast<std::size_t>(1 - label)];
  const double tau = fixed.point.t - psi.initial_time();
  if (tau < -1e-9)
    throw Unreachable("fixed flash at t=" + std::to_string(fixed.point.t) +
                      " precedes the initial surface");
  ModeTables tf =
      make_tables(grid, psi.masses()[static_cast<std::size_t>(1 - label)]);

  // Spectral decomposition of the fixed-particle contraction matrix
  // u_nu A^nu = u0 I - u1 sigma_x: eigenvectors (1, +/-1)/sqrt(2).
  const double lam[2] = {fixed.u[0] - fixed.u[1], fixed.u[0] + fixed.u[1]};
  const double vsign[2] = {1.0, -1.0};

  em.g.assign(2, std::vector<cx>(static_cast<std::size_t>(2 * P),
                                 cx(0.0, 0.0)));
  const double inv_l = 1.0 / grid.extent;
  for (int km = 0; km < P; ++km)
    for (int sm = 0; sm < 2; ++sm) {
      cx b0(0.0, 0.0), b1(0.0, 0.0);
      for (int kf = 0; kf < P; ++kf) {
        cx space = std::polar(1.0, tf.k[static_cast<std::size_t>(kf)] *
                                       fixed.point.x);
        cx down = std::polar(
            1.0, -tf.energy[static_cast<std::size_t>(kf)] * tau);
        double ua = tf.ua[static_cast<std::size_t>(kf)];
        double ub = tf.ub[static_cast<std::size_t>(kf)];
        for (int sf = 0; sf < 2; ++sf) {
          std::size_t idx =
              (label == 0)
                  ? (static_cast<std::size_t>(km) * P + kf) * 4 +
                        static_cast<std::size_t>(sm * 2 + sf)
                  : (static_cast<std::size_t>(kf) * P + km) * 4 +
                        static_cast<std::size_t>(sf * 2 + sm);
          cx c = psi.coefficients()[idx];
          if (c == cx(0.0, 0.0)) continue;
          cx phase = space * ((sf == 0) ? down : std::conj(down));
          double comp0 = (sf == 0) ? ua : -ub;
          double comp1 = (sf == 0) ? ub : ua;
          cx amp = c * phase;
          b0 += amp * comp0;
          b1 += amp * comp1;
        }
      }
      for (int cfield = 0; cfield < 2; ++cfield) {
        cx proj = (b0 + vsign[cfield] * b1) / std::sqrt(2.0);
        em.g[static_cast<std::size_t>(cfield)]
            [static_cast<std::size_t>(2 * km + sm)] =
                proj * std::sqrt(lam[cfield]) * inv_l;
      }
    }
  return em;
}

// n_mu-contracted current density of the effective fields at one point.
double contracted_density(const EffectiveModes& em, double x, double tau,
                          double n0, double n1) {
  const std::size_t modes = em.tables.k.size();
  double value = 0.0;
  for (const std::vector<cx>& g : em.g) {
    cx phi0(0.0, 0.0), phi1(0.0, 0.0);
    for (std::size_t j = 0; j < modes; ++j) {
      cx space = std::polar(1.0, em.tables.k[j] * x);
      cx down = std::polar(1.0, -em.tables.energy[j] * tau);
      double ua = em.tables.ua[j];
      double ub = em.tables.ub[j];
      cx plus = g[2 * j] * space * down;
      cx minus = g[2 * j + 1] * space * std::conj(down);
      phi0 += ua * plus - ub * minus;
      phi1 += ub * plus + ua * minus;
    }
    value += n0 * (std::norm(phi0) + std::norm(phi1)) -
             n1 * 2.0 * std::real(std::conj(phi0) * phi1);
  }
  return value;
}

void check_sampler_args(const MultiTimeWaveFunction& psi,
                        const std::vector<Flash>& latest, int label, double T,
                        const FlashSamplerOptions& opts) {
  std::vector<std::string> bad;
  if (latest.size() != static_cast<std::size_t>(psi.particles()))
    bad.push_back("one latest flash per label required");
  if (label < 0 || label >= psi.particles())
    bad.push_back("label out of range");
  if (!(T > 0.0)) bad.push_back("timelike distance T must be > 0");
  if (!(opts.chi_max > 0.0)) bad.push_back("chi_max must be > 0");
  if (opts.cells < 8) bad.push_back("need at least 8 rapidity cells");
  if (!bad.empty()) throw ValidationError(std::move(bad));
}

}  // namespace

HyperbolaDensity hyperbola_density(const MultiTimeWaveFunction& psi,
                                   const std::vector<Flash>& latest,
                                   int label, double T,
                                   const FlashSamplerOptions& opts) {
  check_sampler_args(psi, latest, label, T, opts);
  const SpacetimePoint prev = latest[static_cast<std::size_t>(label)].point;
  EffectiveModes em = contract_fixed(psi, latest, label);

  HyperbolaDensity density;
  density.T = T;
  density.chi_max = opts.chi_max;
  density.weight.resize(static_cast<std::size_t>(opts.cells));
  const double dchi = 2.0 * opts.chi_max / opts.cells;

  for (int j = 0; j < opts.cells; ++j) {
    double chi = -opts.chi_max + (j + 0.5) * dchi;
    double ch = std::cosh(chi), sh = std::sinh(chi);
    double t = prev.t + T * ch;
    double x = prev.x + T * sh;
    double tau = t - psi.initial_time();
    if (tau < -1e-9)
      throw Unreachable("hyperbola point at t=" + std::to_string(t) +
                        " precedes the initial surface");
    // Lowered-index normal (ch, -sh); contraction of the positive tensor
    // keeps the value >= 0 up to roundoff, which the clip absorbs.
    double w = contracted_density(em, x, tau, ch, sh) * T * dchi;
    density.weight[static_cast<std::size_t>(j)] = std::max(0.0, w);
  }
  density.total = neumaier_sum(density.weight);
  density.edge_mass =
      (density.total > 0.0)
          ? (density.weight.front() + density.weight.back()) / density.total
          : 0.0;
  return density;
}

Flash sample_on_hyperbola(const MultiTimeWaveFunction& psi,
                          const std::vector<Flash>& latest, int label,
                          double T, const FlashSamplerOptions& opts,
                          Rng& rng) {
  HyperbolaDensity density = hyperbola_density(psi, latest, label, T, opts);
  if (density.total <= 1e-300)
    throw DegenerateDensity(
        "flash density normalizer underflows on the truncated hyperbola");
  const double dchi = 2.0 * opts.chi_max / opts.cells;
  double u = rng.uniform() * density.total;
  double acc = 0.0;
  int cell = -1;
  double frac = 0.0;
  for (int j = 0; j < opts.cells; ++j) {
    double w = density.weight[static_cast<std::size_t>(j)];
    if (w > 0.0 && u < acc + w) {
      cell = j;
      frac = (u - acc) / w;
      break;
    }
    acc += w;
  }
  if (cell < 0) {  // roundoff spill: take the last populated cell
    for (int j = opts.cells - 1; j >= 0; --j)
      if (density.weight[static_cast<std::size_t>(j)] > 0.0) {
        cell = j;
        frac = 0.5;
        break;
      }
  }
  double chi = -opts.chi_max + (cell + std::min(frac, 1.0 - 1e-12)) * dchi;

  const SpacetimePoint prev = latest[static_cast<std::size_t>(label)].point;
  Flash flash;
  flash.label = label;
  flash.point = {prev.t + T * std::cosh(chi), prev.x + T * std::sinh(chi)};
  flash.u = boost_vector(chi);
  return flash;
}

Flash sample_next_flash(const MultiTimeWaveFunction& psi,
                        const std::vector<Flash>& latest, int label,
                        double lambda, const FlashSamplerOptions& opts,
                        Rng& rng) {
  if (!(lambda > 0.0))
    throw ValidationError({"flash rate lambda must be > 0"});
  double T = rng.exponential(lambda);
  return sample_on_hyperbola(psi, latest, label, T, opts, rng);
}

FlashRecord run_sf(const MultiTimeWaveFunction& psi,
                   const std::vector<SeedFlash>& seeds, double lambda,
                   int n_generations, LabelOrder order,
                   const FlashSamplerOptions& opts, Rng rng) {
  const int n = psi.particles();
  std::vector<std::string> bad;
  if (seeds.size() != static_cast<std::size_t>(n))
    bad.push_back("exactly one seed per label required");
  if (n_generations < 1) bad.push_back("n_generations must be >= 1");
  if (!(lambda > 0.0)) bad.push_back("flash rate lambda must be > 0");
  if (!bad.empty()) throw ValidationError(std::move(bad));

  std::vector<Flash> latest(static_cast<std::size_t>(n));
  std::vector<char> seen(static_cast<std::size_t>(n), 0);
  for (const SeedFlash& seed : seeds) {
    validate_seed(seed);
    if (seed.label < 0 || seed.label >= n ||
        seen[static_cast<std::size_t>(seed.label)])
      throw ValidationError({"seed labels must be 0..N-1, one each"});
    seen[static_cast<std::size_t>(seed.label)] = 1;
    latest[static_cast<std::size_t>(seed.label)] =
        Flash{seed.label, seed.point, seed.u};
  }

  FlashRecord record;
  record.seeds = seeds;
  record.generations.reserve(static_cast<std::size_t>(n_generations));
  std::vector<int> labels(static_cast<std::size_t>(n));
  for (int g = 0; g < n_generations; ++g) {
    for (int i = 0; i < n; ++i) labels[static_cast<std::size_t>(i)] = i;
    if (order == LabelOrder::random_label)
      for (int i = n - 1; i > 0; --i)
        std::swap(labels[static_cast<std::size_t>(i)],
                  labels[rng.uniform_index(static_cast<uint64_t>(i + 1))]);
    std::vector<Flash> generation;
    generation.reserve(static_cast<std::size_t>(n));
    for (int label : labels) {
      Flash flash = sample_next_flash(psi, latest, label, lambda, opts, rng);
      latest[static_cast<std::size_t>(label)] = flash;
      generation.push_back(flash);
    }
    record.generations.push_back(std::move(generation));
  }
  return record;
}

}  // namespace ontosim::rel
