#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <complex>
#include <vector>

#include "ontosim/bohm.hpp"
#include "ontosim/dirac.hpp"
#include "ontosim/errors.hpp"
#include "ontosim/fft.hpp"
#include "ontosim/grid.hpp"
#include "ontosim/hamiltonian.hpp"
#include "ontosim/rng.hpp"
#include "ontosim/wavefunction.hpp"

using namespace ontosim;

namespace {

GridSpec grid_1d(int points, double extent,
                 Boundary boundary = Boundary::periodic) {
  GridSpec g;
  g.dim_per_particle = 1;
  g.particles = 1;
  g.points_per_axis = points;
  g.extent = extent;
  g.boundary = boundary;
  return g;
}

Configuration conf(std::initializer_list<double> q) {
  Configuration c;
  c.q = q;
  return c;
}

/// Spinless plane wave exp(i k x) on a periodic grid, unit quadrature norm.
WaveFunction plane_wave(const GridSpec& g, int mode) {
  WaveFunction psi = make_state(g);
  double k = fft::wavenumber(mode, g.points_per_axis, g.extent);
  double amp = 1.0 / std::sqrt(g.extent);
  for (int j = 0; j < g.points_per_axis; ++j)
    psi.amplitudes[static_cast<std::size_t>(j)] =
        std::polar(amp, k * g.axis_coord(j));
  return psi;
}

/// Odd two-lobe state x * gaussian(x), normalized: exact node at x = 0.
WaveFunction odd_state(const GridSpec& g, double width) {
  WaveFunction psi = gaussian_packet(g, {0.0}, {width}, {0.0});
  for (int j = 0; j < g.points_per_axis; ++j)
    psi.amplitudes[static_cast<std::size_t>(j)] *= g.axis_coord(j);
  return normalize(psi);
}

/// One unnormalized Gaussian factor exp(-(x-c)^2/(4 s^2) + i p x) and its
/// x-derivative, for closed-form guidance velocities of superpositions.
struct GaussTerm {
  double c, s, p;
  std::complex<double> value(double x) const {
    double u = x - c;
    return std::exp(std::complex<double>(-u * u / (4.0 * s * s), p * x));
  }
  std::complex<double> deriv(double x) const {
    double u = x - c;
    return value(x) *
           std::complex<double>(-u / (2.0 * s * s), p);
  }
};

double two_gauss_velocity(const GaussTerm& a, const GaussTerm& b, double wa,
                          double wb, double mass, double x) {
  // weights act on unit-norm packets, so fold in the L2 normalizers
  wa *= std::pow(2.0 * M_PI * a.s * a.s, -0.25);
  wb *= std::pow(2.0 * M_PI * b.s * b.s, -0.25);
  std::complex<double> psi = wa * a.value(x) + wb * b.value(x);
  std::complex<double> dpsi = wa * a.deriv(x) + wb * b.deriv(x);
  return std::imag(std::conj(psi) * dpsi) / (mass * std::norm(psi));
}

}  // namespace

TEST_CASE("plane wave is guided with velocity k over m") {
  GridSpec g = grid_1d(64, 16.0);
  WaveFunction psi = plane_wave(g, 3);
  double k = fft::wavenumber(3, g.points_per_axis, g.extent);
  double mass = 2.0;

  for (Interpolation interp :
       {Interpolation::trilinear, Interpolation::spectral}) {
    GuidanceField field(psi, {mass}, interp, 1e-12);
    for (double x : {-6.3, -1.9, 0.0, 0.77, 5.21}) {
      std::vector<double> v = field.velocity_at(conf({x}));
      REQUIRE(v.size() == 1);
      CHECK(v[0] == doctest::Approx(k / mass).epsilon(1e-10));
    }
  }
}

TEST_CASE("two-packet interference velocity matches the closed form") {
  GridSpec g = grid_1d(512, 40.0);
  GaussTerm a{-2.0, 1.1, 0.4};
  GaussTerm b{1.5, 0.8, -0.3};
  double wa = 1.0, wb = 0.7;

  WaveFunction psi = superpose(
      wa, gaussian_packet(g, {a.c}, {a.s}, {a.p}),
      wb, gaussian_packet(g, {b.c}, {b.s}, {b.p}));
  double mass = 1.3;

  GuidanceField spectral(psi, {mass}, Interpolation::spectral, 1e-12);
  GuidanceField linear(psi, {mass}, Interpolation::trilinear, 1e-12);

  for (double x : {-3.4, -2.05, -0.9, 0.31, 1.18, 2.6}) {
    double expected = two_gauss_velocity(a, b, wa, wb, mass, x);
    double vs = spectral.velocity_at(conf({x}))[0];
    double vl = linear.velocity_at(conf({x}))[0];
    CHECK(vs == doctest::Approx(expected).epsilon(1e-7));
    CHECK(vl == doctest::Approx(expected).epsilon(5e-3));
  }
}

TEST_CASE("density_at reports the interpolated probability density") {
  GridSpec g = grid_1d(256, 24.0);
  WaveFunction psi = gaussian_packet(g, {0.5}, {1.2}, {0.0});
  GuidanceField field(psi, {1.0}, Interpolation::spectral, 1e-12);
  for (double x : {-1.0, 0.5, 2.3}) {
    double expected = std::exp(-(x - 0.5) * (x - 0.5) / (2.0 * 1.2 * 1.2)) /
                      (1.2 * std::sqrt(2.0 * M_PI));
    CHECK(field.density_at(conf({x})) ==
          doctest::Approx(expected).epsilon(1e-6));
  }
}

TEST_CASE("velocity at an exact node raises instead of extrapolating") {
  GridSpec g = grid_1d(128, 24.0);
  WaveFunction psi = odd_state(g, 1.0);
  for (Interpolation interp :
       {Interpolation::trilinear, Interpolation::spectral}) {
    GuidanceField field(psi, {1.0}, interp, 1e-12);
    CHECK_THROWS_AS(field.velocity_at(conf({0.0})), NodeProximity);
    CHECK_NOTHROW(field.velocity_at(conf({1.0})));
  }
  CHECK_THROWS_AS(bohm_velocity(psi, conf({0.0}), {1.0}), NodeProximity);
}

TEST_CASE("velocity_scale multiplies the guidance law") {
  GridSpec g = grid_1d(256, 30.0);
  WaveFunction psi = superpose(1.0, gaussian_packet(g, {-1.0}, {1.0}, {0.5}),
                               0.6, gaussian_packet(g, {2.0}, {1.0}, {-0.2}));
  GuidanceField plain(psi, {1.0}, Interpolation::spectral, 1e-12, 1.0);
  GuidanceField scaled(psi, {1.0}, Interpolation::spectral, 1e-12, 2.5);
  for (double x : {-1.7, 0.2, 1.4}) {
    CHECK(scaled.velocity_at(conf({x}))[0] ==
          doctest::Approx(2.5 * plain.velocity_at(conf({x}))[0])
              .epsilon(1e-12));
  }
}

TEST_CASE("guidance field rejects malformed inputs") {
  GridSpec g = grid_1d(64, 16.0);
  WaveFunction psi = gaussian_packet(g, {0.0}, {1.0}, {0.0});

  WaveFunction spinor = make_state(g, 2);
  spinor.amplitudes[10] = 1.0;
  CHECK_THROWS_AS(
      GuidanceField(spinor, {1.0}, Interpolation::trilinear, 1e-12),
      WrongSpinDims);

  CHECK_THROWS_AS(
      GuidanceField(psi, {1.0, 1.0}, Interpolation::trilinear, 1e-12),
      SimError);

  GridSpec box = grid_1d(64, 16.0, Boundary::box);
  WaveFunction boxed = gaussian_packet(box, {0.0}, {1.0}, {0.0});
  CHECK_THROWS_AS(GuidanceField(boxed, {1.0}, Interpolation::spectral, 1e-12),
                  IncompatibleGrid);
  CHECK_NOTHROW(GuidanceField(boxed, {1.0}, Interpolation::trilinear, 1e-12));
}

TEST_CASE("advance_trajectory transports a plane wave ballistically") {
  GridSpec g = grid_1d(64, 16.0);
  WaveFunction psi = plane_wave(g, 2);
  double k = fft::wavenumber(2, g.points_per_axis, g.extent);

  HamiltonianSpec h;
  h.masses = {1.5};

  BohmRunConfig cfg;
  cfg.dt = 0.05;
  double duration = 0.173;

  GuidedRun run = advance_trajectory(psi, h, conf({0.4}), cfg, duration);
  const auto& samples = run.trajectory.samples;
  REQUIRE(samples.size() >= 2);
  CHECK(samples.front().t == doctest::Approx(0.0));
  CHECK(samples.back().t == doctest::Approx(duration).epsilon(1e-12));
  for (std::size_t i = 0; i + 2 < samples.size(); ++i)
    CHECK(samples[i + 1].t - samples[i].t ==
          doctest::Approx(cfg.dt).epsilon(1e-12));

  double expected = 0.4 + (k / 1.5) * duration;
  CHECK(samples.back().config.q[0] ==
        doctest::Approx(expected).epsilon(1e-9));
  CHECK(run.psi_final.time == doctest::Approx(duration).epsilon(1e-12));
}

TEST_CASE("free packet trajectories follow the spreading similarity law") {
  // x(t) = c + (p/m) t + (x0 - c) s(t)/s0 with s(t) = s0 sqrt(1+(t/2ms0^2)^2)
  GridSpec g = grid_1d(256, 30.0);
  double s0 = 1.0, p = 0.25, mass = 1.0, c = -1.0;
  WaveFunction psi = gaussian_packet(g, {c}, {s0}, {p});

  HamiltonianSpec h;
  h.masses = {mass};

  BohmRunConfig cfg;
  cfg.dt = 2e-3;
  cfg.interpolation = Interpolation::spectral;
  double duration = 2.0;

  double stretch = std::sqrt(1.0 + duration * duration / 4.0);
  SUBCASE("center walker rides the group velocity") {
    GuidedRun run = advance_trajectory(psi, h, conf({c}), cfg, duration);
    CHECK(run.trajectory.samples.back().config.q[0] ==
          doctest::Approx(c + p * duration).epsilon(1e-4));
  }
  SUBCASE("offset walker scales with the packet width") {
    GuidedRun run = advance_trajectory(psi, h, conf({c + 1.2}), cfg, duration);
    double expected = c + p * duration + 1.2 * stretch;
    CHECK(run.trajectory.samples.back().config.q[0] ==
          doctest::Approx(expected).epsilon(2e-3));
  }
}

TEST_CASE("guided_step records node hits and skips inactive walkers") {
  GridSpec g = grid_1d(128, 24.0);
  WaveFunction psi = odd_state(g, 1.0);
  // boost the (real, hence motionless) state so live walkers drift
  for (int j = 0; j < g.points_per_axis; ++j)
    psi.amplitudes[static_cast<std::size_t>(j)] *=
        std::polar(1.0, 0.7 * g.axis_coord(j));
  GuidanceField field(psi, {1.0}, Interpolation::spectral, 1e-12);

  BohmRunConfig cfg;
  std::vector<Configuration> walkers = {conf({0.0}), conf({1.0}),
                                        conf({-1.5})};
  std::vector<char> active = {1, 1, 0};
  std::vector<std::pair<std::size_t, double>> failures;

  guided_step(field, field, field, 0.01, cfg, walkers, active, failures);

  REQUIRE(failures.size() == 1);
  CHECK(failures[0].first == 0);
  CHECK(active[0] == 0);
  CHECK(active[1] == 1);
  CHECK(walkers[1].q[0] != doctest::Approx(1.0));  // it moved
  CHECK(walkers[2].q[0] == doctest::Approx(-1.5));  // untouched
}

TEST_CASE("transported samples stay |psi|^2 distributed") {
  GridSpec g = grid_1d(256, 30.0);
  WaveFunction psi = gaussian_packet(g, {0.0}, {1.0}, {0.3});
  HamiltonianSpec h;
  h.masses = {1.0};

  BohmRunConfig cfg;
  cfg.dt = 0.01;
  cfg.interpolation = Interpolation::spectral;

  EquivarianceReport report =
      equivariance_statistic(psi, h, 400, {0.8}, cfg, Rng(42, 1));
  CHECK(report.pass);
  REQUIRE(report.tests.size() == 1);
  CHECK(report.tests[0].ks.pass);
  CHECK(report.node_failures == 0);
}

TEST_CASE("a wrong transport law is detected by the same statistic") {
  GridSpec g = grid_1d(256, 30.0);
  WaveFunction psi = gaussian_packet(g, {0.0}, {1.0}, {0.3});
  HamiltonianSpec h;
  h.masses = {1.0};

  BohmRunConfig cfg;
  cfg.dt = 0.01;
  cfg.interpolation = Interpolation::spectral;
  cfg.velocity_scale = 3.0;  // deliberately not the physical law

  EquivarianceReport report =
      equivariance_statistic(psi, h, 400, {0.8}, cfg, Rng(42, 1));
  CHECK_FALSE(report.pass);
}

TEST_CASE("excess node failures abort the ensemble") {
  GridSpec g = grid_1d(128, 24.0);
  WaveFunction psi = odd_state(g, 1.0);
  HamiltonianSpec h;
  h.masses = {1.0};

  BohmRunConfig cfg;
  cfg.dt = 0.01;
  // Absurdly wide guard: a large fraction of walkers sits below it.
  cfg.node_guard = 0.1;

  CHECK_THROWS_AS(
      equivariance_statistic(psi, h, 200, {0.2}, cfg, Rng(7, 7)),
      RunFailure);
}

TEST_CASE("equivariance statistic validates its inputs") {
  GridSpec g = grid_1d(64, 16.0);
  WaveFunction psi = gaussian_packet(g, {0.0}, {1.0}, {0.0});
  HamiltonianSpec h;
  h.masses = {1.0};
  BohmRunConfig cfg;
  CHECK_THROWS_AS(equivariance_statistic(psi, h, 1, {0.5}, cfg, Rng(1, 1)),
                  EmptySample);
  CHECK_THROWS_AS(equivariance_statistic(psi, h, 100, {}, cfg, Rng(1, 1)),
                  EmptySample);
}

TEST_CASE("dirac velocity of a positive-energy mode is k over E") {
  GridSpec g = grid_1d(64, 16.0);
  double mass = 1.0;
  double k = fft::wavenumber(3, g.points_per_axis, g.extent);
  double u[2];
  dirac_spinor_plus(mass, k, u);

  WaveFunction psi = make_state(g, 2);
  for (int j = 0; j < g.points_per_axis; ++j) {
    std::complex<double> phase = std::polar(1.0, k * g.axis_coord(j));
    psi.at(0, static_cast<uint64_t>(j)) = u[0] * phase;
    psi.at(1, static_cast<uint64_t>(j)) = u[1] * phase;
  }
  psi = normalize(psi);

  double e = std::sqrt(k * k + mass * mass);
  for (double x : {-3.1, 0.0, 2.4})
    CHECK(dirac_velocity_1d(psi, x) ==
          doctest::Approx(k / e).epsilon(1e-10));
}

TEST_CASE("dirac velocity never exceeds light speed") {
  GridSpec g = grid_1d(64, 16.0);
  WaveFunction psi = dirac_packet_1d(g, 1.0, -1.0, 0.8, 2.0);
  for (int i = 0; i <= 200; ++i) {
    double x = -8.0 + 16.0 * i / 200.0;
    double v = dirac_velocity_1d(psi, x);
    CHECK(std::abs(v) <= 1.0 + 1e-12);
  }

  WaveFunction spinless = gaussian_packet(g, {0.0}, {1.0}, {0.0});
  CHECK_THROWS_AS(dirac_velocity_1d(spinless, 0.0), WrongSpinDims);
}
