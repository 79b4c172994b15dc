#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <utility>
#include <vector>

#include "ontosim/errors.hpp"
#include "ontosim/grid.hpp"
#include "ontosim/grw.hpp"
#include "ontosim/hamiltonian.hpp"
#include "ontosim/rng.hpp"
#include "ontosim/stats.hpp"
#include "ontosim/wavefunction.hpp"

using namespace ontosim;

namespace {

GridSpec make_grid(int particles, int points, double extent,
                   Boundary boundary = Boundary::periodic) {
  GridSpec g;
  g.dim_per_particle = 1;
  g.particles = particles;
  g.points_per_axis = points;
  g.extent = extent;
  g.boundary = boundary;
  return g;
}

/// Reference collapse-center density: position marginal convolved with a
/// normalized Gaussian, periodic images summed explicitly, then
/// renormalized to unit quadrature integral.
std::vector<double> convolved_marginal_1d(const WaveFunction& psi, int label,
                                          double width) {
  const GridSpec& g = psi.grid;
  const int P = g.points_per_axis;
  const double h = g.spacing();
  std::vector<double> m = marginal_density(psi, label);
  std::vector<double> out(static_cast<std::size_t>(P), 0.0);
  for (int i = 0; i < P; ++i) {
    double xi = g.axis_coord(i);
    double acc = 0.0;
    for (int j = 0; j < P; ++j) {
      double xj = g.axis_coord(j);
      for (int n = -4; n <= 4; ++n) {
        double d = xi - xj + n * g.extent;
        acc += m[static_cast<std::size_t>(j)] * h *
               std::exp(-d * d / (2.0 * width * width)) /
               (width * std::sqrt(2.0 * M_PI));
      }
    }
    out[static_cast<std::size_t>(i)] = acc;
  }
  double total = 0.0;
  for (double v : out) total += v * h;
  for (double& v : out) v /= total;
  return out;
}

}  // namespace

TEST_CASE("collapse rates per particle and in total") {
  GrwParams p;
  p.collapse_rate = 0.4;

  SUBCASE("uniform mode ignores the masses") {
    std::vector<double> masses = {1.0, 5.0, 0.2};
    for (int i = 0; i < 3; ++i)
      CHECK(p.rate_for(i, masses) == doctest::Approx(0.4));
    CHECK(p.total_rate(masses) == doctest::Approx(1.2));
  }

  SUBCASE("mass-proportional mode scales by the reference mass") {
    p.lambda_mode = LambdaMode::mass_proportional;
    std::vector<double> masses = {1.0, 3.0};

    // reference 0 selects the smallest mass
    CHECK(p.rate_for(0, masses) == doctest::Approx(0.4));
    CHECK(p.rate_for(1, masses) == doctest::Approx(1.2));
    CHECK(p.total_rate(masses) == doctest::Approx(1.6));

    p.reference_mass = 2.0;
    CHECK(p.rate_for(0, masses) == doctest::Approx(0.2));
    CHECK(p.rate_for(1, masses) == doctest::Approx(0.6));
    CHECK(p.total_rate(masses) == doctest::Approx(0.8));
  }
}

TEST_CASE("collapse width must resolve on the grid") {
  GridSpec g = make_grid(1, 16, 16.0);  // spacing 1
  GrwParams p;
  p.collapse_width = 1.9;
  CHECK_THROWS_AS(p.validate(g), ValidationError);
  p.collapse_width = 2.0;  // exactly two spacings is allowed
  CHECK_NOTHROW(p.validate(g));
}

TEST_CASE("waiting times are exponential at the total rate") {
  GrwParams p;
  p.collapse_rate = 0.5;
  std::vector<double> masses = {1.0, 1.0, 1.0};  // total rate 1.5

  Rng rng(1234, 0);
  std::vector<double> draws(2000);
  for (double& t : draws) t = sample_waiting_time(p, masses, rng);

  KsResult ks = ks_one_sample(
      draws, [](double t) { return t < 0 ? 0.0 : 1.0 - std::exp(-1.5 * t); },
      0.01);
  CHECK(ks.pass);
}

TEST_CASE("collapse-center density is the smeared position marginal") {
  GridSpec g = make_grid(1, 64, 16.0);
  WaveFunction psi = superpose(1.0, gaussian_packet(g, {-3.0}, {0.8}, {0.5}),
                               0.7, gaussian_packet(g, {2.0}, {1.1}, {0.0}));
  GrwParams p;
  p.collapse_width = 1.2;

  std::vector<double> dens = collapse_center_density(psi, 0, p);
  std::vector<double> oracle = convolved_marginal_1d(psi, 0, p.collapse_width);
  REQUIRE(dens.size() == oracle.size());
  double total = 0.0;
  for (std::size_t i = 0; i < dens.size(); ++i) {
    CHECK(dens[i] == doctest::Approx(oracle[i]).epsilon(1e-8));
    total += dens[i] * g.spacing();
  }
  CHECK(total == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("collapse-center density smears the chosen particle only") {
  GridSpec g = make_grid(2, 32, 16.0);
  WaveFunction psi = gaussian_packet(g, {-2.0, 3.0}, {0.7, 1.0}, {0.0, 0.0});
  GrwParams p;
  p.collapse_width = 1.0;

  for (int label = 0; label < 2; ++label) {
    std::vector<double> dens = collapse_center_density(psi, label, p);
    std::vector<double> oracle =
        convolved_marginal_1d(psi, label, p.collapse_width);
    for (std::size_t i = 0; i < dens.size(); ++i)
      CHECK(dens[i] == doctest::Approx(oracle[i]).epsilon(1e-8));
  }
}

TEST_CASE("box grids renormalize the truncated smearing kernel") {
  GridSpec g = make_grid(1, 64, 16.0, Boundary::box);
  WaveFunction psi = gaussian_packet(g, {6.0}, {0.8}, {0.0});
  GrwParams p;
  p.collapse_width = 1.5;

  std::vector<double> dens = collapse_center_density(psi, 0, p);
  double total = 0.0;
  for (double v : dens) total += v * g.spacing();
  CHECK(total == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("collapse labels are drawn proportionally to their rates") {
  GridSpec g = make_grid(2, 32, 16.0);
  WaveFunction psi = gaussian_packet(g, {0.0, 0.0}, {1.0, 1.0}, {0.0, 0.0});
  GrwParams p;
  p.collapse_rate = 1.0;
  p.lambda_mode = LambdaMode::mass_proportional;
  std::vector<double> masses = {1.0, 3.0};  // label 1 three times as often

  Rng rng(777, 1);
  int n = 4000, ones = 0;
  for (int i = 0; i < n; ++i)
    if (sample_collapse(psi, p, masses, rng).first == 1) ++ones;

  double expect = 0.75 * n;
  double sigma = std::sqrt(n * 0.75 * 0.25);
  CHECK(std::abs(ones - expect) < 4.0 * sigma);
}

TEST_CASE("collapse centers follow the smeared marginal") {
  GridSpec g = make_grid(1, 64, 16.0);
  WaveFunction psi = superpose(1.0, gaussian_packet(g, {-3.0}, {0.7}, {0.0}),
                               1.0, gaussian_packet(g, {3.0}, {0.7}, {0.0}));
  GrwParams p;
  p.collapse_width = 1.0;
  std::vector<double> masses = {1.0};

  std::vector<double> dens = collapse_center_density(psi, 0, p);
  std::vector<uint64_t> counts(dens.size(), 0);
  std::vector<double> probs(dens.size());
  for (std::size_t i = 0; i < dens.size(); ++i)
    probs[i] = dens[i] * g.spacing();

  Rng rng(888, 2);
  int n = 5000;
  for (int i = 0; i < n; ++i) {
    auto [label, center] = sample_collapse(psi, p, masses, rng);
    CHECK(label == 0);
    ++counts[static_cast<std::size_t>(g.axis_cell(center[0]))];
  }
  Chi2Result c2 = chi2_against(counts, probs, 0.001);
  CHECK(c2.pass);
}

TEST_CASE("applying a collapse multiplies in a square-root Gaussian") {
  GridSpec g = make_grid(1, 512, 40.0);
  double s = 1.3, mu = -1.0;
  WaveFunction psi = gaussian_packet(g, {mu}, {s}, {0.4});

  GrwParams p;
  p.collapse_width = 0.9;
  double c = -0.4;
  WaveFunction post = apply_collapse(psi, 0, {c}, p);

  CHECK(norm(post) == doctest::Approx(1.0).epsilon(1e-12));

  double var_expect = 1.0 / (1.0 / (s * s) + 1.0 / (p.collapse_width *
                                                    p.collapse_width));
  double mean_expect = var_expect * (mu / (s * s) +
                                     c / (p.collapse_width * p.collapse_width));
  auto [mean, var] = grid_mean_var(probability_density(post), g.min_coord(),
                                   g.spacing());
  CHECK(mean == doctest::Approx(mean_expect).epsilon(1e-8));
  CHECK(var == doctest::Approx(var_expect).epsilon(1e-6));
}

TEST_CASE("collapses act through the minimum image on periodic grids") {
  GridSpec g = make_grid(1, 256, 16.0);
  double s = 0.6;
  WaveFunction psi = gaussian_packet(g, {7.5}, {s}, {0.0});

  GrwParams p;
  p.collapse_width = 0.8;
  // Across the seam: min-image displacement is +0.6, not -15.4.
  WaveFunction post = apply_collapse(psi, 0, {-7.9}, p);

  double w2 = p.collapse_width * p.collapse_width;
  double shift = 0.6 * (s * s) / (s * s + w2);
  double var_expect = 1.0 / (1.0 / (s * s) + 1.0 / w2);

  // The posterior straddles the seam, so take moments of the min-image
  // displacement from the predicted center; a non-wrapped collapse would
  // land far away with a blown-up spread.
  std::vector<double> dens = probability_density(post);
  double m1 = 0.0, m2 = 0.0;
  for (int j = 0; j < g.points_per_axis; ++j) {
    double d = min_image(g.axis_coord(j) - (7.5 + shift), g.extent);
    m1 += dens[static_cast<std::size_t>(j)] * d * g.spacing();
    m2 += dens[static_cast<std::size_t>(j)] * d * d * g.spacing();
  }
  CHECK(std::abs(m1) < 1e-6);
  CHECK(m2 - m1 * m1 == doctest::Approx(var_expect).epsilon(1e-4));
}

TEST_CASE("matter density is the mass-weighted sum of marginals") {
  GridSpec g = make_grid(2, 32, 16.0);
  WaveFunction psi = gaussian_packet(g, {-2.0, 1.0}, {0.8, 1.2}, {0.0, 0.0});
  std::vector<double> masses = {1.0, 2.5};

  std::vector<double> m = matter_density(psi, masses);
  std::vector<double> m0 = marginal_density(psi, 0);
  std::vector<double> m1 = marginal_density(psi, 1);
  REQUIRE(m.size() == m0.size());

  double total = 0.0;
  for (std::size_t i = 0; i < m.size(); ++i) {
    CHECK(m[i] == doctest::Approx(1.0 * m0[i] + 2.5 * m1[i]).epsilon(1e-12));
    total += m[i] * g.spacing();
  }
  CHECK(total == doctest::Approx(3.5).epsilon(1e-9));
}

TEST_CASE("histories interleave unitary flow with sampled collapses") {
  GridSpec g = make_grid(1, 64, 16.0);
  WaveFunction psi = gaussian_packet(g, {0.0}, {1.0}, {0.0});
  HamiltonianSpec h;
  h.masses = {1.0};

  GrwParams p;
  p.collapse_rate = 0.8;
  p.collapse_width = 1.0;

  GrwRun run = run_grw(psi, h, p, 10.0, {2.5, 7.0}, 0.0, Rng(99, 3));

  for (std::size_t i = 0; i + 1 < run.flashes.size(); ++i)
    CHECK(run.flashes[i].time < run.flashes[i + 1].time);
  for (const CollapseEvent& f : run.flashes) {
    CHECK(f.time >= 0.0);
    CHECK(f.time <= 10.0);
    CHECK(f.label == 0);
    REQUIRE(f.center.size() == 1);
    CHECK(f.center[0] >= g.min_coord());
    CHECK(f.center[0] < g.min_coord() + g.extent);
  }

  REQUIRE(run.matter_snapshots.size() == 2);
  CHECK(run.matter_snapshots[0].first == doctest::Approx(2.5));
  CHECK(run.matter_snapshots[1].first == doctest::Approx(7.0));
  for (const auto& [t, dens] : run.matter_snapshots) {
    REQUIRE(dens.size() == static_cast<std::size_t>(g.points_per_axis));
    double total = 0.0;
    for (double v : dens) total += v * g.spacing();
    CHECK(total == doctest::Approx(1.0).epsilon(1e-9));
  }

  CHECK(run.psi_final.time == doctest::Approx(10.0).epsilon(1e-9));
  CHECK(norm(run.psi_final) == doctest::Approx(1.0).epsilon(1e-9));

  GrwRun again = run_grw(psi, h, p, 10.0, {2.5, 7.0}, 0.0, Rng(99, 3));
  REQUIRE(again.flashes.size() == run.flashes.size());
  for (std::size_t i = 0; i < run.flashes.size(); ++i) {
    CHECK(again.flashes[i].time == run.flashes[i].time);
    CHECK(again.flashes[i].center[0] == run.flashes[i].center[0]);
  }
}

TEST_CASE("flash counts average to rate times duration") {
  GridSpec g = make_grid(1, 32, 16.0);
  WaveFunction psi = gaussian_packet(g, {0.0}, {1.0}, {0.0});
  HamiltonianSpec h;
  h.masses = {1.0};

  GrwParams p;
  p.collapse_rate = 0.8;
  p.collapse_width = 1.0;

  Rng root(2024, 4);
  int runs = 200;
  double duration = 5.0;  // expect 4 flashes per run
  double sum = 0.0;
  for (int i = 0; i < runs; ++i) {
    Rng child = root.split(static_cast<uint64_t>(i));
    sum += static_cast<double>(
        run_grw(psi, h, p, duration, {}, 0.0, child).flashes.size());
  }
  double mean = sum / runs;
  double se = std::sqrt(4.0 / runs);  // Poisson variance == mean
  CHECK(std::abs(mean - 4.0) < 4.0 * se);
}

TEST_CASE("identical ensembles give matching flash and matter records") {
  GridSpec g = make_grid(1, 32, 16.0);
  WaveFunction a = gaussian_packet(g, {-1.0}, {1.0}, {0.2});
  WaveFunction b = gaussian_packet(g, {1.5}, {0.8}, {-0.1});
  std::vector<WeightedState> ensemble = {{a, 0.5}, {b, 0.5}};

  HamiltonianSpec h;
  h.masses = {1.0};
  GrwParams p;
  p.collapse_rate = 1.0;
  p.collapse_width = 1.0;

  FlashComparison cmp = flash_history_statistic(ensemble, ensemble, h, p, 4.0,
                                                150, Rng(31, 5), 0.01);
  CHECK(cmp.density_matrices_equal);
  CHECK(cmp.density_matrix_distance < 1e-12);
  CHECK(cmp.first_flash_time.pass);
  CHECK(cmp.first_flash_position.pass);
  CHECK(cmp.matter_centroid.pass);
}

TEST_CASE("different density matrices are reported as unequal") {
  GridSpec g = make_grid(1, 32, 16.0);
  std::vector<WeightedState> ea = {{gaussian_packet(g, {-2.0}, {1.0}, {0.0}),
                                    1.0}};
  std::vector<WeightedState> eb = {{gaussian_packet(g, {2.0}, {1.0}, {0.0}),
                                    1.0}};

  HamiltonianSpec h;
  h.masses = {1.0};
  GrwParams p;
  p.collapse_rate = 1.0;
  p.collapse_width = 1.0;

  FlashComparison cmp =
      flash_history_statistic(ea, eb, h, p, 3.0, 100, Rng(32, 6), 0.01);
  CHECK_FALSE(cmp.density_matrices_equal);
  CHECK(cmp.density_matrix_distance > 0.1);
  CHECK_FALSE(cmp.first_flash_position.pass);
}
