#include "ontosim/grw.hpp"

#include <algorithm>
#include <cmath>

#include "detail.hpp"
#include "ontosim/errors.hpp"
#include "ontosim/fft.hpp"
#include "ontosim/schrodinger.hpp"

namespace ontosim {

void GrwParams::validate(const GridSpec& grid) const {
  std::vector<std::string> bad;
  if (!(collapse_rate > 0.0)) bad.push_back("collapse_rate must be > 0");
  if (!(collapse_width > 0.0)) bad.push_back("collapse_width must be > 0");
  if (collapse_width < 2.0 * grid.spacing())
    bad.push_back("collapse_width must be at least two grid spacings (" +
                  std::to_string(2.0 * grid.spacing()) + "), got " +
                  std::to_string(collapse_width));
  if (reference_mass < 0.0) bad.push_back("reference_mass must be >= 0");
  if (!bad.empty()) throw ValidationError(std::move(bad));
}

double GrwParams::rate_for(int particle,
                           const std::vector<double>& masses) const {
  if (lambda_mode == LambdaMode::uniform) return collapse_rate;
  double mref = reference_mass;
  if (mref == 0.0) mref = *std::min_element(masses.begin(), masses.end());
  return collapse_rate * masses[static_cast<std::size_t>(particle)] / mref;
}

double GrwParams::total_rate(const std::vector<double>& masses) const {
  double total = 0.0;
  for (std::size_t i = 0; i < masses.size(); ++i)
    total += rate_for(static_cast<int>(i), masses);
  return total;
}

namespace {

// 1D localization kernel on the axis grid: wrapped images (periodic) or the
// plain truncated Gaussian (box).
std::vector<double> kernel_1d(const GridSpec& g, double width) {
  const int P = g.points_per_axis;
  std::vector<double> ker(static_cast<std::size_t>(P), 0.0);
  const double norm_1d = 1.0 / (std::sqrt(2.0 * kPi) * width);
  for (int j = 0; j < P; ++j) {
    // Kernel argument is the displacement from the origin node.
    double base = static_cast<double>(j) * g.spacing();
    if (g.boundary == Boundary::periodic) {
      // Sum enough images that the remainder is < 1e-18 of the peak.
      int images = static_cast<int>(std::ceil(10.0 * width / g.extent)) + 1;
      double acc = 0.0;
      for (int n = -images; n <= images; ++n) {
        double dx = base + static_cast<double>(n) * g.extent;
        acc += std::exp(-dx * dx / (2.0 * width * width));
      }
      ker[static_cast<std::size_t>(j)] = acc * norm_1d;
    } else {
      double dx = base <= g.extent / 2.0 ? base : base - g.extent;
      ker[static_cast<std::size_t>(j)] =
          std::exp(-dx * dx / (2.0 * width * width)) * norm_1d;
    }
  }
  return ker;
}

// Circular convolution of a d-dimensional field with the separable kernel,
// via per-axis FFT products (periodic) or direct per-axis sums (box).
std::vector<double> convolve_with_kernel(std::vector<double> field,
                                         const GridSpec& g, int d,
                                         double width) {
  const int P = g.points_per_axis;
  const double h = g.spacing();
  std::vector<double> ker = kernel_1d(g, width);

  if (g.boundary == Boundary::periodic) {
    std::vector<int> dims(static_cast<std::size_t>(d), P);
    uint64_t cells = 1;
    for (int a = 0; a < d; ++a) cells *= static_cast<uint64_t>(P);
    std::vector<cx> work(cells);
    for (uint64_t c = 0; c < cells; ++c) work[c] = field[c];
    std::vector<cx> khat(static_cast<std::size_t>(P));
    for (int j = 0; j < P; ++j) khat[static_cast<std::size_t>(j)] =
        ker[static_cast<std::size_t>(j)];
    fft::forward(khat.data(), {P});
    fft::forward(work.data(), dims);
    for (uint64_t c = 0; c < cells; ++c) {
      uint64_t rest = c;
      cx factor(1.0, 0.0);
      for (int a = d - 1; a >= 0; --a) {
        factor *= khat[static_cast<std::size_t>(rest % static_cast<uint64_t>(P))];
        rest /= static_cast<uint64_t>(P);
      }
      work[c] *= factor * std::pow(h, d);
    }
    fft::inverse(work.data(), dims);
    for (uint64_t c = 0; c < cells; ++c)
      field[c] = std::max(0.0, work[c].real());
    return field;
  }

  // Box: direct truncated convolution axis by axis, then renormalize.
  uint64_t cells = 1;
  for (int a = 0; a < d; ++a) cells *= static_cast<uint64_t>(P);
  for (int a = 0; a < d; ++a) {
    uint64_t post = 1;
    for (int b = a + 1; b < d; ++b) post *= static_cast<uint64_t>(P);
    const uint64_t pre = cells / (static_cast<uint64_t>(P) * post);
    std::vector<double> line(static_cast<std::size_t>(P));
    for (uint64_t ip = 0; ip < pre; ++ip)
      for (uint64_t io = 0; io < post; ++io) {
        const uint64_t base = ip * static_cast<uint64_t>(P) * post + io;
        for (int j = 0; j < P; ++j)
          line[static_cast<std::size_t>(j)] =
              field[base + static_cast<uint64_t>(j) * post];
        for (int j = 0; j < P; ++j) {
          double acc = 0.0;
          for (int l = 0; l < P; ++l) {
            int diff = j - l;
            if (diff < 0) diff += P;  // kernel_1d box entry handles the sign
            acc += line[static_cast<std::size_t>(l)] *
                   ker[static_cast<std::size_t>(diff)];
          }
          field[base + static_cast<uint64_t>(j) * post] = acc * h;
        }
      }
  }
  double total = neumaier_sum(field) * std::pow(h, d);
  if (total <= 1e-300)
    throw DegenerateDensity("collapse_center_density: zero mass after blur");
  for (double& f : field) f /= total;
  return field;
}

}  // namespace

std::vector<double> collapse_center_density(const WaveFunction& psi, int label,
                                            const GrwParams& params) {
  params.validate(psi.grid);
  if (label < 0 || label >= psi.grid.particles)
    throw SimError("collapse_center_density: label out of range");
  std::vector<double> marg = marginal_density(psi, label);
  return convolve_with_kernel(std::move(marg), psi.grid,
                              psi.grid.dim_per_particle,
                              params.collapse_width);
}

double sample_waiting_time(const GrwParams& params,
                           const std::vector<double>& masses, Rng& rng) {
  if (masses.empty()) throw SimError("sample_waiting_time: no particles");
  return rng.exponential(params.total_rate(masses));
}

std::pair<int, std::vector<double>> sample_collapse(
    const WaveFunction& psi, const GrwParams& params,
    const std::vector<double>& masses, Rng& rng) {
  if (masses.size() != static_cast<std::size_t>(psi.grid.particles))
    throw SimError("sample_collapse: one mass per particle required");
  // Label proportional to its share of the total rate.
  const double total = params.total_rate(masses);
  double u = rng.uniform() * total;
  int label = 0;
  double acc = 0.0;
  for (std::size_t i = 0; i < masses.size(); ++i) {
    acc += params.rate_for(static_cast<int>(i), masses);
    label = static_cast<int>(i);
    if (u < acc) break;
  }

  std::vector<double> density = collapse_center_density(psi, label, params);
  const GridSpec& g = psi.grid;
  const int d = g.dim_per_particle;
  const int P = g.points_per_axis;
  const double vol = std::pow(g.spacing(), d);
  std::vector<double> cdf(density.size());
  double run = 0.0;
  for (std::size_t i = 0; i < density.size(); ++i) {
    run += density[i] * vol;
    cdf[i] = run;
  }
  if (run <= 1e-300)
    throw DegenerateDensity("sample_collapse: center density integrates to 0");
  for (double& c : cdf) c /= run;
  cdf.back() = 1.0;
  double v = rng.uniform();
  std::size_t cell =
      static_cast<std::size_t>(std::upper_bound(cdf.begin(), cdf.end(), v) -
                               cdf.begin());
  if (cell >= cdf.size()) cell = cdf.size() - 1;

  std::vector<double> center(static_cast<std::size_t>(d));
  uint64_t rest = cell;
  for (int a = d - 1; a >= 0; --a) {
    int idx = static_cast<int>(rest % static_cast<uint64_t>(P));
    rest /= static_cast<uint64_t>(P);
    center[static_cast<std::size_t>(a)] = g.axis_coord(idx);
  }
  for (int a = 0; a < d; ++a)
    center[static_cast<std::size_t>(a)] += g.spacing() * rng.uniform();
  return {label, center};
}

WaveFunction apply_collapse(const WaveFunction& psi, int label,
                            const std::vector<double>& center,
                            const GrwParams& params) {
  params.validate(psi.grid);
  const GridSpec& g = psi.grid;
  const int d = g.dim_per_particle;
  if (label < 0 || label >= g.particles)
    throw SimError("apply_collapse: label out of range");
  if (center.size() != static_cast<std::size_t>(d))
    throw SimError("apply_collapse: center has wrong dimension");

  // Per-axis multiplication tables exp(-(x - c)^2 / (4 w^2)).
  const int P = g.points_per_axis;
  const double w2 = params.collapse_width * params.collapse_width;
  std::vector<std::vector<double>> tables(static_cast<std::size_t>(d));
  for (int a = 0; a < d; ++a) {
    tables[static_cast<std::size_t>(a)].resize(static_cast<std::size_t>(P));
    for (int j = 0; j < P; ++j) {
      double dx = g.axis_coord(j) - center[static_cast<std::size_t>(a)];
      if (g.boundary == Boundary::periodic) dx = min_image(dx, g.extent);
      tables[static_cast<std::size_t>(a)][static_cast<std::size_t>(j)] =
          std::exp(-dx * dx / (4.0 * w2));
    }
  }

  WaveFunction out = psi;
  const int axes = g.axes();
  const int first_axis = label * d;
  // Factorized multiply: walk the grid once, reading the label's axis
  // indices out of the flat index.
  std::vector<uint64_t> post(static_cast<std::size_t>(d));
  for (int a = 0; a < d; ++a) {
    uint64_t p = 1;
    for (int b = first_axis + a + 1; b < axes; ++b)
      p *= static_cast<uint64_t>(P);
    post[static_cast<std::size_t>(a)] = p;
  }
  const uint64_t cells = g.size();
  for (int s = 0; s < psi.spin_states(); ++s)
    for (uint64_t c = 0; c < cells; ++c) {
      double factor = 1.0;
      for (int a = 0; a < d; ++a) {
        int idx = static_cast<int>(
            (c / post[static_cast<std::size_t>(a)]) %
            static_cast<uint64_t>(P));
        factor *= tables[static_cast<std::size_t>(a)][
            static_cast<std::size_t>(idx)];
      }
      out.at(s, c) *= factor;
    }
  return normalize(out);
}

std::vector<double> matter_density(const WaveFunction& psi,
                                   const std::vector<double>& masses) {
  if (masses.size() != static_cast<std::size_t>(psi.grid.particles))
    throw SimError("matter_density: one mass per particle required");
  std::vector<double> total;
  for (int i = 0; i < psi.grid.particles; ++i) {
    std::vector<double> m = marginal_density(psi, i);
    if (total.empty()) total.assign(m.size(), 0.0);
    for (std::size_t j = 0; j < m.size(); ++j)
      total[j] += masses[static_cast<std::size_t>(i)] * m[j];
  }
  return total;
}

GrwRun run_grw(const WaveFunction& psi0, const HamiltonianSpec& h,
               const GrwParams& params, double duration,
               const std::vector<double>& snapshot_times, double dt_max,
               Rng rng) {
  h.validate(psi0.grid);
  params.validate(psi0.grid);
  if (duration < 0.0) throw SimError("run_grw: negative duration");

  GrwRun run;
  run.psi_final = normalize(psi0);
  WaveFunction& psi = run.psi_final;
  SchrodingerStepper stepper(psi.grid, h);

  const double t_end = psi.time + duration;
  std::vector<double> snaps;
  for (double t : snapshot_times)
    if (t >= psi.time - 1e-12 && t <= t_end + 1e-12) snaps.push_back(t);
  std::sort(snaps.begin(), snaps.end());
  std::size_t snap_idx = 0;

  // Jump times are pre-sampled: the total rate does not depend on psi, so
  // the exponential clock can run ahead of the evolution.
  double next_jump = psi.time + sample_waiting_time(params, h.masses, rng);

  while (true) {
    const double t_event = std::min(next_jump, t_end);
    while (snap_idx < snaps.size() && snaps[snap_idx] <= t_event + 1e-15) {
      stepper.advance(psi, std::max(0.0, snaps[snap_idx] - psi.time), dt_max);
      run.matter_snapshots.emplace_back(psi.time,
                                        matter_density(psi, h.masses));
      ++snap_idx;
    }
    stepper.advance(psi, std::max(0.0, t_event - psi.time), dt_max);
    if (next_jump >= t_end) break;
    auto [label, center] = sample_collapse(psi, params, h.masses, rng);
    psi = apply_collapse(psi, label, center, params);
    psi.time = t_event;
    run.flashes.push_back({t_event, center, label});
    next_jump = t_event + sample_waiting_time(params, h.masses, rng);
  }
  return run;
}

namespace {

void check_ensemble(const std::vector<WeightedState>& ens, const char* name) {
  if (ens.empty())
    throw EnsembleMismatch(std::string(name) + " is empty");
  double wsum = 0.0;
  for (const auto& ws : ens) {
    if (!(ws.weight > 0.0))
      throw EnsembleMismatch(std::string(name) + ": weights must be > 0");
    wsum += ws.weight;
    if (!ws.psi.grid.same_geometry(ens.front().psi.grid) ||
        ws.psi.spin_dims != ens.front().psi.spin_dims)
      throw EnsembleMismatch(std::string(name) +
                             ": members live on different grids");
    if (std::abs(norm(ws.psi) - 1.0) > 1e-9)
      throw EnsembleMismatch(std::string(name) +
                             ": members must be normalized");
  }
  if (std::abs(wsum - 1.0) > 1e-9)
    throw EnsembleMismatch(std::string(name) + ": weights must sum to 1");
}

double gram_overlap(const std::vector<WeightedState>& x,
                    const std::vector<WeightedState>& y) {
  // tr(rho_x rho_y) = sum_ij w_i u_j |<psi_i|phi_j>|^2
  double acc = 0.0;
  for (const auto& a : x)
    for (const auto& b : y)
      acc += a.weight * b.weight * std::norm(inner_product(a.psi, b.psi));
  return acc;
}

int draw_member(const std::vector<WeightedState>& ens, Rng& rng) {
  double u = rng.uniform();
  double acc = 0.0;
  for (std::size_t i = 0; i < ens.size(); ++i) {
    acc += ens[i].weight;
    if (u < acc) return static_cast<int>(i);
  }
  return static_cast<int>(ens.size()) - 1;
}

}  // namespace

FlashComparison flash_history_statistic(
    const std::vector<WeightedState>& ensemble_a,
    const std::vector<WeightedState>& ensemble_b, const HamiltonianSpec& h,
    const GrwParams& params, double duration, int n_runs, Rng rng,
    double level) {
  check_ensemble(ensemble_a, "ensemble A");
  check_ensemble(ensemble_b, "ensemble B");
  if (!ensemble_a.front().psi.grid.same_geometry(
          ensemble_b.front().psi.grid) ||
      ensemble_a.front().psi.spin_dims != ensemble_b.front().psi.spin_dims)
    throw EnsembleMismatch("ensembles live on different grids");
  if (n_runs < 2) throw EmptySample("flash_history_statistic: n_runs < 2");

  FlashComparison cmp;
  double d2 = gram_overlap(ensemble_a, ensemble_a) +
              gram_overlap(ensemble_b, ensemble_b) -
              2.0 * gram_overlap(ensemble_a, ensemble_b);
  cmp.density_matrix_distance = std::sqrt(std::max(0.0, d2));
  cmp.density_matrices_equal = cmp.density_matrix_distance <= 1e-9;

  std::vector<double> t_a, t_b, x_a, x_b, c_a, c_b;
  for (int side = 0; side < 2; ++side) {
    const auto& ens = (side == 0) ? ensemble_a : ensemble_b;
    for (int i = 0; i < n_runs; ++i) {
      Rng run_rng = rng.split(static_cast<uint64_t>(side) *
                                  static_cast<uint64_t>(n_runs) +
                              static_cast<uint64_t>(i));
      int member = draw_member(ens, run_rng);
      GrwRun run = run_grw(ens[static_cast<std::size_t>(member)].psi, h,
                           params, duration, {duration}, 0.0, run_rng);
      double centroid =
          grid_mean_var(run.matter_snapshots.back().second,
                        run.psi_final.grid.min_coord(),
                        run.psi_final.grid.spacing())
              .first;
      if (run.flashes.empty()) {
        if (side == 0)
          ++cmp.flashless_runs_a;
        else
          ++cmp.flashless_runs_b;
      } else {
        (side == 0 ? t_a : t_b).push_back(run.flashes.front().time);
        (side == 0 ? x_a : x_b).push_back(run.flashes.front().center[0]);
      }
      (side == 0 ? c_a : c_b).push_back(centroid);
    }
  }
  cmp.first_flash_time = ks_two_sample(t_a, t_b, level);
  cmp.first_flash_position = ks_two_sample(x_a, x_b, level);
  cmp.matter_centroid = ks_two_sample(c_a, c_b, level);
  return cmp;
}

}  // namespace ontosim
