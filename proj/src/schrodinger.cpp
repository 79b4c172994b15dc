#include "ontosim/schrodinger.hpp"

#include <cmath>

#include "detail.hpp"
#include "ontosim/errors.hpp"
#include "ontosim/fft.hpp"

namespace ontosim {

namespace {

void apply_phase(std::vector<cx>& amp, const std::vector<double>& table,
                 double factor) {
  for (std::size_t i = 0; i < amp.size(); ++i) {
    double theta = -factor * table[i];
    amp[i] *= cx(std::cos(theta), std::sin(theta));
  }
}

// Thomas solve of the tridiagonal system with constant diagonal `diag`,
// constant off-diagonals `off`, Dirichlet ends.  `rhs` is overwritten with
// the solution.
void solve_tridiag(std::vector<cx>& rhs, std::vector<cx>& scratch, cx diag,
                   cx off) {
  const std::size_t n = rhs.size();
  scratch.resize(n);
  cx beta = diag;
  rhs[0] /= beta;
  for (std::size_t j = 1; j < n; ++j) {
    scratch[j] = off / beta;
    beta = diag - off * scratch[j];
    rhs[j] = (rhs[j] - off * rhs[j - 1]) / beta;
  }
  for (std::size_t j = n - 1; j-- > 0;) rhs[j] -= scratch[j + 1] * rhs[j + 1];
}

// Cyclic variant via the Sherman-Morrison rank-one update.
void solve_cyclic_tridiag(std::vector<cx>& rhs, std::vector<cx>& z,
                          std::vector<cx>& scratch, cx diag, cx off) {
  const std::size_t n = rhs.size();
  const cx gamma = -diag;
  const cx d0 = diag - gamma;
  const cx dn = diag - off * off / gamma;
  // Solve the modified (plain tridiagonal) system for rhs and for the
  // correction column w = (gamma, 0, ..., off).
  z.assign(n, cx(0.0, 0.0));
  z[0] = gamma;
  z[n - 1] = off;

  auto solve_modified = [&](std::vector<cx>& r) {
    scratch.resize(n);
    cx beta = d0;
    r[0] /= beta;
    for (std::size_t j = 1; j < n; ++j) {
      scratch[j] = off / beta;
      cx dj = (j == n - 1) ? dn : diag;
      beta = dj - off * scratch[j];
      r[j] = (r[j] - off * r[j - 1]) / beta;
    }
    for (std::size_t j = n - 1; j-- > 0;) r[j] -= scratch[j + 1] * r[j + 1];
  };
  solve_modified(rhs);
  solve_modified(z);

  cx numer = rhs[0] + (off / gamma) * rhs[n - 1];
  cx denom = 1.0 + z[0] + (off / gamma) * z[n - 1];
  cx factor = numer / denom;
  for (std::size_t j = 0; j < n; ++j) rhs[j] -= factor * z[j];
}

}  // namespace

SchrodingerStepper::SchrodingerStepper(const GridSpec& grid,
                                       const HamiltonianSpec& h,
                                       StepScheme scheme)
    : grid_(grid), h_(h), scheme_(scheme) {
  grid_.validate();
  h_.validate(grid_);
  if (h_.kind != HamiltonianKind::schrodinger)
    throw SimError("SchrodingerStepper: hamiltonian kind must be schrodinger");
  if (scheme_ == StepScheme::auto_select)
    scheme_ = (grid_.boundary == Boundary::periodic)
                  ? StepScheme::spectral
                  : StepScheme::crank_nicolson;
  if (scheme_ == StepScheme::spectral &&
      grid_.boundary != Boundary::periodic)
    throw IncompatibleGrid(
        "spectral stepping assumes periodic boundary; use crank_nicolson");
  if (scheme_ == StepScheme::spectral)
    kinetic_ = detail::kinetic_table(grid_, h_.masses);
}

void SchrodingerStepper::step(WaveFunction& psi, double dt) const {
  if (!psi.grid.same_geometry(grid_))
    throw IncompatibleGrid("SchrodingerStepper: state grid differs");
  if (psi.spin_dims != 1)
    throw WrongSpinDims("SchrodingerStepper: spinless states only");
  if (scheme_ == StepScheme::spectral)
    step_spectral(psi, dt);
  else
    step_crank_nicolson(psi, dt);
  psi.time += dt;
}

void SchrodingerStepper::step_spectral(WaveFunction& psi, double dt) const {
  std::vector<int> dims = detail::grid_dims(grid_);
  const bool has_v = !h_.potential.empty();
  if (has_v) apply_phase(psi.amplitudes, h_.potential, 0.5 * dt);
  fft::forward(psi.amplitudes.data(), dims);
  apply_phase(psi.amplitudes, kinetic_, dt);
  fft::inverse(psi.amplitudes.data(), dims);
  if (has_v) apply_phase(psi.amplitudes, h_.potential, 0.5 * dt);
}

void SchrodingerStepper::step_crank_nicolson(WaveFunction& psi,
                                             double dt) const {
  const bool has_v = !h_.potential.empty();
  if (has_v) apply_phase(psi.amplitudes, h_.potential, 0.5 * dt);

  // Kinetic terms of distinct axes commute, so per-axis Cayley sweeps incur
  // no extra splitting error beyond each sweep's own O(dt^2).
  const int P = grid_.points_per_axis;
  const double h = grid_.spacing();
  std::vector<cx> line(static_cast<std::size_t>(P));
  std::vector<cx> z, scratch;
  for (int a = 0; a < grid_.axes(); ++a) {
    const double m =
        h_.masses[static_cast<std::size_t>(a / grid_.dim_per_particle)];
    const cx c = cx(0.0, dt / (4.0 * m * h * h));
    const cx diag = 1.0 + 2.0 * c;
    const cx off = -c;
    uint64_t post = 1;
    for (int b = a + 1; b < grid_.axes(); ++b)
      post *= static_cast<uint64_t>(P);
    const uint64_t cells = grid_.size();
    const uint64_t pre = cells / (static_cast<uint64_t>(P) * post);
    for (uint64_t ip = 0; ip < pre; ++ip)
      for (uint64_t io = 0; io < post; ++io) {
        const uint64_t base = ip * static_cast<uint64_t>(P) * post + io;
        for (int j = 0; j < P; ++j)
          line[static_cast<std::size_t>(j)] =
              psi.amplitudes[base + static_cast<uint64_t>(j) * post];
        // rhs = (1 - i dt T/2) line
        std::vector<cx> rhs(static_cast<std::size_t>(P));
        for (int j = 0; j < P; ++j) {
          cx left, right;
          if (grid_.boundary == Boundary::periodic) {
            left = line[static_cast<std::size_t>((j + P - 1) % P)];
            right = line[static_cast<std::size_t>((j + 1) % P)];
          } else {
            left = (j > 0) ? line[static_cast<std::size_t>(j - 1)] : cx(0.0);
            right =
                (j < P - 1) ? line[static_cast<std::size_t>(j + 1)] : cx(0.0);
          }
          rhs[static_cast<std::size_t>(j)] =
              (1.0 - 2.0 * c) * line[static_cast<std::size_t>(j)] +
              c * (left + right);
        }
        if (grid_.boundary == Boundary::periodic)
          solve_cyclic_tridiag(rhs, z, scratch, diag, off);
        else
          solve_tridiag(rhs, scratch, diag, off);
        for (int j = 0; j < P; ++j)
          psi.amplitudes[base + static_cast<uint64_t>(j) * post] =
              rhs[static_cast<std::size_t>(j)];
      }
  }

  if (has_v) apply_phase(psi.amplitudes, h_.potential, 0.5 * dt);
}

void SchrodingerStepper::advance(WaveFunction& psi, double duration,
                                 double dt_max) const {
  if (duration < 0.0) throw SimError("advance: negative duration");
  if (duration == 0.0) return;
  const double target = psi.time + duration;
  if (dt_max <= 0.0) {
    if (scheme_ != StepScheme::spectral || !h_.potential.empty())
      throw SimError(
          "advance: unbounded step is exact only for spectral V == 0");
    step(psi, duration);
  } else {
    double remaining = duration;
    while (remaining > 1e-15 * duration) {
      double dt = std::min(dt_max, remaining);
      step(psi, dt);
      remaining -= dt;
    }
  }
  psi.time = target;
}

WaveFunction schrodinger_step(const WaveFunction& psi,
                              const HamiltonianSpec& h, double dt,
                              StepScheme scheme) {
  SchrodingerStepper stepper(psi.grid, h, scheme);
  WaveFunction out = psi;
  stepper.step(out, dt);
  return out;
}

}  // namespace ontosim
