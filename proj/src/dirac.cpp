#include "ontosim/dirac.hpp"

#include <cmath>

#include "ontosim/errors.hpp"
#include "ontosim/fft.hpp"

namespace ontosim {

namespace {

void require_dirac_layout(const WaveFunction& psi) {
  if (psi.spin_dims != 2)
    throw WrongSpinDims("dirac_step_1d: need two spin components, got " +
                        std::to_string(psi.spin_dims));
  if (psi.grid.particles != 1 || psi.grid.dim_per_particle != 1)
    throw UnsupportedN("dirac_step_1d: single particle in one dimension only");
  if (psi.grid.boundary != Boundary::periodic)
    throw IncompatibleGrid("dirac_step_1d: periodic boundary required");
}

}  // namespace

WaveFunction dirac_step_1d(const WaveFunction& psi, double mass, double dt) {
  require_dirac_layout(psi);
  if (!(mass >= 0.0)) throw SimError("dirac_step_1d: mass must be >= 0");
  const int P = psi.grid.points_per_axis;
  const std::vector<int> dims = {P};
  WaveFunction out = psi;
  cx* up = out.amplitudes.data();
  cx* dn = out.amplitudes.data() + P;
  fft::forward(up, dims);
  fft::forward(dn, dims);
  for (int j = 0; j < P; ++j) {
    const double k = fft::wavenumber_deriv(j, P, psi.grid.extent);
    const double e = std::sqrt(k * k + mass * mass);
    cx a = up[j], b = dn[j];
    if (e < 1e-300) continue;  // zero mode of the massless case: identity
    const double cth = std::cos(e * dt);
    const cx mis = cx(0.0, -std::sin(e * dt) / e);
    up[j] = cth * a + mis * (mass * a + k * b);
    dn[j] = cth * b + mis * (k * a - mass * b);
  }
  fft::inverse(up, dims);
  fft::inverse(dn, dims);
  out.time += dt;
  return out;
}

void dirac_spinor_plus(double mass, double k, double out[2]) {
  const double e = std::sqrt(k * k + mass * mass);
  if (e < 1e-300) {
    out[0] = 1.0;
    out[1] = 0.0;
    return;
  }
  double a = e + mass;
  double b = k;
  double n = std::sqrt(a * a + b * b);
  if (n < 1e-300) {
    // massless left-mover: (E + m) == 0, eigenvector is (0, 1) direction
    out[0] = 0.0;
    out[1] = 1.0;
    return;
  }
  out[0] = a / n;
  out[1] = b / n;
}

WaveFunction dirac_packet_1d(const GridSpec& grid, double mass, double center,
                             double width, double momentum) {
  grid.validate();
  if (grid.particles != 1 || grid.dim_per_particle != 1)
    throw UnsupportedN("dirac_packet_1d: single particle in 1D only");
  if (!(width > 0.0)) throw SimError("dirac_packet_1d: width must be > 0");
  const int P = grid.points_per_axis;
  const std::vector<int> dims = {P};

  std::vector<cx> envelope(static_cast<std::size_t>(P));
  for (int j = 0; j < P; ++j) {
    double x = grid.axis_coord(j);
    double dx = min_image(x - center, grid.extent);
    envelope[static_cast<std::size_t>(j)] =
        std::exp(cx(-dx * dx / (4.0 * width * width), momentum * x));
  }
  fft::forward(envelope.data(), dims);

  WaveFunction psi = make_state(grid, 2);
  cx* up = psi.amplitudes.data();
  cx* dn = psi.amplitudes.data() + P;
  for (int j = 0; j < P; ++j) {
    const double k = fft::wavenumber_deriv(j, P, grid.extent);
    double u[2];
    dirac_spinor_plus(mass, k, u);
    up[j] = envelope[static_cast<std::size_t>(j)] * u[0];
    dn[j] = envelope[static_cast<std::size_t>(j)] * u[1];
  }
  fft::inverse(up, dims);
  fft::inverse(dn, dims);
  return normalize(psi);
}

}  // namespace ontosim
