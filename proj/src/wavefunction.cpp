#include "ontosim/wavefunction.hpp"

#include <algorithm>
#include <cmath>

#include "ontosim/errors.hpp"

namespace ontosim {

namespace {

// Neumaier accumulation over a streamed sequence of doubles.
struct CompensatedSum {
  double sum = 0.0;
  double comp = 0.0;
  void add(double x) {
    double t = sum + x;
    if (std::abs(sum) >= std::abs(x))
      comp += (sum - t) + x;
    else
      comp += (x - t) + sum;
    sum = t;
  }
  double value() const { return sum + comp; }
};

double squared_norm_sum(const WaveFunction& psi) {
  CompensatedSum acc;
  for (const cx& a : psi.amplitudes) acc.add(std::norm(a));
  return acc.value();
}

}  // namespace

WaveFunction make_state(const GridSpec& grid, int spin_dims) {
  grid.validate();
  if (spin_dims != 1 && spin_dims != 2)
    throw WrongSpinDims("spin_dims must be 1 or 2, got " +
                        std::to_string(spin_dims));
  WaveFunction psi;
  psi.grid = grid;
  psi.spin_dims = spin_dims;
  psi.amplitudes.assign(
      static_cast<uint64_t>(psi.spin_states()) * grid.size(), cx(0.0, 0.0));
  return psi;
}

double norm(const WaveFunction& psi) {
  return std::sqrt(squared_norm_sum(psi) * psi.grid.cell_volume());
}

WaveFunction normalize(const WaveFunction& psi) {
  double n = norm(psi);
  if (n <= 1e-300)
    throw ZeroNorm("state norm " + std::to_string(n) +
                   " is below the representable floor");
  if (std::abs(n - 1.0) <= 1e-12) return psi;  // exact idempotence
  WaveFunction out = psi;
  const double inv = 1.0 / n;
  for (cx& a : out.amplitudes) a *= inv;
  return out;
}

std::vector<double> probability_density(const WaveFunction& psi) {
  const uint64_t cells = psi.grid_size();
  const int spins = psi.spin_states();
  std::vector<double> rho(cells, 0.0);
  for (int s = 0; s < spins; ++s) {
    const cx* block = psi.amplitudes.data() + static_cast<uint64_t>(s) * cells;
    for (uint64_t c = 0; c < cells; ++c) rho[c] += std::norm(block[c]);
  }
  return rho;
}

std::vector<double> marginal_density(const WaveFunction& psi, int particle) {
  if (particle < 0 || particle >= psi.grid.particles)
    throw SimError("marginal_density: particle index " +
                   std::to_string(particle) + " out of range");
  const GridSpec& g = psi.grid;
  const int d = g.dim_per_particle;
  const int P = g.points_per_axis;
  uint64_t own = 1;
  for (int k = 0; k < d; ++k) own *= static_cast<uint64_t>(P);

  // Axes are particle-major, so particle i owns axes [i*d, (i+1)*d).  In the
  // row-major flat index those axes form a contiguous digit group: cell =
  // (pre * own + mid) * post ... decompose accordingly.
  uint64_t post = 1;
  for (int a = (particle + 1) * d; a < g.axes(); ++a)
    post *= static_cast<uint64_t>(P);
  const uint64_t cells = g.size();
  const uint64_t pre = cells / (own * post);

  std::vector<double> rho = probability_density(psi);
  std::vector<double> out(own, 0.0);
  const double weight = std::pow(g.spacing(), g.axes() - d);
  for (uint64_t ip = 0; ip < pre; ++ip)
    for (uint64_t im = 0; im < own; ++im) {
      CompensatedSum acc;
      const uint64_t base = (ip * own + im) * post;
      for (uint64_t io = 0; io < post; ++io) acc.add(rho[base + io]);
      out[im] += acc.value() * weight;
    }
  return out;
}

namespace {

std::vector<double> cell_cdf(const WaveFunction& psi) {
  std::vector<double> rho = probability_density(psi);
  const double vol = psi.grid.cell_volume();
  std::vector<double> cdf(rho.size());
  CompensatedSum acc;
  for (std::size_t i = 0; i < rho.size(); ++i) {
    acc.add(rho[i] * vol);
    cdf[i] = acc.value();
  }
  double total = cdf.back();
  if (total <= 1e-300)
    throw ZeroNorm("sample_configuration: density integrates to zero");
  for (double& c : cdf) c /= total;
  cdf.back() = 1.0;
  return cdf;
}

Configuration draw_from_cdf(const WaveFunction& psi,
                            const std::vector<double>& cdf, Rng& rng) {
  const GridSpec& g = psi.grid;
  double u = rng.uniform();
  auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
  uint64_t cell = static_cast<uint64_t>(it - cdf.begin());
  if (cell >= cdf.size()) cell = cdf.size() - 1;
  std::vector<int> idx = g.unflatten(cell);
  Configuration out;
  out.q.resize(static_cast<std::size_t>(g.axes()));
  for (int a = 0; a < g.axes(); ++a)
    out.q[static_cast<std::size_t>(a)] =
        g.axis_coord(idx[static_cast<std::size_t>(a)]) +
        g.spacing() * rng.uniform();
  return out;
}

}  // namespace

Configuration sample_configuration(const WaveFunction& psi, Rng& rng) {
  return draw_from_cdf(psi, cell_cdf(psi), rng);
}

std::vector<Configuration> sample_configurations(const WaveFunction& psi,
                                                 int count, Rng& rng) {
  std::vector<double> cdf = cell_cdf(psi);
  std::vector<Configuration> out;
  out.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) out.push_back(draw_from_cdf(psi, cdf, rng));
  return out;
}

cx inner_product(const WaveFunction& phi, const WaveFunction& psi) {
  if (!phi.grid.same_geometry(psi.grid) || phi.spin_dims != psi.spin_dims)
    throw IncompatibleGrid("inner_product: states live on different grids");
  CompensatedSum re, im;
  for (std::size_t i = 0; i < psi.amplitudes.size(); ++i) {
    cx term = std::conj(phi.amplitudes[i]) * psi.amplitudes[i];
    re.add(term.real());
    im.add(term.imag());
  }
  return cx(re.value(), im.value()) * phi.grid.cell_volume();
}

WaveFunction gaussian_packet(const GridSpec& grid,
                             const std::vector<double>& centers,
                             const std::vector<double>& widths,
                             const std::vector<double>& momenta) {
  grid.validate();
  const std::size_t axes = static_cast<std::size_t>(grid.axes());
  if (centers.size() != axes || widths.size() != axes ||
      momenta.size() != axes)
    throw SimError("gaussian_packet: need one center/width/momentum per axis");
  for (double w : widths)
    if (!(w > 0.0)) throw SimError("gaussian_packet: widths must be > 0");

  WaveFunction psi = make_state(grid, 1);
  const int P = grid.points_per_axis;
  // Per-axis 1D factors; the full amplitude is their product.
  std::vector<std::vector<cx>> factors(axes, std::vector<cx>(P));
  for (std::size_t a = 0; a < axes; ++a)
    for (int j = 0; j < P; ++j) {
      double x = grid.axis_coord(j);
      double dx = x - centers[a];
      if (grid.boundary == Boundary::periodic) dx = min_image(dx, grid.extent);
      factors[a][j] = std::exp(cx(-dx * dx / (4.0 * widths[a] * widths[a]),
                                  momenta[a] * x));
    }
  const uint64_t cells = grid.size();
  for (uint64_t c = 0; c < cells; ++c) {
    std::vector<int> idx = grid.unflatten(c);
    cx amp(1.0, 0.0);
    for (std::size_t a = 0; a < axes; ++a)
      amp *= factors[a][static_cast<std::size_t>(idx[a])];
    psi.amplitudes[c] = amp;
  }
  return normalize(psi);
}

WaveFunction superpose(cx a, const WaveFunction& psi1, cx b,
                       const WaveFunction& psi2) {
  if (!psi1.grid.same_geometry(psi2.grid) || psi1.spin_dims != psi2.spin_dims)
    throw IncompatibleGrid("superpose: states live on different grids");
  WaveFunction out = psi1;
  for (std::size_t i = 0; i < out.amplitudes.size(); ++i)
    out.amplitudes[i] = a * psi1.amplitudes[i] + b * psi2.amplitudes[i];
  return normalize(out);
}

}  // namespace ontosim
