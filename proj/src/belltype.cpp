#include "ontosim/belltype.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "detail.hpp"
#include "ontosim/errors.hpp"
#include "ontosim/fft.hpp"
#include "ontosim/numeric.hpp"
#include "ontosim/wavefunction.hpp"

namespace ontosim::bell {

void LatticeSpec::validate() const {
  std::vector<std::string> bad;
  if (sites < 2) bad.push_back("sites must be >= 2");
  if (max_particles < 1) bad.push_back("max_particles must be >= 1");
  if (max_particles > sites)
    bad.push_back("max_particles cannot exceed sites (hard-core)");
  if (!bad.empty()) throw ValidationError(std::move(bad));
}

SectorBasis::SectorBasis(const LatticeSpec& lattice) : lattice_(lattice) {
  lattice_.validate();
  const int L = lattice_.sites;
  sector_begin_.assign(static_cast<std::size_t>(lattice_.max_particles) + 2,
                       0);
  for (int n = 0; n <= lattice_.max_particles; ++n) {
    sector_begin_[static_cast<std::size_t>(n)] = configs_.size();
    // Lexicographic n-subsets of {0..L-1}.
    SiteSet current(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) current[static_cast<std::size_t>(i)] = i;
    while (true) {
      if (n == 0) {
        configs_.push_back({});
        break;
      }
      configs_.push_back(current);
      int i = n - 1;
      while (i >= 0 &&
             current[static_cast<std::size_t>(i)] == L - n + i)
        --i;
      if (i < 0) break;
      ++current[static_cast<std::size_t>(i)];
      for (int k = i + 1; k < n; ++k)
        current[static_cast<std::size_t>(k)] =
            current[static_cast<std::size_t>(k - 1)] + 1;
    }
  }
  sector_begin_[static_cast<std::size_t>(lattice_.max_particles) + 1] =
      configs_.size();
  for (std::size_t i = 0; i < configs_.size(); ++i) index_[configs_[i]] = i;
}

std::size_t SectorBasis::index_of(const SiteSet& config) const {
  auto it = index_.find(config);
  if (it == index_.end()) {
    std::string sites = "{";
    for (std::size_t i = 0; i < config.size(); ++i)
      sites += (i ? "," : "") + std::to_string(config[i]);
    sites += "}";
    throw UnknownConfiguration("configuration " + sites +
                               " is not in the enumerated basis");
  }
  return it->second;
}

SectoredState make_sectored_state(const SectorBasis& basis) {
  SectoredState psi;
  psi.basis = &basis;
  psi.amp = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(basis.size()));
  return psi;
}

double state_norm(const SectoredState& psi) { return psi.amp.norm(); }

SectoredState normalize(const SectoredState& psi) {
  double n = state_norm(psi);
  if (n <= 1e-300) throw ZeroNorm("sectored state norm is zero");
  if (std::abs(n - 1.0) <= 1e-12) return psi;
  SectoredState out = psi;
  out.amp /= n;
  return out;
}

InteractionSpec::InteractionSpec(std::size_t dimension) : cols_(dimension) {}

void InteractionSpec::add(std::size_t i, std::size_t j,
                          std::complex<double> value) {
  if (i >= cols_.size() || j >= cols_.size())
    throw SimError("InteractionSpec::add: index out of range");
  if (i == j)
    throw SimError(
        "InteractionSpec::add: diagonal entries belong to the diagonal part");
  auto insert = [this](std::size_t row, std::size_t col,
                       std::complex<double> v) {
    auto& column = cols_[col];
    auto it = std::lower_bound(
        column.begin(), column.end(), row,
        [](const auto& entry, std::size_t r) { return entry.first < r; });
    if (it != column.end() && it->first == row)
      it->second += v;
    else
      column.insert(it, {row, v});
  };
  insert(i, j, value);
  insert(j, i, std::conj(value));
}

std::complex<double> InteractionSpec::element(std::size_t i,
                                              std::size_t j) const {
  const auto& column = cols_[j];
  auto it = std::lower_bound(
      column.begin(), column.end(), i,
      [](const auto& entry, std::size_t r) { return entry.first < r; });
  if (it != column.end() && it->first == i) return it->second;
  return {0.0, 0.0};
}

double InteractionSpec::hermiticity_violation() const {
  double worst = 0.0;
  for (std::size_t j = 0; j < cols_.size(); ++j)
    for (const auto& [i, v] : cols_[j])
      worst = std::max(worst, std::abs(v - std::conj(element(j, i))));
  return worst;
}

void add_uniform_creation(InteractionSpec& h, const SectorBasis& basis,
                          std::complex<double> amplitude) {
  const int L = basis.lattice().sites;
  const int cap = basis.lattice().max_particles;
  for (std::size_t q = 0; q < basis.size(); ++q) {
    const SiteSet& cfg = basis.config(q);
    if (static_cast<int>(cfg.size()) >= cap) continue;
    for (int s = 0; s < L; ++s) {
      if (std::binary_search(cfg.begin(), cfg.end(), s)) continue;
      SiteSet grown = cfg;
      grown.insert(std::upper_bound(grown.begin(), grown.end(), s), s);
      h.add(basis.index_of(grown), q, amplitude);
    }
  }
}

void add_ring_hopping(InteractionSpec& h, const SectorBasis& basis,
                      std::complex<double> amplitude) {
  const int L = basis.lattice().sites;
  if (L < 3)
    throw SimError("add_ring_hopping: ring hopping needs at least 3 sites");
  for (std::size_t q = 0; q < basis.size(); ++q) {
    const SiteSet& cfg = basis.config(q);
    for (int s : cfg) {
      int r = (s + 1) % L;  // rightward moves only: each edge enters once,
                            // the reverse direction comes from hermiticity
      if (std::binary_search(cfg.begin(), cfg.end(), r)) continue;
      SiteSet moved;
      moved.reserve(cfg.size());
      for (int x : cfg)
        if (x != s) moved.push_back(x);
      moved.insert(std::upper_bound(moved.begin(), moved.end(), r), r);
      h.add(basis.index_of(moved), q, amplitude);
    }
  }
}

BellHamiltonian make_bell_hamiltonian(const SectorBasis& basis,
                                      double energy_per_particle) {
  BellHamiltonian h{std::vector<double>(basis.size(), 0.0),
                    InteractionSpec(basis.size())};
  for (std::size_t q = 0; q < basis.size(); ++q)
    h.diagonal[q] = energy_per_particle *
                    static_cast<double>(basis.particle_count(q));
  return h;
}

namespace {

double current_from_amp(const Eigen::VectorXcd& amp, std::size_t to,
                        std::size_t from, std::complex<double> element) {
  return 2.0 * std::imag(std::conj(amp[static_cast<Eigen::Index>(to)]) *
                         element * amp[static_cast<Eigen::Index>(from)]);
}

std::vector<std::pair<std::size_t, double>> rates_from_amp(
    const Eigen::VectorXcd& amp, std::size_t from, const InteractionSpec& h) {
  double rho = std::norm(amp[static_cast<Eigen::Index>(from)]);
  if (rho <= 1e-300)
    throw ZeroOccupancy("jump_rates: |psi|^2 vanished at the occupied "
                        "configuration " +
                        std::to_string(from));
  std::vector<std::pair<std::size_t, double>> rates;
  for (const auto& [to, v] : h.column(from)) {
    double j = current_from_amp(amp, to, from, v);
    if (j > 0.0) rates.emplace_back(to, j / rho);
  }
  return rates;
}

}  // namespace

double probability_current(const SectoredState& psi, std::size_t to,
                           std::size_t from, const InteractionSpec& h) {
  if (to >= psi.basis->size() || from >= psi.basis->size())
    throw SimError("probability_current: configuration index out of range");
  return current_from_amp(psi.amp, to, from, h.element(to, from));
}

std::vector<std::pair<std::size_t, double>> jump_rates(
    const SectoredState& psi, std::size_t from, const InteractionSpec& h) {
  if (from >= psi.basis->size())
    throw SimError("jump_rates: configuration index out of range");
  return rates_from_amp(psi.amp, from, h);
}

ExactPropagator::ExactPropagator(const SectorBasis& basis,
                                 const BellHamiltonian& h) {
  const Eigen::Index n = static_cast<Eigen::Index>(basis.size());
  if (h.diagonal.size() != basis.size() ||
      h.offdiag.dimension() != basis.size())
    throw SimError("ExactPropagator: hamiltonian does not match basis");
  Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(n, n);
  for (Eigen::Index q = 0; q < n; ++q) {
    m(q, q) = h.diagonal[static_cast<std::size_t>(q)];
    for (const auto& [row, v] : h.offdiag.column(static_cast<std::size_t>(q)))
      m(static_cast<Eigen::Index>(row), q) = v;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(m);
  if (solver.info() != Eigen::Success)
    throw SimError("ExactPropagator: eigendecomposition failed");
  evals_ = solver.eigenvalues();
  evecs_ = solver.eigenvectors();
}

Eigen::VectorXcd ExactPropagator::evolve(const Eigen::VectorXcd& amp0,
                                         double t) const {
  Eigen::VectorXcd proj = evecs_.adjoint() * amp0;
  for (Eigen::Index k = 0; k < proj.size(); ++k)
    proj[k] *= std::exp(cx(0.0, -evals_[k] * t));
  return evecs_ * proj;
}

namespace {

// Shared machinery for the jump walkers: the deterministic psi path on the
// sub-step grid plus exact off-grid evaluation after refinements.
class JumpContext {
 public:
  JumpContext(const SectoredState& psi0, const BellHamiltonian& h,
              double duration, double dt)
      : basis_(psi0.basis),
        h_(&h),
        prop_(*psi0.basis, h),
        amp0_(normalize(psi0).amp),
        duration_(duration),
        dt_(dt) {
    if (!(dt > 0.0)) throw SimError("simulate_pure_jump: dt must be > 0");
    if (duration < 0.0)
      throw SimError("simulate_pure_jump: negative duration");
    const int steps = static_cast<int>(std::ceil(duration / dt - 1e-9));
    grid_.reserve(static_cast<std::size_t>(steps) + 1);
    for (int k = 0; k <= steps; ++k)
      grid_.push_back(prop_.evolve(amp0_, std::min(k * dt, duration)));
  }

  const Eigen::VectorXcd& at_grid(int k) const {
    return grid_[static_cast<std::size_t>(k)];
  }
  Eigen::VectorXcd at_time(double t) const { return prop_.evolve(amp0_, t); }

  JumpPath walk(std::size_t q0, Rng rng) const {
    if (q0 >= basis_->size())
      throw SimError("simulate_pure_jump: start configuration out of range");
    JumpPath path;
    path.occupation.emplace_back(0.0, q0);
    std::size_t q = q0;
    double t = 0.0;
    const double eps = 1e-12 * std::max(1.0, duration_);
    Eigen::VectorXcd off_grid;
    while (t < duration_ - eps) {
      // psi at the current time: cached when t sits on the sub-step grid.
      double ratio = t / dt_;
      int k = static_cast<int>(std::floor(ratio + 0.5));
      const bool on_grid = std::abs(ratio - static_cast<double>(k)) < 1e-9;
      const Eigen::VectorXcd* amp;
      if (on_grid && static_cast<std::size_t>(k) < grid_.size()) {
        amp = &grid_[static_cast<std::size_t>(k)];
      } else {
        off_grid = at_time(t);
        amp = &off_grid;
      }

      auto rates = rates_from_amp(*amp, q, h_->offdiag);
      double total = 0.0;
      for (const auto& r : rates) total += r.second;

      double boundary =
          std::min(duration_, (std::floor(ratio + 1e-9) + 1.0) * dt_);
      double step = boundary - t;
      bool refined = false;
      if (total * step > 0.05) {
        double cap = 0.05 / total;
        if (cap < dt_ / 1048576.0)
          throw StiffRates("simulate_pure_jump: total rate " +
                           std::to_string(total) +
                           " exceeds the refinement budget");
        step = cap;
        refined = true;
      }

      bool fire = false;
      if (total > 0.0) {
        double p = -std::expm1(-total * step);
        fire = rng.uniform() < p;
      }
      double t_next = refined ? t + step : boundary;
      if (fire) {
        double u = rng.uniform() * total;
        double acc = 0.0;
        std::size_t dest = rates.back().first;
        for (const auto& [candidate, rate] : rates) {
          acc += rate;
          if (u < acc) {
            dest = candidate;
            break;
          }
        }
        path.jumps.push_back({t_next, q, dest});
        path.occupation.emplace_back(t_next, dest);
        q = dest;
      }
      t = t_next;
    }
    return path;
  }

 private:
  const SectorBasis* basis_;
  const BellHamiltonian* h_;
  ExactPropagator prop_;
  Eigen::VectorXcd amp0_;
  double duration_, dt_;
  std::vector<Eigen::VectorXcd> grid_;
};

}  // namespace

JumpPath simulate_pure_jump(const SectoredState& psi0,
                            const BellHamiltonian& h, std::size_t q0,
                            double duration, double dt, Rng rng) {
  JumpContext ctx(psi0, h, duration, dt);
  return ctx.walk(q0, rng);
}

std::vector<uint64_t> pure_jump_occupancy(const SectoredState& psi0,
                                          const BellHamiltonian& h,
                                          std::size_t q0, double duration,
                                          double dt, int n_runs, Rng rng) {
  JumpContext ctx(psi0, h, duration, dt);
  std::vector<uint64_t> counts(psi0.basis->size(), 0);
  for (int i = 0; i < n_runs; ++i) {
    JumpPath path = ctx.walk(q0, rng.split(static_cast<uint64_t>(i)));
    ++counts[path.occupation.back().second];
  }
  return counts;
}

// ---------------------------------------------------------------------------
// Hybrid model.

void HybridModel::validate() const {
  grid1.validate();
  std::vector<std::string> bad;
  if (grid1.particles != 1 || grid1.dim_per_particle != 1)
    bad.push_back("grid1 must hold one particle in one dimension");
  if (grid1.boundary != Boundary::periodic)
    bad.push_back("hybrid model requires a periodic grid");
  if (!(mass_a > 0.0) || !(mass_b > 0.0)) bad.push_back("masses must be > 0");
  if (coupling < 0.0) bad.push_back("coupling must be >= 0");
  if (!(kernel_width >= 2.0 * grid1.spacing()))
    bad.push_back("kernel_width must be at least two grid spacings");
  if (!bad.empty()) throw ValidationError(std::move(bad));
}

GridSpec HybridModel::grid2() const {
  GridSpec g = grid1;
  g.particles = 2;
  return g;
}

HybridState make_hybrid_packet(const HybridModel& model, double center,
                               double width, double momentum) {
  model.validate();
  WaveFunction packet =
      gaussian_packet(model.grid1, {center}, {width}, {momentum});
  HybridState psi;
  psi.lower = packet.amplitudes;
  psi.upper.assign(model.grid1.size() * model.grid1.size(), cx(0.0, 0.0));
  return psi;
}

std::pair<double, double> hybrid_sector_weights(const HybridModel& model,
                                                const HybridState& psi) {
  const double h = model.grid1.spacing();
  double w1 = 0.0, w2 = 0.0;
  for (const cx& a : psi.lower) w1 += std::norm(a);
  for (const cx& a : psi.upper) w2 += std::norm(a);
  return {w1 * h, w2 * h * h};
}

namespace {

// Cached tables for the hybrid propagator: kinetic phases and the creation
// profile.
struct HybridCore {
  const HybridModel* model;
  int P;
  double h;
  double sigma;                 // <kernel mode|H_I|lower>
  std::vector<double> profile;  // unit counting-norm kernel, indexed by
                                // (j - i) mod P
  std::vector<double> kin1;     // lower kinetic energies per mode
  std::vector<double> kin2;     // upper kinetic energies per mode pair

  explicit HybridCore(const HybridModel& m) : model(&m) {
    m.validate();
    P = m.grid1.points_per_axis;
    h = m.grid1.spacing();
    std::vector<double> kernel(static_cast<std::size_t>(P));
    double sum2 = 0.0;
    for (int r = 0; r < P; ++r) {
      double dr = min_image(static_cast<double>(r) * h, m.grid1.extent);
      kernel[static_cast<std::size_t>(r)] =
          std::exp(-dr * dr / (2.0 * m.kernel_width * m.kernel_width));
      sum2 += sqr(kernel[static_cast<std::size_t>(r)]);
    }
    sigma = m.coupling * std::sqrt(h * sum2);
    profile.resize(static_cast<std::size_t>(P));
    const double unit = (sum2 > 0.0) ? 1.0 / std::sqrt(sum2) : 0.0;
    for (int r = 0; r < P; ++r)
      profile[static_cast<std::size_t>(r)] =
          kernel[static_cast<std::size_t>(r)] * unit;
    kin1 = detail::kinetic_table(m.grid1, {m.mass_a});
    kin2 = detail::kinetic_table(m.grid2(), {m.mass_a, m.mass_b});
  }

  void kinetic_half(HybridState& psi, double dt) const {
    const std::vector<int> dims1 = {P};
    const std::vector<int> dims2 = {P, P};
    fft::forward(psi.lower.data(), dims1);
    for (std::size_t c = 0; c < psi.lower.size(); ++c) {
      double theta = -0.5 * dt * kin1[c];
      psi.lower[c] *= cx(std::cos(theta), std::sin(theta));
    }
    fft::inverse(psi.lower.data(), dims1);
    fft::forward(psi.upper.data(), dims2);
    for (std::size_t c = 0; c < psi.upper.size(); ++c) {
      double theta = -0.5 * dt * kin2[c];
      psi.upper[c] *= cx(std::cos(theta), std::sin(theta));
    }
    fft::inverse(psi.upper.data(), dims2);
  }

  // Exact rotation between the lower amplitude at each x-cell and the
  // kernel mode of the upper sector anchored there.
  void interaction(HybridState& psi, double dt) const {
    const double cth = std::cos(sigma * dt);
    const double sth = std::sin(sigma * dt);
    const double rt_h = std::sqrt(h);
    for (int i = 0; i < P; ++i) {
      cx* row = psi.upper.data() + static_cast<std::size_t>(i) * P;
      cx s(0.0, 0.0);
      for (int j = 0; j < P; ++j) {
        int r = j - i;
        if (r < 0) r += P;
        s += profile[static_cast<std::size_t>(r)] * row[j];
      }
      cx a = psi.lower[static_cast<std::size_t>(i)];
      cx a_new = cth * a - cx(0.0, sth) * rt_h * s;
      cx s_new = -cx(0.0, sth) * a / rt_h + cth * s;
      psi.lower[static_cast<std::size_t>(i)] = a_new;
      cx delta = s_new - s;
      for (int j = 0; j < P; ++j) {
        int r = j - i;
        if (r < 0) r += P;
        row[j] += delta * profile[static_cast<std::size_t>(r)];
      }
    }
  }

  void step(HybridState& psi, double dt) const {
    kinetic_half(psi, dt);
    if (sigma != 0.0) interaction(psi, dt);
    kinetic_half(psi, dt);
    psi.time += dt;
  }

  // Jump rates out of the walker's current sector at its current cells.
  // Sector 1 at cell i -> destinations (i, j); sector 2 at (i, j) -> (i).
  std::vector<std::pair<int, double>> rates_up(const HybridState& psi,
                                               int i) const {
    const cx low = psi.lower[static_cast<std::size_t>(i)];
    double rho = std::norm(low);
    if (rho <= 1e-300)
      throw ZeroOccupancy("hybrid jump rates: empty lower amplitude");
    const cx* row = psi.upper.data() + static_cast<std::size_t>(i) * P;
    std::vector<std::pair<int, double>> rates;
    const double g = model->coupling;
    for (int j = 0; j < P; ++j) {
      int r = j - i;
      if (r < 0) r += P;
      // profile is the unit kernel; the matrix element is g K sqrt(h) with
      // K = profile / unit, folded into a single factor here.
      double kval = profile[static_cast<std::size_t>(r)];
      if (kval == 0.0) continue;
      double im = std::imag(std::conj(row[j]) * low);
      double flow = 2.0 * g * h * (kval / unit_scale()) * im;
      if (flow > 0.0) rates.emplace_back(j, flow / rho);
    }
    return rates;
  }

  double rate_down(const HybridState& psi, int i, int j) const {
    const cx up = psi.upper[static_cast<std::size_t>(i) * P +
                            static_cast<std::size_t>(j)];
    double rho = std::norm(up);
    if (rho <= 1e-300)
      throw ZeroOccupancy("hybrid jump rates: empty upper amplitude");
    int r = j - i;
    if (r < 0) r += P;
    double kval = profile[static_cast<std::size_t>(r)] / unit_scale();
    double im = std::imag(std::conj(psi.lower[static_cast<std::size_t>(i)]) *
                          up);
    double flow = 2.0 * model->coupling * kval * im;
    return flow > 0.0 ? flow / rho : 0.0;
  }

  double unit_scale() const {
    // profile = K / |K|_2; recover K from profile: K = profile * |K|_2,
    // and |K|_2 = sigma / (g sqrt(h)).
    return (model->coupling > 0.0)
               ? model->coupling * std::sqrt(h) / sigma
               : 1.0;
  }

  WaveFunction lower_view(const HybridState& psi) const {
    WaveFunction w = make_state(model->grid1, 1);
    w.amplitudes = psi.lower;
    w.time = psi.time;
    return w;
  }
  WaveFunction upper_view(const HybridState& psi) const {
    WaveFunction w = make_state(model->grid2(), 1);
    w.amplitudes = psi.upper;
    w.time = psi.time;
    return w;
  }
};

struct HybridWalker {
  int sector = 1;
  Configuration q;  // 1 coordinate in sector 1, 2 in sector 2
  bool active = true;
};

struct HybridFields {
  GuidanceField lower, upper;
};

HybridFields make_fields(const HybridCore& core, const HybridState& psi,
                         const BohmRunConfig& cfg) {
  return HybridFields{
      GuidanceField(core.lower_view(psi), {core.model->mass_a},
                    cfg.interpolation, cfg.node_guard, cfg.velocity_scale),
      GuidanceField(core.upper_view(psi),
                    {core.model->mass_a, core.model->mass_b},
                    cfg.interpolation, cfg.node_guard, cfg.velocity_scale)};
}

// One walker step: jump test against the rates frozen at the step start,
// otherwise guided motion inside the current sector.
void hybrid_walker_step(const HybridCore& core, const HybridState& psi_start,
                        const HybridFields& f0, const HybridFields& fmid,
                        const HybridFields& fend, double t, double dt,
                        const BohmRunConfig& cfg, HybridWalker& w, Rng& rng,
                        std::vector<HybridJump>* jumps,
                        std::size_t* node_failures) {
  if (!w.active) return;
  const GridSpec& g1 = core.model->grid1;
  try {
    double total = 0.0;
    std::vector<std::pair<int, double>> up_rates;
    double down_rate = 0.0;
    if (w.sector == 1) {
      int i = g1.axis_cell(w.q.q[0]);
      up_rates = core.rates_up(psi_start, i);
      for (const auto& r : up_rates) total += r.second;
    } else {
      int i = g1.axis_cell(w.q.q[0]);
      int j = g1.axis_cell(w.q.q[1]);
      down_rate = core.rate_down(psi_start, i, j);
      total = down_rate;
    }

    int n_sub = 1;
    if (total * dt > 0.05) {
      n_sub = static_cast<int>(std::ceil(total * dt / 0.05));
      if (n_sub > (1 << 20))
        throw StiffRates("hybrid: jump rate exceeds refinement budget");
    }
    int fired_sub = -1;
    if (total > 0.0) {
      double p = -std::expm1(-total * dt / n_sub);
      for (int k = 0; k < n_sub; ++k)
        if (rng.uniform() < p) {
          fired_sub = k;
          break;
        }
    }

    if (fired_sub >= 0) {
      double t_jump = t + dt * (fired_sub + 1) / n_sub;
      HybridJump jump;
      jump.time = t_jump;
      jump.q_before = w.q.q;
      if (w.sector == 1) {
        double u = rng.uniform() * total;
        double acc = 0.0;
        int dest = up_rates.back().first;
        for (const auto& [j, rate] : up_rates) {
          acc += rate;
          if (u < acc) {
            dest = j;
            break;
          }
        }
        double y = g1.axis_coord(dest) + g1.spacing() * rng.uniform();
        jump.from_sector = 1;
        jump.to_sector = 2;
        w.sector = 2;
        w.q.q = {w.q.q[0], y};
      } else {
        jump.from_sector = 2;
        jump.to_sector = 1;
        w.sector = 1;
        w.q.q = {w.q.q[0]};
      }
      jump.q_after = w.q.q;
      jumps->push_back(std::move(jump));
      return;  // position frozen for the rest of this step
    }

    // Guided motion inside the current sector.
    const GuidanceField& a =
        (w.sector == 1) ? f0.lower : f0.upper;
    const GuidanceField& b =
        (w.sector == 1) ? fmid.lower : fmid.upper;
    const GuidanceField& c =
        (w.sector == 1) ? fend.lower : fend.upper;
    std::vector<Configuration> one = {w.q};
    std::vector<char> active = {1};
    std::vector<std::pair<std::size_t, double>> failures;
    guided_step(a, b, c, dt, cfg, one, active, failures);
    if (!failures.empty()) {
      w.active = false;
      ++*node_failures;
      return;
    }
    w.q = one[0];
  } catch (const ZeroOccupancy&) {
    w.active = false;
    ++*node_failures;
  }
}

}  // namespace

void hybrid_step(HybridState& psi, const HybridModel& model, double dt) {
  HybridCore core(model);
  core.step(psi, dt);
}

HybridPath simulate_hybrid(const HybridState& psi0, const HybridModel& model,
                           const std::vector<double>& q0, double duration,
                           const BohmRunConfig& cfg, Rng rng) {
  if (!(cfg.dt > 0.0)) throw SimError("simulate_hybrid: dt must be > 0");
  if (duration < 0.0) throw SimError("simulate_hybrid: negative duration");
  if (q0.size() != 1 && q0.size() != 2)
    throw SimError("simulate_hybrid: q0 must have 1 or 2 coordinates");
  HybridCore core(model);
  HybridState psi = psi0;

  HybridWalker w;
  w.sector = static_cast<int>(q0.size());
  w.q.q = q0;
  w.q = canonicalize(w.q, w.sector == 1 ? model.grid1 : model.grid2());

  HybridPath path;
  std::size_t node_failures = 0;
  path.samples.push_back({psi.time, w.sector, w.q.q});

  const double t_end = psi.time + duration;
  while (psi.time < t_end - 1e-12 && w.active) {
    double dt = std::min(cfg.dt, t_end - psi.time);
    double t0 = psi.time;
    HybridState start = psi;
    HybridFields f0 = make_fields(core, psi, cfg);
    core.step(psi, dt / 2.0);
    HybridFields fmid = make_fields(core, psi, cfg);
    core.step(psi, dt / 2.0);
    psi.time = t0 + dt;
    HybridFields fend = make_fields(core, psi, cfg);
    hybrid_walker_step(core, start, f0, fmid, fend, t0, dt, cfg, w, rng,
                       &path.jumps, &node_failures);
    path.samples.push_back({psi.time, w.sector, w.q.q});
  }
  if (!w.active)
    throw NodeProximity("simulate_hybrid: walker failed on a node",
                        path.samples.back().t);
  return path;
}

HybridEnsembleReport hybrid_ensemble(const HybridState& psi0,
                                     const HybridModel& model, int n_walkers,
                                     const std::vector<double>& times,
                                     const BohmRunConfig& cfg, Rng rng) {
  if (n_walkers < 2) throw EmptySample("hybrid_ensemble: need >= 2 walkers");
  if (times.empty()) throw EmptySample("hybrid_ensemble: need record times");
  HybridCore core(model);
  HybridState psi = psi0;

  // Walkers start in the lower sector, in quantum equilibrium there.
  WaveFunction lower = core.lower_view(psi);
  lower = normalize(lower);
  Rng sampler = rng.split(0xFFFFFFFFull);
  std::vector<Configuration> starts =
      sample_configurations(lower, n_walkers, sampler);
  std::vector<HybridWalker> walkers(static_cast<std::size_t>(n_walkers));
  std::vector<Rng> streams;
  streams.reserve(walkers.size());
  for (std::size_t i = 0; i < walkers.size(); ++i) {
    walkers[i].sector = 1;
    walkers[i].q = starts[i];
    streams.push_back(rng.split(i));
  }

  HybridEnsembleReport report;
  report.walkers = walkers.size();
  std::vector<double> sorted_times = times;
  std::sort(sorted_times.begin(), sorted_times.end());

  std::vector<HybridJump> jump_sink;
  std::size_t node_failures = 0;
  for (double target : sorted_times) {
    while (psi.time < target - 1e-12) {
      double dt = std::min(cfg.dt, target - psi.time);
      double t0 = psi.time;
      HybridState start = psi;
      HybridFields f0 = make_fields(core, psi, cfg);
      core.step(psi, dt / 2.0);
      HybridFields fmid = make_fields(core, psi, cfg);
      core.step(psi, dt / 2.0);
      psi.time = t0 + dt;
      HybridFields fend = make_fields(core, psi, cfg);
      for (std::size_t i = 0; i < walkers.size(); ++i)
        hybrid_walker_step(core, start, f0, fmid, fend, t0, dt, cfg,
                           walkers[i], streams[i], &jump_sink,
                           &node_failures);
    }
    std::size_t active = 0, upper_count = 0;
    for (const auto& w : walkers)
      if (w.active) {
        ++active;
        if (w.sector == 2) ++upper_count;
      }
    if (active == 0) throw RunFailure("hybrid_ensemble: all walkers failed");
    report.times.push_back(target);
    report.fraction_upper.push_back(static_cast<double>(upper_count) /
                                    static_cast<double>(active));
    report.expected_upper.push_back(hybrid_sector_weights(model, psi).second);
  }
  report.node_failures = node_failures;
  return report;
}

}  // namespace ontosim::bell
