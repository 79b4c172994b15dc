#include "ontosim/config.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>

#include "ontosim/errors.hpp"

namespace ontosim::harness {

using nlohmann::json;

namespace {

std::string read_file(const std::string& path) {
  std::FILE* f = std::fopen(path.c_str(), "rb");
  if (!f) throw IoError("cannot open '" + path + "'");
  std::string text;
  char buffer[1 << 16];
  std::size_t got;
  while ((got = std::fread(buffer, 1, sizeof(buffer), f)) > 0)
    text.append(buffer, got);
  std::fclose(f);
  return text;
}

[[noreturn]] void rethrow_parse(const std::string& text,
                                const json::parse_error& e) {
  std::size_t byte = e.byte > 0 ? e.byte - 1 : 0;
  if (byte > text.size()) byte = text.size();
  std::size_t line = 1, col = 1;
  for (std::size_t i = 0; i < byte; ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  throw ParseError(e.what(), line, col);
}

/// Reads typed fields out of a JSON block, accumulating one message per
/// violation and writing defaults back so the block becomes fully explicit.
class Fields {
 public:
  Fields(json& block, std::string prefix, std::vector<std::string>& bad)
      : j_(&block), prefix_(std::move(prefix)), bad_(&bad) {}

  double number(const char* key, double def) {
    if (!j_->contains(key)) {
      (*j_)[key] = def;
      return def;
    }
    const json& v = (*j_)[key];
    if (!v.is_number()) {
      complain(key, "must be a number");
      return def;
    }
    return v.get<double>();
  }

  int integer(const char* key, int def) {
    if (!j_->contains(key)) {
      (*j_)[key] = def;
      return def;
    }
    const json& v = (*j_)[key];
    if (!v.is_number_integer()) {
      complain(key, "must be an integer");
      return def;
    }
    return v.get<int>();
  }

  std::string text(const char* key, const std::string& def) {
    if (!j_->contains(key)) {
      (*j_)[key] = def;
      return def;
    }
    const json& v = (*j_)[key];
    if (!v.is_string()) {
      complain(key, "must be a string");
      return def;
    }
    return v.get<std::string>();
  }

  std::vector<double> numbers(const char* key, std::vector<double> def) {
    if (!j_->contains(key)) {
      (*j_)[key] = def;
      return def;
    }
    const json& v = (*j_)[key];
    if (!v.is_array()) {
      complain(key, "must be an array of numbers");
      return def;
    }
    std::vector<double> out;
    for (const json& e : v) {
      if (!e.is_number()) {
        complain(key, "must be an array of numbers");
        return def;
      }
      out.push_back(e.get<double>());
    }
    return out;
  }

  std::vector<int> integers(const char* key, std::vector<int> def) {
    if (!j_->contains(key)) {
      (*j_)[key] = def;
      return def;
    }
    const json& v = (*j_)[key];
    if (!v.is_array()) {
      complain(key, "must be an array of integers");
      return def;
    }
    std::vector<int> out;
    for (const json& e : v) {
      if (!e.is_number_integer()) {
        complain(key, "must be an array of integers");
        return def;
      }
      out.push_back(e.get<int>());
    }
    return out;
  }

  json& sub(const char* key) {
    if (!j_->contains(key) || !(*j_)[key].is_object())
      (*j_)[key] = json::object();
    return (*j_)[key];
  }

  json& sub_array(const char* key) {
    if (!j_->contains(key) || !(*j_)[key].is_array())
      (*j_)[key] = json::array();
    return (*j_)[key];
  }

  void complain(const char* key, const std::string& what) {
    bad_->push_back(prefix_ + key + " " + what);
  }
  void complain_raw(const std::string& what) { bad_->push_back(what); }
  std::vector<std::string>& bad() { return *bad_; }
  std::string prefix() const { return prefix_; }

 private:
  json* j_;
  std::string prefix_;
  std::vector<std::string>* bad_;
};

void merge_validation(std::vector<std::string>& bad, const std::string& prefix,
                      const ValidationError& e) {
  for (const std::string& v : e.violations()) bad.push_back(prefix + v);
}

GridSpec read_grid(Fields& f, int default_points, double default_extent,
                   int default_particles, std::vector<std::string>& bad) {
  GridSpec g;
  g.dim_per_particle = f.integer("dim", 1);
  g.particles = f.integer("particles", default_particles);
  g.points_per_axis = f.integer("points", default_points);
  g.extent = f.number("extent", default_extent);
  std::string boundary = f.text("boundary", "periodic");
  if (boundary == "periodic") {
    g.boundary = Boundary::periodic;
  } else if (boundary == "box") {
    g.boundary = Boundary::box;
  } else {
    f.complain("boundary", "must be \"periodic\" or \"box\"");
  }
  try {
    g.validate();
  } catch (const ValidationError& e) {
    merge_validation(bad, f.prefix(), e);
  }
  return g;
}

PacketSpec read_packet(json& block, const std::string& prefix, int axes,
                       double default_width, std::vector<std::string>& bad) {
  Fields f(block, prefix, bad);
  PacketSpec p;
  p.center = f.numbers("center",
                       std::vector<double>(static_cast<std::size_t>(axes)));
  p.width = f.numbers("width", std::vector<double>(
                                   static_cast<std::size_t>(axes),
                                   default_width));
  p.momentum = f.numbers(
      "momentum", std::vector<double>(static_cast<std::size_t>(axes)));
  if (static_cast<int>(p.center.size()) != axes)
    f.complain("center", "needs one entry per axis");
  if (static_cast<int>(p.width.size()) != axes)
    f.complain("width", "needs one entry per axis");
  else
    for (double w : p.width)
      if (!(w > 0.0)) {
        f.complain("width", "entries must be > 0");
        break;
      }
  if (static_cast<int>(p.momentum.size()) != axes)
    f.complain("momentum", "needs one entry per axis");
  return p;
}

BohmRunConfig read_run(Fields& f, double default_dt,
                       std::vector<std::string>& bad) {
  BohmRunConfig run;
  run.dt = f.number("dt", default_dt);
  if (!(run.dt > 0.0)) f.complain("dt", "must be > 0");
  std::string integrator = f.text("integrator", "rk4");
  if (integrator == "rk4") {
    run.integrator = Integrator::rk4;
  } else if (integrator == "midpoint") {
    run.integrator = Integrator::midpoint;
  } else {
    f.complain("integrator", "must be \"rk4\" or \"midpoint\"");
  }
  std::string interpolation = f.text("interpolation", "trilinear");
  if (interpolation == "trilinear") {
    run.interpolation = Interpolation::trilinear;
  } else if (interpolation == "spectral") {
    run.interpolation = Interpolation::spectral;
  } else {
    f.complain("interpolation", "must be \"trilinear\" or \"spectral\"");
  }
  run.node_guard = f.number("node_guard", 1e-12);
  if (!(run.node_guard >= 0.0)) f.complain("node_guard", "must be >= 0");
  run.velocity_scale = f.number("velocity_scale", 1.0);
  (void)bad;
  return run;
}

void check_masses_block(Fields& f, std::vector<double>& masses, int particles,
                        const char* key) {
  if (static_cast<int>(masses.size()) != particles) {
    f.complain(key, "needs one entry per particle");
    masses.assign(static_cast<std::size_t>(particles), 1.0);
  }
  for (double m : masses)
    if (!(m > 0.0)) {
      f.complain(key, "entries must be > 0");
      break;
    }
}

BohmSetup decode_bohm_impl(json& params, std::vector<std::string>& bad) {
  Fields f(params, "params.", bad);
  BohmSetup s;
  s.grid = read_grid(f, 256, 48.0, 1, bad);
  const int axes = s.grid.dim_per_particle * s.grid.particles;
  s.masses = f.numbers("masses", std::vector<double>(
                                     static_cast<std::size_t>(s.grid.particles),
                                     1.0));
  check_masses_block(f, s.masses, s.grid.particles, "masses");
  s.packet_a =
      read_packet(f.sub("packet_a"), "params.packet_a.", axes, 1.5, bad);
  s.packet_b =
      read_packet(f.sub("packet_b"), "params.packet_b.", axes, 1.5, bad);
  s.weight_b = f.number("weight_b", 1.0);
  s.run = read_run(f, 2e-3, bad);
  s.duration = f.number("duration", 2.0);
  if (!(s.duration > 0.0)) f.complain("duration", "must be > 0");
  s.walkers = f.integer("walkers", 200);
  if (s.walkers < 1) f.complain("walkers", "must be >= 1");
  return s;
}

GrwSetup decode_grw_impl(json& params, std::vector<std::string>& bad) {
  Fields f(params, "params.", bad);
  GrwSetup s;
  s.grid = read_grid(f, 8, 8.0, 5, bad);
  const int axes = s.grid.dim_per_particle * s.grid.particles;
  s.masses = f.numbers("masses", std::vector<double>(
                                     static_cast<std::size_t>(s.grid.particles),
                                     1.0));
  check_masses_block(f, s.masses, s.grid.particles, "masses");
  s.params.collapse_rate = f.number("collapse_rate", 1.0);
  if (!(s.params.collapse_rate > 0.0))
    f.complain("collapse_rate", "must be > 0");
  s.params.collapse_width = f.number("collapse_width", 2.0);
  std::string mode = f.text("lambda_mode", "uniform");
  if (mode == "uniform") {
    s.params.lambda_mode = LambdaMode::uniform;
  } else if (mode == "mass_proportional") {
    s.params.lambda_mode = LambdaMode::mass_proportional;
  } else {
    f.complain("lambda_mode", "must be \"uniform\" or \"mass_proportional\"");
  }
  s.params.reference_mass = f.number("reference_mass", 0.0);
  if (s.params.reference_mass < 0.0)
    f.complain("reference_mass", "must be >= 0");
  try {
    s.params.validate(s.grid);
  } catch (const ValidationError& e) {
    merge_validation(bad, "params.", e);
  }
  s.packet = read_packet(f.sub("packet"), "params.packet.", axes, 1.0, bad);
  s.duration = f.number("duration", 100.0);
  if (!(s.duration > 0.0)) f.complain("duration", "must be > 0");
  s.runs = f.integer("runs", 1);
  if (s.runs < 1) f.complain("runs", "must be >= 1");
  s.dt_max = f.number("dt_max", 0.0);
  return s;
}

BellPureSetup decode_bell_pure_impl(json& params,
                                    std::vector<std::string>& bad) {
  Fields f(params, "params.", bad);
  BellPureSetup s;
  s.lattice.sites = f.integer("sites", 8);
  s.lattice.max_particles = f.integer("max_particles", 3);
  try {
    s.lattice.validate();
  } catch (const ValidationError& e) {
    merge_validation(bad, "params.", e);
  }
  s.energy_per_particle = f.number("energy_per_particle", 1.0);
  s.creation_amplitude = f.number("creation_amplitude", 0.05);
  s.hopping_amplitude = f.number("hopping_amplitude", 0.1);
  s.q0 = f.integers("q0", {0});
  for (std::size_t i = 0; i < s.q0.size(); ++i) {
    if (s.q0[i] < 0 || s.q0[i] >= s.lattice.sites) {
      f.complain("q0", "sites must lie in [0, sites)");
      break;
    }
    if (i > 0 && s.q0[i] <= s.q0[i - 1]) {
      f.complain("q0", "sites must be strictly increasing");
      break;
    }
  }
  if (static_cast<int>(s.q0.size()) > s.lattice.max_particles)
    f.complain("q0", "holds more particles than max_particles");
  s.duration = f.number("duration", 3.0);
  if (!(s.duration > 0.0)) f.complain("duration", "must be > 0");
  s.dt = f.number("dt", 0.0025);
  if (!(s.dt > 0.0)) f.complain("dt", "must be > 0");
  s.runs = f.integer("runs", 1000);
  if (s.runs < 1) f.complain("runs", "must be >= 1");
  return s;
}

BellHybridSetup decode_bell_hybrid_impl(json& params,
                                        std::vector<std::string>& bad) {
  Fields f(params, "params.", bad);
  BellHybridSetup s;
  s.model.grid1 = read_grid(f, 64, 16.0, 1, bad);
  s.model.mass_a = f.number("mass_a", 1.0);
  s.model.mass_b = f.number("mass_b", 1.0);
  s.model.coupling = f.number("coupling", 0.15);
  s.model.kernel_width = f.number("kernel_width", 1.0);
  try {
    s.model.validate();
  } catch (const ValidationError& e) {
    merge_validation(bad, "params.", e);
  }
  s.center = f.number("center", 0.0);
  s.width = f.number("width", 1.5);
  if (!(s.width > 0.0)) f.complain("width", "must be > 0");
  s.momentum = f.number("momentum", 0.0);
  s.run = read_run(f, 0.01, bad);
  s.times = f.numbers("times", {1.0, 2.0, 3.0});
  if (s.times.empty()) f.complain("times", "needs at least one entry");
  for (double t : s.times)
    if (!(t > 0.0)) {
      f.complain("times", "entries must be > 0");
      break;
    }
  s.walkers = f.integer("walkers", 500);
  if (s.walkers < 2) f.complain("walkers", "must be >= 2");
  return s;
}

SfSetup decode_sf_impl(json& params, std::vector<std::string>& bad) {
  Fields f(params, "params.", bad);
  SfSetup s;
  s.grid = read_grid(f, 64, 24.0, 1, bad);
  s.masses = f.numbers("masses", {1.0});
  const int n = static_cast<int>(s.masses.size());
  if (n < 1 || n > 2) f.complain("masses", "needs 1 or 2 entries (N <= 2)");
  for (double m : s.masses)
    if (!(m > 0.0)) {
      f.complain("masses", "entries must be > 0");
      break;
    }

  json& packets = f.sub_array("packets");
  while (static_cast<int>(packets.size()) < n)
    packets.push_back(json::object());
  if (static_cast<int>(packets.size()) != n)
    f.complain("packets", "needs one entry per label");
  for (int i = 0; i < n && i < static_cast<int>(packets.size()); ++i) {
    if (!packets[static_cast<std::size_t>(i)].is_object()) {
      f.complain("packets", "entries must be objects");
      break;
    }
    Fields pf(packets[static_cast<std::size_t>(i)],
              "params.packets[" + std::to_string(i) + "].", bad);
    std::array<double, 3> p{};
    p[0] = pf.number("center", i == 0 ? -2.0 : 2.0);
    p[1] = pf.number("width", 1.0);
    if (!(p[1] > 0.0)) pf.complain("width", "must be > 0");
    p[2] = pf.number("momentum", 0.0);
    s.packets.push_back(p);
  }

  json& seeds = f.sub_array("seeds");
  while (static_cast<int>(seeds.size()) < n) seeds.push_back(json::object());
  for (int i = 0; i < n && i < static_cast<int>(seeds.size()); ++i) {
    if (!seeds[static_cast<std::size_t>(i)].is_object()) {
      f.complain("seeds", "entries must be objects");
      break;
    }
    Fields sf(seeds[static_cast<std::size_t>(i)],
              "params.seeds[" + std::to_string(i) + "].", bad);
    rel::SeedFlash seed;
    seed.label = i;
    seed.point.t = sf.number("t", 0.0);
    double default_x =
        i < static_cast<int>(s.packets.size())
            ? s.packets[static_cast<std::size_t>(i)][0]
            : 0.0;
    seed.point.x = sf.number("x", default_x);
    double u1 = sf.number("u1", 0.0);
    seed.u = {std::sqrt(1.0 + u1 * u1), u1};
    s.seeds.push_back(seed);
  }

  s.lambda = f.number("lambda", 1.0);
  if (!(s.lambda > 0.0)) f.complain("lambda", "must be > 0");
  s.generations = f.integer("generations", 3);
  if (s.generations < 1) f.complain("generations", "must be >= 1");
  s.runs = f.integer("runs", 1);
  if (s.runs < 1) f.complain("runs", "must be >= 1");
  std::string order = f.text("order", "round_robin");
  if (order == "round_robin") {
    s.order = rel::LabelOrder::round_robin;
  } else if (order == "random_label") {
    s.order = rel::LabelOrder::random_label;
  } else {
    f.complain("order", "must be \"round_robin\" or \"random_label\"");
  }
  s.sampler.chi_max = f.number("chi_max", 5.0);
  if (!(s.sampler.chi_max > 0.0)) f.complain("chi_max", "must be > 0");
  s.sampler.cells = f.integer("cells", 256);
  if (s.sampler.cells < 8) f.complain("cells", "must be >= 8");
  return s;
}

void decode_model(const std::string& model, json& params,
                  std::vector<std::string>& bad) {
  if (model == "bohm") {
    decode_bohm_impl(params, bad);
  } else if (model == "grw") {
    decode_grw_impl(params, bad);
  } else if (model == "bell_pure") {
    decode_bell_pure_impl(params, bad);
  } else if (model == "bell_hybrid") {
    decode_bell_hybrid_impl(params, bad);
  } else if (model == "sf_flash") {
    decode_sf_impl(params, bad);
  } else {
    bad.push_back(
        "model must be one of bohm, grw, bell_pure, bell_hybrid, sf_flash");
  }
}

template <typename Setup, Setup (*Impl)(json&, std::vector<std::string>&)>
Setup decode_checked(const ExperimentConfig& cfg) {
  json params = cfg.params;
  std::vector<std::string> bad;
  Setup s = Impl(params, bad);
  if (!bad.empty()) throw ValidationError(std::move(bad));
  return s;
}

}  // namespace

void validate_config(ExperimentConfig& cfg) {
  std::vector<std::string> bad;
  if (!cfg.params.is_object()) {
    bad.push_back("params must be an object");
    cfg.params = json::object();
  }
  for (std::size_t i = 0; i < cfg.snapshot_times.size(); ++i) {
    double t = cfg.snapshot_times[i];
    if (!std::isfinite(t) || t < 0.0) {
      bad.push_back("snapshot_times entries must be finite and >= 0");
      break;
    }
    if (i > 0 && t < cfg.snapshot_times[i - 1]) {
      bad.push_back("snapshot_times must be non-decreasing");
      break;
    }
  }
  decode_model(cfg.model, cfg.params, bad);
  if (!bad.empty()) throw ValidationError(std::move(bad));
}

ExperimentConfig load_config(const std::string& path) {
  std::string text = read_file(path);
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    rethrow_parse(text, e);
  }

  std::vector<std::string> bad;
  if (!j.is_object()) throw ValidationError({"config root must be an object"});
  static const char* known[] = {"model", "seed", "out_dir", "snapshot_times",
                                "params"};
  for (const auto& [key, value] : j.items()) {
    bool ok = false;
    for (const char* k : known) ok = ok || key == k;
    if (!ok) bad.push_back("unknown top-level key '" + key + "'");
  }

  ExperimentConfig cfg;
  if (!j.contains("model") || !j["model"].is_string())
    bad.push_back("model (string) is required");
  else
    cfg.model = j["model"].get<std::string>();

  if (j.contains("seed")) {
    if (!j["seed"].is_number_unsigned())
      bad.push_back("seed must be an unsigned integer");
    else
      cfg.seed = j["seed"].get<uint64_t>();
  }
  if (j.contains("out_dir")) {
    if (!j["out_dir"].is_string())
      bad.push_back("out_dir must be a string");
    else
      cfg.out_dir = j["out_dir"].get<std::string>();
  }
  if (j.contains("snapshot_times")) {
    if (!j["snapshot_times"].is_array()) {
      bad.push_back("snapshot_times must be an array of numbers");
    } else {
      for (const json& e : j["snapshot_times"]) {
        if (!e.is_number()) {
          bad.push_back("snapshot_times must be an array of numbers");
          break;
        }
        cfg.snapshot_times.push_back(e.get<double>());
      }
    }
  }
  if (j.contains("params")) cfg.params = j["params"];

  if (!bad.empty()) throw ValidationError(std::move(bad));
  validate_config(cfg);
  return cfg;
}

nlohmann::json canonical_json(const ExperimentConfig& cfg) {
  json j;
  j["model"] = cfg.model;
  j["seed"] = cfg.seed;
  j["snapshot_times"] = cfg.snapshot_times;
  j["params"] = cfg.params;
  return j;
}

void save_config(const ExperimentConfig& cfg, const std::string& path) {
  json j = canonical_json(cfg);
  if (!cfg.out_dir.empty()) j["out_dir"] = cfg.out_dir;
  std::string text = j.dump(2);
  text.push_back('\n');
  std::FILE* f = std::fopen(path.c_str(), "wb");
  if (!f) throw IoError("cannot open '" + path + "' for writing");
  if (std::fwrite(text.data(), 1, text.size(), f) != text.size()) {
    std::fclose(f);
    throw IoError("short write to '" + path + "'");
  }
  std::fclose(f);
}

std::string config_hash(const ExperimentConfig& cfg) {
  std::string dump = canonical_json(cfg).dump();
  uint64_t h = 1469598103934665603ull;
  for (unsigned char c : dump) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(h));
  return buf;
}

std::string resolved_out_dir(const ExperimentConfig& cfg) {
  if (!cfg.out_dir.empty()) return cfg.out_dir;
  const char* env = std::getenv("ONTOSIM_OUT_DIR");
  if (env && env[0]) return env;
  return ".";
}

BohmSetup decode_bohm(const ExperimentConfig& cfg) {
  return decode_checked<BohmSetup, decode_bohm_impl>(cfg);
}
GrwSetup decode_grw(const ExperimentConfig& cfg) {
  return decode_checked<GrwSetup, decode_grw_impl>(cfg);
}
BellPureSetup decode_bell_pure(const ExperimentConfig& cfg) {
  return decode_checked<BellPureSetup, decode_bell_pure_impl>(cfg);
}
BellHybridSetup decode_bell_hybrid(const ExperimentConfig& cfg) {
  return decode_checked<BellHybridSetup, decode_bell_hybrid_impl>(cfg);
}
SfSetup decode_sf(const ExperimentConfig& cfg) {
  return decode_checked<SfSetup, decode_sf_impl>(cfg);
}

}  // namespace ontosim::harness
