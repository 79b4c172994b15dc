#include "ontosim/runner.hpp"

#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <thread>

#include "ontosim/dirac.hpp"
#include "ontosim/errors.hpp"
#include "ontosim/records.hpp"
#include "ontosim/schrodinger.hpp"

namespace ontosim::harness {

using nlohmann::json;
using records::Record;

std::string code_version() { return "0.1.0"; }

void parallel_runs(int n_runs, int threads,
                   const std::function<void(int)>& fn) {
  threads = std::max(1, std::min(threads, n_runs));
  if (threads == 1) {
    for (int i = 0; i < n_runs; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(threads));
  for (int w = 0; w < threads; ++w)
    pool.emplace_back([&next, n_runs, &fn] {
      for (int i = next.fetch_add(1); i < n_runs; i = next.fetch_add(1))
        fn(i);
    });
  for (std::thread& t : pool) t.join();
}

namespace {

struct ModelOutput {
  std::vector<Record> rows;
  uint64_t failure_count = 0;
  uint64_t failure_base = 0;  // denominator for the failure fraction
  uint64_t total_runs = 0;
  json info = json::object();
};

std::vector<double> run_targets(const ExperimentConfig& cfg,
                                double duration) {
  std::vector<double> targets;
  for (double t : cfg.snapshot_times)
    if (t > 0.0 && t <= duration) targets.push_back(t);
  if (targets.empty() || targets.back() < duration)
    targets.push_back(duration);
  return targets;
}

ModelOutput execute_bohm(const ExperimentConfig& cfg, Rng rng, int threads) {
  (void)threads;  // the walker ensemble shares one wave function
  BohmSetup s = decode_bohm(cfg);
  WaveFunction a =
      gaussian_packet(s.grid, s.packet_a.center, s.packet_a.width,
                      s.packet_a.momentum);
  WaveFunction b =
      gaussian_packet(s.grid, s.packet_b.center, s.packet_b.width,
                      s.packet_b.momentum);
  WaveFunction psi = superpose(cx(1.0, 0.0), a, cx(s.weight_b, 0.0), b);
  HamiltonianSpec h{HamiltonianKind::schrodinger, s.masses, {}};
  SchrodingerStepper stepper(s.grid, h);

  Rng sampler = rng.split(0);
  std::vector<Configuration> walkers =
      sample_configurations(psi, s.walkers, sampler);
  std::vector<char> active(walkers.size(), 1);
  std::vector<std::pair<std::size_t, double>> failures;

  ModelOutput out;
  out.total_runs = static_cast<uint64_t>(s.walkers);
  out.failure_base = static_cast<uint64_t>(s.walkers);
  auto emit = [&](double t) {
    for (std::size_t i = 0; i < walkers.size(); ++i)
      if (active[i]) out.rows.push_back(records::sample_record(t, walkers[i].q));
  };
  emit(0.0);

  std::vector<double> targets = run_targets(cfg, s.duration);
  for (double target : targets) {
    while (psi.time < target - 1e-12) {
      double dt = std::min(s.run.dt, target - psi.time);
      GuidanceField f0(psi, s.masses, s.run.interpolation, s.run.node_guard,
                       s.run.velocity_scale);
      stepper.advance(psi, dt / 2.0, dt);
      GuidanceField fmid(psi, s.masses, s.run.interpolation, s.run.node_guard,
                         s.run.velocity_scale);
      stepper.advance(psi, dt / 2.0, dt);
      GuidanceField fend(psi, s.masses, s.run.interpolation, s.run.node_guard,
                         s.run.velocity_scale);
      guided_step(f0, fmid, fend, dt, s.run, walkers, active, failures);
    }
    emit(target);
  }
  out.failure_count = failures.size();
  out.info["walkers"] = s.walkers;
  out.info["node_failures"] = failures.size();
  out.info["final_time"] = targets.back();
  return out;
}

ModelOutput execute_grw(const ExperimentConfig& cfg, Rng rng, int threads) {
  GrwSetup s = decode_grw(cfg);
  WaveFunction psi0 =
      gaussian_packet(s.grid, s.packet.center, s.packet.width,
                      s.packet.momentum);
  HamiltonianSpec h{HamiltonianKind::schrodinger, s.masses, {}};

  std::vector<GrwRun> runs(static_cast<std::size_t>(s.runs));
  parallel_runs(s.runs, threads, [&](int i) {
    const std::vector<double>& snapshots =
        (i == 0) ? cfg.snapshot_times : std::vector<double>{};
    runs[static_cast<std::size_t>(i)] =
        run_grw(psi0, h, s.params, s.duration, snapshots, s.dt_max,
                rng.split(static_cast<uint64_t>(i)));
  });

  ModelOutput out;
  out.total_runs = static_cast<uint64_t>(s.runs);
  uint64_t total_flashes = 0;
  json counts = json::array();
  for (const GrwRun& run : runs) {
    counts.push_back(run.flashes.size());
    total_flashes += run.flashes.size();
    for (const CollapseEvent& e : run.flashes)
      out.rows.push_back(records::flash_record(e.time, e.center, e.label));
  }
  for (const auto& [t, values] : runs[0].matter_snapshots)
    out.rows.push_back(records::density_record(
        t, s.grid.dim_per_particle, s.grid.points_per_axis, s.grid.extent,
        values));
  out.info["flash_counts"] = counts;
  out.info["total_flashes"] = total_flashes;
  out.info["mean_flashes_per_run"] =
      static_cast<double>(total_flashes) / s.runs;
  return out;
}

ModelOutput execute_bell_pure(const ExperimentConfig& cfg, Rng rng,
                              int threads) {
  (void)threads;  // walkers share one exactly-propagated state
  BellPureSetup s = decode_bell_pure(cfg);
  bell::SectorBasis basis(s.lattice);
  bell::BellHamiltonian h =
      bell::make_bell_hamiltonian(basis, s.energy_per_particle);
  bell::add_uniform_creation(h.offdiag, basis, s.creation_amplitude);
  if (s.hopping_amplitude != 0.0)
    bell::add_ring_hopping(h.offdiag, basis, s.hopping_amplitude);

  bell::SectoredState psi0 = bell::make_sectored_state(basis);
  std::size_t q0 = basis.index_of(s.q0);
  psi0.amp[static_cast<Eigen::Index>(q0)] = 1.0;

  std::vector<uint64_t> counts = bell::pure_jump_occupancy(
      psi0, h, q0, s.duration, s.dt, s.runs, rng);

  ModelOutput out;
  out.total_runs = static_cast<uint64_t>(s.runs);
  json occupancy = json::array();
  for (std::size_t q = 0; q < counts.size(); ++q) {
    occupancy.push_back(counts[q]);
    std::vector<double> sites(basis.config(q).begin(), basis.config(q).end());
    if (sites.empty()) sites.push_back(-1.0);  // vacuum marker
    for (uint64_t c = 0; c < counts[q]; ++c)
      out.rows.push_back(records::sample_record(s.duration, sites));
  }
  out.info["occupancy"] = occupancy;
  out.info["basis_size"] = basis.size();
  return out;
}

ModelOutput execute_bell_hybrid(const ExperimentConfig& cfg, Rng rng,
                                int threads) {
  (void)threads;  // lockstep ensemble over one shared state
  BellHybridSetup s = decode_bell_hybrid(cfg);
  bell::HybridState psi0 =
      bell::make_hybrid_packet(s.model, s.center, s.width, s.momentum);
  bell::HybridEnsembleReport report =
      bell::hybrid_ensemble(psi0, s.model, s.walkers, s.times, s.run, rng);

  ModelOutput out;
  out.total_runs = static_cast<uint64_t>(s.walkers);
  out.failure_base = static_cast<uint64_t>(s.walkers);
  out.failure_count = report.node_failures;
  for (std::size_t i = 0; i < report.times.size(); ++i)
    out.rows.push_back(records::sample_record(
        report.times[i],
        {report.fraction_upper[i], report.expected_upper[i]}));
  out.info["walkers"] = report.walkers;
  out.info["node_failures"] = report.node_failures;
  return out;
}

ModelOutput execute_sf(const ExperimentConfig& cfg, Rng rng, int threads) {
  SfSetup s = decode_sf(cfg);
  std::vector<WaveFunction> factors;
  for (std::size_t i = 0; i < s.masses.size(); ++i)
    factors.push_back(dirac_packet_1d(s.grid, s.masses[i], s.packets[i][0],
                                      s.packets[i][1], s.packets[i][2]));
  rel::MultiTimeWaveFunction psi =
      rel::MultiTimeWaveFunction::from_factors(factors, s.masses);

  std::vector<rel::FlashRecord> runs(static_cast<std::size_t>(s.runs));
  parallel_runs(s.runs, threads, [&](int i) {
    runs[static_cast<std::size_t>(i)] =
        rel::run_sf(psi, s.seeds, s.lambda, s.generations, s.order, s.sampler,
                    rng.split(static_cast<uint64_t>(i)));
  });

  ModelOutput out;
  out.total_runs = static_cast<uint64_t>(s.runs);
  uint64_t flashes = 0;
  for (const rel::FlashRecord& record : runs)
    for (const auto& generation : record.generations)
      for (const rel::Flash& flash : generation) {
        out.rows.push_back(records::flash_record(
            flash.point.t, {flash.point.x}, flash.label));
        ++flashes;
      }
  out.info["total_flashes"] = flashes;
  out.info["generations"] = s.generations;
  return out;
}

void write_manifest(const json& j, const std::string& path) {
  std::string text = j.dump(2);
  text.push_back('\n');
  std::FILE* f = std::fopen(path.c_str(), "wb");
  if (!f) throw IoError("cannot open '" + path + "' for writing");
  if (std::fwrite(text.data(), 1, text.size(), f) != text.size()) {
    std::fclose(f);
    throw IoError("short write to '" + path + "'");
  }
  if (std::fflush(f) != 0 || ::fsync(::fileno(f)) != 0) {
    std::fclose(f);
    throw IoError("cannot flush '" + path + "'");
  }
  std::fclose(f);
}

}  // namespace

json manifest_json(const RunManifest& m, const ExperimentConfig& cfg) {
  json j;
  j["code_version"] = m.code_version;
  j["config"] = canonical_json(cfg);
  j["config_hash"] = m.config_hash;
  j["failure_count"] = m.failure_count;
  j["info"] = m.info;
  json outputs = json::array();
  for (const auto& [file, rows] : m.outputs)
    outputs.push_back({{"file", file}, {"records", rows}});
  j["outputs"] = outputs;
  j["seed"] = m.seed;
  j["total_runs"] = m.total_runs;
  return j;
}

RunManifest run_experiment(const ExperimentConfig& cfg, int threads) {
  ExperimentConfig checked = cfg;
  validate_config(checked);
  const auto start = std::chrono::steady_clock::now();
  Rng rng(checked.seed);

  ModelOutput out;
  if (checked.model == "bohm") {
    out = execute_bohm(checked, rng, threads);
  } else if (checked.model == "grw") {
    out = execute_grw(checked, rng, threads);
  } else if (checked.model == "bell_pure") {
    out = execute_bell_pure(checked, rng, threads);
  } else if (checked.model == "bell_hybrid") {
    out = execute_bell_hybrid(checked, rng, threads);
  } else {
    out = execute_sf(checked, rng, threads);
  }

  if (out.failure_base > 0 &&
      static_cast<double>(out.failure_count) >
          kFailureThreshold * static_cast<double>(out.failure_base))
    throw RunFailure("failure fraction " +
                     std::to_string(static_cast<double>(out.failure_count) /
                                    static_cast<double>(out.failure_base)) +
                     " exceeds the threshold " +
                     std::to_string(kFailureThreshold));

  std::filesystem::path dir(resolved_out_dir(checked));
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory '" + dir.string() +
                        "': " + ec.message());

  RunManifest manifest;
  manifest.config_hash = config_hash(checked);
  manifest.code_version = code_version();
  manifest.seed = checked.seed;
  manifest.failure_count = out.failure_count;
  manifest.total_runs = out.total_runs;
  manifest.info = std::move(out.info);

  std::string records_path = (dir / "records.jsonl").string();
  records::write_records(out.rows, records_path);
  manifest.outputs.emplace_back("records.jsonl",
                                static_cast<uint64_t>(out.rows.size()));

  write_manifest(manifest_json(manifest, checked),
                 (dir / "manifest.json").string());

  manifest.wall_time_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
          .count();
  return manifest;
}

}  // namespace ontosim::harness
