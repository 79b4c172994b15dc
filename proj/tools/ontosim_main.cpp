#include <cstdio>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ontosim/checks.hpp"
#include "ontosim/config.hpp"
#include "ontosim/errors.hpp"
#include "ontosim/records.hpp"
#include "ontosim/runner.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitBadInput = 2;     // configuration or input file rejected
constexpr int kExitRunFailure = 3;   // too many failed trajectories/walkers
constexpr int kExitVerifyFail = 4;   // a verification check did not pass

int run_simulate(const std::string& model, const std::string& config_path,
                 bool seed_given, uint64_t seed, const std::string& out_dir,
                 int threads) {
  ontosim::harness::ExperimentConfig cfg;
  if (!config_path.empty()) {
    cfg = ontosim::harness::load_config(config_path);
    if (!model.empty() && model != cfg.model)
      throw ontosim::ValidationError({"model: command line says \"" + model +
                                      "\" but the config file says \"" +
                                      cfg.model + "\""});
  } else if (!model.empty()) {
    cfg.model = model;
    ontosim::harness::validate_config(cfg);  // fills every default
  } else {
    throw ontosim::ValidationError(
        {"simulate needs a model argument or --config"});
  }
  if (seed_given) cfg.seed = seed;
  if (!out_dir.empty()) cfg.out_dir = out_dir;

  ontosim::harness::RunManifest m =
      ontosim::harness::run_experiment(cfg, threads);
  std::printf("model %s  seed %llu  config %s\n", cfg.model.c_str(),
              static_cast<unsigned long long>(m.seed), m.config_hash.c_str());
  std::printf("out: %s\n", ontosim::harness::resolved_out_dir(cfg).c_str());
  for (const auto& [file, rows] : m.outputs)
    std::printf("  %s: %llu records\n", file.c_str(),
                static_cast<unsigned long long>(rows));
  std::printf("failures %llu of %llu runs, wall time %.3f s\n",
              static_cast<unsigned long long>(m.failure_count),
              static_cast<unsigned long long>(m.total_runs), m.wall_time_s);
  return kExitOk;
}

int run_export(const std::string& in_path, const std::string& csv_path) {
  std::vector<ontosim::records::Record> rows =
      ontosim::records::read_records(in_path);
  ontosim::records::export_csv(rows, csv_path);
  std::printf("%zu records -> %s\n", rows.size(), csv_path.c_str());
  return kExitOk;
}

int run_verify(const std::vector<std::string>& only, double level,
               bool list_only) {
  if (list_only) {
    for (const std::string& name : ontosim::harness::verification_names())
      std::printf("%s\n", name.c_str());
    return kExitOk;
  }
  std::vector<ontosim::harness::CheckResult> results =
      ontosim::harness::run_verification(only, level);
  std::size_t passed = 0;
  for (const auto& res : results) {
    std::printf("[%s] %s: %s\n", res.pass ? "PASS" : "FAIL",
                res.name.c_str(), res.detail.c_str());
    std::fflush(stdout);
    if (res.pass) ++passed;
  }
  std::printf("%zu of %zu checks passed\n", passed, results.size());
  return passed == results.size() ? kExitOk : kExitVerifyFail;
}

int run_arith(double particles, double rate, double width, double length_unit,
              double time_unit) {
  std::printf("N = %.15g particles, lambda = %.15g per second\n", particles,
              rate);
  std::printf("total flash rate N*lambda = %.15g per second\n",
              particles * rate);
  std::printf("1 simulation length unit = %.15g m, 1 simulation time unit = "
              "%.15g s\n",
              length_unit, time_unit);
  std::printf("collapse width %.15g sim units = %.15g m\n", width,
              width * length_unit);
  std::printf("per-particle rate %.15g /s = %.15g per sim time unit\n", rate,
              rate * time_unit);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Simulation laboratory for quantum theories with particle, "
               "matter-density, and flash ontologies"};
  app.require_subcommand(1);

  std::string model, config_path, out_dir;
  uint64_t seed = 0;
  int threads = 1;
  CLI::App* sim = app.add_subcommand(
      "simulate", "Run one experiment; writes records.jsonl and manifest.json");
  sim->add_option("model", model,
                  "bohm, grw, bell_pure, bell_hybrid, or sf_flash");
  sim->add_option("--config", config_path, "JSON configuration file");
  CLI::Option* seed_opt =
      sim->add_option("--seed", seed, "Override the configured RNG seed");
  sim->add_option("--out", out_dir,
                  "Output directory (overrides config and ONTOSIM_OUT_DIR)");
  sim->add_option("--threads", threads, "Worker threads for independent runs")
      ->check(CLI::Range(1, 256));

  std::string in_path, csv_path;
  CLI::App* exp =
      app.add_subcommand("export", "Convert a records.jsonl file to CSV");
  exp->add_option("--in", in_path, "Records file written by simulate")
      ->required();
  exp->add_option("--out", csv_path, "CSV destination")->required();

  double level = 0.0;
  std::vector<std::string> only;
  bool list_only = false;
  CLI::App* ver =
      app.add_subcommand("verify", "Run the built-in verification suite");
  ver->add_option("--level", level,
                  "Significance level override for the statistical checks "
                  "(e.g. 0.01)")
      ->check(CLI::Range(0.0, 0.5));
  ver->add_option("--only", only,
                  "Run only checks whose name contains this substring");
  ver->add_flag("--list", list_only, "List the check names and exit");

  double particles = 1e23, rate = 1e-15;
  double width = 1.0, length_unit = 1e-7, time_unit = 1.0;
  CLI::App* ar = app.add_subcommand(
      "arith", "Unit conversions, including the total flash-rate product");
  ar->add_option("--particles", particles, "Particle count N");
  ar->add_option("--rate", rate, "Per-particle event rate, 1/s");
  ar->add_option("--width", width, "Collapse width in simulation units");
  ar->add_option("--length-unit", length_unit,
                 "Meters per simulation length unit");
  ar->add_option("--time-unit", time_unit,
                 "Seconds per simulation time unit");

  CLI11_PARSE(app, argc, argv);

  try {
    if (sim->parsed())
      return run_simulate(model, config_path, seed_opt->count() > 0, seed,
                          out_dir, threads);
    if (exp->parsed()) return run_export(in_path, csv_path);
    if (ver->parsed()) return run_verify(only, level, list_only);
    if (ar->parsed())
      return run_arith(particles, rate, width, length_unit, time_unit);
  } catch (const ontosim::ValidationError& e) {
    std::fprintf(stderr, "%s\n", e.what());
    return kExitBadInput;
  } catch (const ontosim::ParseError& e) {
    std::fprintf(stderr, "%s\n", e.what());
    return kExitBadInput;
  } catch (const ontosim::RunFailure& e) {
    std::fprintf(stderr, "%s\n", e.what());
    return kExitRunFailure;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return kExitOk;
}
