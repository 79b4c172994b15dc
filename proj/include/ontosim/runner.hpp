#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "ontosim/config.hpp"

namespace ontosim::harness {

std::string code_version();

struct RunManifest {
  std::string config_hash;
  std::string code_version;
  uint64_t seed = 0;
  double wall_time_s = 0.0;  // reported by the CLI; not serialized, so that
                             // reruns stay byte-identical
  uint64_t failure_count = 0;
  uint64_t total_runs = 0;
  std::vector<std::pair<std::string, uint64_t>> outputs;  // file, row count
  nlohmann::json info = nlohmann::json::object();
};

/// Fraction of failed trajectories/walkers above which run_experiment
/// throws RunFailure.
inline constexpr double kFailureThreshold = 0.1;

/// Executes the configured experiment into the resolved output directory:
/// records.jsonl first (validated, flushed, fsynced), then manifest.json.
/// Ensemble members draw from split RNG streams and merge in run order, so
/// outputs are byte-identical for a fixed (config, seed) at any thread
/// count.
RunManifest run_experiment(const ExperimentConfig& cfg, int threads = 1);

/// Runs fn(0..n_runs-1) on a small pool; each index is claimed exactly
/// once.  fn must only touch per-index state.
void parallel_runs(int n_runs, int threads,
                   const std::function<void(int)>& fn);

nlohmann::json manifest_json(const RunManifest& m,
                             const ExperimentConfig& cfg);

}  // namespace ontosim::harness
