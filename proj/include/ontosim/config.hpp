#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"
#include "ontosim/belltype.hpp"
#include "ontosim/bohm.hpp"
#include "ontosim/grid.hpp"
#include "ontosim/grw.hpp"
#include "ontosim/relflash.hpp"

namespace ontosim::harness {

/// One experiment: a model name, its parameter block, a seed, and the
/// output schedule.  Loading fills every default, so the canonical dump
/// echoes the full effective configuration.
struct ExperimentConfig {
  std::string model;  // bohm | grw | bell_pure | bell_hybrid | sf_flash
  uint64_t seed = 1;
  std::string out_dir;  // empty: $ONTOSIM_OUT_DIR or "."
  std::vector<double> snapshot_times;
  nlohmann::json params = nlohmann::json::object();
};

/// Parses and validates; every default is written back into `params`.
/// Throws ParseError (with line/column) on malformed JSON and
/// ValidationError aggregating every violation, each naming its field.
ExperimentConfig load_config(const std::string& path);

/// Same validation pass for an in-memory config (used by seed overrides).
void validate_config(ExperimentConfig& cfg);

void save_config(const ExperimentConfig& cfg, const std::string& path);

/// Canonical JSON: alphabetical keys, defaults filled, out_dir excluded
/// (where outputs land does not change what the experiment is).
nlohmann::json canonical_json(const ExperimentConfig& cfg);

/// FNV-1a 64-bit over the canonical dump, as 16 hex digits; stable under
/// field reordering in the source file.
std::string config_hash(const ExperimentConfig& cfg);

std::string resolved_out_dir(const ExperimentConfig& cfg);

// --- Typed parameter blocks, decoded (and deep-validated) from `params`.

struct PacketSpec {
  std::vector<double> center, width, momentum;  // one entry per axis
};

struct BohmSetup {
  GridSpec grid;
  std::vector<double> masses;
  PacketSpec packet_a, packet_b;
  double weight_b = 1.0;  // state = normalize(packet_a + weight_b*packet_b)
  BohmRunConfig run;
  double duration = 1.0;
  int walkers = 100;
};

struct GrwSetup {
  GridSpec grid;
  std::vector<double> masses;
  GrwParams params;
  PacketSpec packet;
  double duration = 1.0;
  int runs = 1;
  double dt_max = 0.0;  // <= 0: exact single-step gaps (V == 0)
};

struct BellPureSetup {
  bell::LatticeSpec lattice;
  double energy_per_particle = 0.0;
  double creation_amplitude = 0.0;
  double hopping_amplitude = 0.0;
  std::vector<int> q0;  // initial occupied sites; also the amp-1 basis state
  double duration = 1.0;
  double dt = 0.01;
  int runs = 1;
};

struct BellHybridSetup {
  bell::HybridModel model;
  double center = 0.0, width = 1.0, momentum = 0.0;
  BohmRunConfig run;
  std::vector<double> times;
  int walkers = 100;
};

struct SfSetup {
  GridSpec grid;
  std::vector<double> masses;                    // one per label
  std::vector<std::array<double, 3>> packets;    // center, width, momentum
  std::vector<rel::SeedFlash> seeds;
  double lambda = 1.0;
  int generations = 1;
  int runs = 1;
  rel::LabelOrder order = rel::LabelOrder::round_robin;
  rel::FlashSamplerOptions sampler;
};

BohmSetup decode_bohm(const ExperimentConfig& cfg);
GrwSetup decode_grw(const ExperimentConfig& cfg);
BellPureSetup decode_bell_pure(const ExperimentConfig& cfg);
BellHybridSetup decode_bell_hybrid(const ExperimentConfig& cfg);
SfSetup decode_sf(const ExperimentConfig& cfg);

}  // namespace ontosim::harness
