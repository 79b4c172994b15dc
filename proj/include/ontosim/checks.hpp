#pragma once

#include <string>
#include <vector>

namespace ontosim::harness {

/// Outcome of one built-in verification check.
struct CheckResult {
  std::string name;
  bool pass = false;
  std::string detail;  // measured values next to their thresholds
};

/// Names of the built-in checks, in execution order.
std::vector<std::string> verification_names();

/// Runs the built-in verification suite: fixed scenarios with pinned seeds
/// and tolerances covering every simulation family (guided trajectories,
/// collapse statistics, jump processes, the relativistic flash sampler) plus
/// the determinism of the experiment runner.
///
/// `names` empty runs everything; otherwise a check runs when its name
/// contains one of the given strings.  `level` > 0 overrides the
/// significance level of the statistical (KS / chi-square) checks; <= 0
/// keeps the built-in defaults.  Quantitative error tolerances are never
/// overridden.
std::vector<CheckResult> run_verification(
    const std::vector<std::string>& names = {}, double level = 0.0);

}  // namespace ontosim::harness
