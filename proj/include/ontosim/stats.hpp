#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace ontosim {

/// Kolmogorov-Smirnov comparison.  `pass` means the statistic stayed below
/// the asymptotic critical value at the requested level; `p_value` is the
/// asymptotic tail probability (with the standard small-sample correction)
/// and is reported for context.
struct KsResult {
  double statistic = 0.0;
  double critical = 0.0;
  double level = 0.0;
  double p_value = 0.0;
  std::size_t n = 0, m = 0;  // sample sizes (m == 0 for one-sample)
  bool pass = false;

  std::string describe() const;
};

/// Two-sample KS at significance `level` (e.g. 0.01).
/// Throws EmptySample if either sample is empty.
KsResult ks_two_sample(std::vector<double> a, std::vector<double> b,
                       double level);

/// One-sample KS against a CDF.
KsResult ks_one_sample(std::vector<double> samples,
                       const std::function<double(double)>& cdf, double level);

/// Pearson chi-square against expected bin probabilities.  Bins whose
/// expected count falls below `min_expected` are pooled before the statistic
/// is formed.  `pass` means p_value >= level.
struct Chi2Result {
  double statistic = 0.0;
  int dof = 0;
  double p_value = 0.0;
  double level = 0.0;
  std::size_t pooled_bins = 0;
  bool pass = false;

  std::string describe() const;
};

Chi2Result chi2_against(const std::vector<uint64_t>& counts,
                        const std::vector<double>& probs, double level,
                        double min_expected = 5.0);

/// Regularized upper incomplete gamma Q(a, x) = Gamma(a, x) / Gamma(a).
double gammq(double a, double x);

/// Mean and variance of a discrete density w[j] on a uniform 1D grid with
/// nodes x0 + j*h (weights need not be normalized).
std::pair<double, double> grid_mean_var(const std::vector<double>& w,
                                        double x0, double h);

/// Asymptotic two-sided KS critical coefficient c(level) with
/// D_crit = c * sqrt((n+m)/(n*m)) (two-sample) or c / sqrt(n) (one-sample).
double ks_critical_coefficient(double level);

}  // namespace ontosim
