#include "ontosim/stats.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "ontosim/errors.hpp"
#include "ontosim/numeric.hpp"

namespace ontosim {

namespace {

// Asymptotic Kolmogorov tail Q(lambda) = 2 sum (-1)^{k-1} e^{-2 k^2 lambda^2}.
double kolmogorov_q(double lambda) {
  if (lambda < 1e-8) return 1.0;
  double sum = 0.0;
  double sign = 1.0;
  for (int k = 1; k <= 100; ++k) {
    double term = std::exp(-2.0 * k * k * lambda * lambda);
    sum += sign * term;
    if (term < 1e-16) break;
    sign = -sign;
  }
  double q = 2.0 * sum;
  if (q < 0.0) q = 0.0;
  if (q > 1.0) q = 1.0;
  return q;
}

double ks_p_value(double d, double effective_n) {
  double sq = std::sqrt(effective_n);
  return kolmogorov_q((sq + 0.12 + 0.11 / sq) * d);
}

}  // namespace

double ks_critical_coefficient(double level) {
  if (!(level > 0.0 && level < 1.0))
    throw SimError("ks: level must lie in (0,1)");
  return std::sqrt(-0.5 * std::log(level / 2.0));
}

KsResult ks_two_sample(std::vector<double> a, std::vector<double> b,
                       double level) {
  if (a.empty() || b.empty())
    throw EmptySample("ks_two_sample: both samples must be non-empty");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const std::size_t n = a.size(), m = b.size();
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < n && j < m) {
    double x = std::min(a[i], b[j]);
    while (i < n && a[i] <= x) ++i;
    while (j < m && b[j] <= x) ++j;
    double gap = std::abs(static_cast<double>(i) / n -
                          static_cast<double>(j) / m);
    d = std::max(d, gap);
  }
  KsResult r;
  r.statistic = d;
  r.level = level;
  r.n = n;
  r.m = m;
  double ratio = static_cast<double>(n + m) /
                 (static_cast<double>(n) * static_cast<double>(m));
  r.critical = ks_critical_coefficient(level) * std::sqrt(ratio);
  double en = static_cast<double>(n) * static_cast<double>(m) /
              static_cast<double>(n + m);
  r.p_value = ks_p_value(d, en);
  r.pass = r.statistic <= r.critical;
  return r;
}

KsResult ks_one_sample(std::vector<double> samples,
                       const std::function<double(double)>& cdf,
                       double level) {
  if (samples.empty())
    throw EmptySample("ks_one_sample: sample must be non-empty");
  std::sort(samples.begin(), samples.end());
  const std::size_t n = samples.size();
  double d = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double f = cdf(samples[i]);
    double lo = f - static_cast<double>(i) / n;
    double hi = static_cast<double>(i + 1) / n - f;
    d = std::max(d, std::max(lo, hi));
  }
  KsResult r;
  r.statistic = d;
  r.level = level;
  r.n = n;
  r.m = 0;
  r.critical = ks_critical_coefficient(level) / std::sqrt(static_cast<double>(n));
  r.p_value = ks_p_value(d, static_cast<double>(n));
  r.pass = r.statistic <= r.critical;
  return r;
}

std::string KsResult::describe() const {
  char sizes[48];
  if (m > 0)
    std::snprintf(sizes, sizeof(sizes), "n=%zu m=%zu", n, m);
  else
    std::snprintf(sizes, sizeof(sizes), "n=%zu", n);
  char buf[160];
  std::snprintf(buf, sizeof(buf),
                "KS D=%.5f crit=%.5f (level %.4g, %s, p=%.4g) %s", statistic,
                critical, level, sizes, p_value, pass ? "pass" : "FAIL");
  return buf;
}

namespace {

// Regularized lower incomplete gamma by series (x < a + 1).
double gammp_series(double a, double x) {
  double ap = a;
  double sum = 1.0 / a;
  double del = sum;
  for (int i = 0; i < 500; ++i) {
    ap += 1.0;
    del *= x / ap;
    sum += del;
    if (std::abs(del) < std::abs(sum) * 1e-15) break;
  }
  return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

// Regularized upper incomplete gamma by Lentz continued fraction (x >= a+1).
double gammq_cf(double a, double x) {
  const double tiny = 1e-300;
  double b = x + 1.0 - a;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i <= 500; ++i) {
    double an = -static_cast<double>(i) * (static_cast<double>(i) - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < 1e-15) break;
  }
  return h * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

}  // namespace

double gammq(double a, double x) {
  if (!(a > 0.0) || x < 0.0) throw SimError("gammq: need a > 0, x >= 0");
  if (x == 0.0) return 1.0;
  if (x < a + 1.0) return 1.0 - gammp_series(a, x);
  return gammq_cf(a, x);
}

Chi2Result chi2_against(const std::vector<uint64_t>& counts,
                        const std::vector<double>& probs, double level,
                        double min_expected) {
  if (counts.empty() || counts.size() != probs.size())
    throw EmptySample("chi2_against: counts/probs must be non-empty and match");
  double total_p = neumaier_sum(probs);
  if (!(total_p > 0.0))
    throw DegenerateDensity("chi2_against: probabilities sum to zero");
  uint64_t n_u = 0;
  for (uint64_t c : counts) n_u += c;
  if (n_u == 0) throw EmptySample("chi2_against: no observations");
  const double n = static_cast<double>(n_u);

  // Pool bins whose expected count is below the floor into one overflow bin.
  double stat = 0.0;
  int used = 0;
  double pooled_obs = 0.0, pooled_exp = 0.0;
  std::size_t pooled = 0;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    double e = n * probs[i] / total_p;
    if (e < min_expected) {
      pooled_obs += static_cast<double>(counts[i]);
      pooled_exp += e;
      ++pooled;
      continue;
    }
    double diff = static_cast<double>(counts[i]) - e;
    stat += diff * diff / e;
    ++used;
  }
  if (pooled > 0 && pooled_exp > 0.0) {
    double diff = pooled_obs - pooled_exp;
    stat += diff * diff / pooled_exp;
    ++used;
  }

  Chi2Result r;
  r.statistic = stat;
  r.dof = used > 1 ? used - 1 : 1;
  r.level = level;
  r.pooled_bins = pooled;
  r.p_value = gammq(0.5 * static_cast<double>(r.dof), 0.5 * stat);
  r.pass = r.p_value >= level;
  return r;
}

std::string Chi2Result::describe() const {
  char buf[160];
  std::snprintf(buf, sizeof(buf),
                "chi2=%.3f dof=%d p=%.4g (level %.4g, pooled %zu) %s",
                statistic, dof, p_value, level, pooled_bins,
                pass ? "pass" : "FAIL");
  return buf;
}

std::pair<double, double> grid_mean_var(const std::vector<double>& w,
                                        double x0, double h) {
  if (w.empty()) throw EmptySample("grid_mean_var: empty weights");
  double w0 = 0.0, w1 = 0.0, w2 = 0.0;
  for (std::size_t j = 0; j < w.size(); ++j) {
    double x = x0 + h * static_cast<double>(j);
    w0 += w[j];
    w1 += w[j] * x;
    w2 += w[j] * x * x;
  }
  if (!(w0 > 0.0)) throw DegenerateDensity("grid_mean_var: zero total weight");
  double mean = w1 / w0;
  double var = w2 / w0 - mean * mean;
  return {mean, var};
}

}  // namespace ontosim
