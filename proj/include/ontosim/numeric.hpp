#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <vector>

namespace ontosim {

using cx = std::complex<double>;

inline constexpr double kPi = 3.14159265358979323846;

/// Compensated (Neumaier) sum: deterministic and accurate independent of
/// magnitude ordering.  Used for every norm / probability reduction so that
/// results do not depend on traversal batching.
inline double neumaier_sum(const double* data, std::size_t n) {
  double sum = 0.0;
  double comp = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double x = data[i];
    double t = sum + x;
    if (std::abs(sum) >= std::abs(x)) {
      comp += (sum - t) + x;
    } else {
      comp += (x - t) + sum;
    }
    sum = t;
  }
  return sum + comp;
}

inline double neumaier_sum(const std::vector<double>& v) {
  return neumaier_sum(v.data(), v.size());
}

/// Wrap x into [lo, lo + span).
inline double wrap_periodic(double x, double lo, double span) {
  double y = std::fmod(x - lo, span);
  if (y < 0.0) y += span;
  // fmod can return exactly `span` after the correction when x-lo is a tiny
  // negative number; fold that back to the lower edge.
  if (y >= span) y = 0.0;
  return y + lo;
}

/// Minimum-image displacement on a ring of circumference `span`,
/// result in [-span/2, span/2).
inline double min_image(double dx, double span) {
  double y = std::fmod(dx, span);
  if (y < -span / 2.0) y += span;
  if (y >= span / 2.0) y -= span;
  return y;
}

inline double sqr(double x) { return x * x; }

}  // namespace ontosim
