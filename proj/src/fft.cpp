#include "ontosim/fft.hpp"

#include <fftw3.h>

#include <cstddef>
#include <map>
#include <mutex>

#include "ontosim/numeric.hpp"

namespace ontosim::fft {
namespace {

std::size_t total_size(const std::vector<int>& dims) {
  std::size_t n = 1;
  for (int d : dims) n *= static_cast<std::size_t>(d);
  return n;
}

// FFTW planning is not thread-safe and (without wisdom) not deterministic
// under FFTW_MEASURE, so plans are created once per (dims, sign) under a
// lock with FFTW_ESTIMATE: same size -> same algorithm -> bit-stable
// output.  FFTW_UNALIGNED lets one plan serve any array via
// fftw_execute_dft.  Execution itself is thread-safe on distinct arrays.
class PlanCache {
 public:
  fftw_plan get(const std::vector<int>& dims, int sign) {
    std::lock_guard<std::mutex> lock(mutex_);
    auto key = std::make_pair(dims, sign);
    auto it = plans_.find(key);
    if (it != plans_.end()) return it->second;
    std::vector<std::complex<double>> scratch(total_size(dims));
    auto* raw = reinterpret_cast<fftw_complex*>(scratch.data());
    fftw_plan plan =
        fftw_plan_dft(static_cast<int>(dims.size()),
                      const_cast<int*>(dims.data()), raw, raw, sign,
                      FFTW_ESTIMATE | FFTW_UNALIGNED);
    plans_.emplace(key, plan);
    return plan;
  }

 private:
  std::mutex mutex_;
  std::map<std::pair<std::vector<int>, int>, fftw_plan> plans_;
};

PlanCache& cache() {
  static PlanCache* instance = new PlanCache();  // never destroyed
  return *instance;
}

}  // namespace

void forward(std::complex<double>* data, const std::vector<int>& dims) {
  fftw_plan plan = cache().get(dims, FFTW_FORWARD);
  auto* raw = reinterpret_cast<fftw_complex*>(data);
  fftw_execute_dft(plan, raw, raw);
}

void inverse(std::complex<double>* data, const std::vector<int>& dims) {
  fftw_plan plan = cache().get(dims, FFTW_BACKWARD);
  auto* raw = reinterpret_cast<fftw_complex*>(data);
  fftw_execute_dft(plan, raw, raw);
  const double scale = 1.0 / static_cast<double>(total_size(dims));
  const std::size_t n = total_size(dims);
  for (std::size_t i = 0; i < n; ++i) data[i] *= scale;
}

double wavenumber(int index, int n, double length) {
  int k = (index <= n / 2) ? index : index - n;
  return 2.0 * kPi * static_cast<double>(k) / length;
}

double wavenumber_deriv(int index, int n, double length) {
  if (n % 2 == 0 && index == n / 2) return 0.0;
  return wavenumber(index, n, length);
}

}  // namespace ontosim::fft
