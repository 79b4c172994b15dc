#pragma once

#include <complex>
#include <vector>

namespace ontosim::fft {

/// In-place complex DFT over a row-major multi-dimensional array
/// (dims[0] slowest).  Unscaled, negative-exponent convention.
void forward(std::complex<double>* data, const std::vector<int>& dims);

/// In-place inverse DFT, scaled by 1/prod(dims) so inverse(forward(x)) == x
/// up to rounding.
void inverse(std::complex<double>* data, const std::vector<int>& dims);

/// Angular wavenumber 2*pi*k/length for mode `index` of an n-point axis,
/// with k folded into [-n/2, n/2].
double wavenumber(int index, int n, double length);

/// Wavenumber to use inside odd-order derivatives: identical to
/// wavenumber() except the unpaired Nyquist mode (even n) is dropped, which
/// keeps derivatives of real fields real.
double wavenumber_deriv(int index, int n, double length);

}  // namespace ontosim::fft
