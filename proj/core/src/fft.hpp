#pragma once

#include <complex>
#include <cstdint>
#include <utility>
#include <vector>

namespace menshov::fft {

using Complex = std::complex<double>;

// Values sum_k c_k exp(i k t_j) at t_j = -pi + 2 pi j / M; all |k| < M / 2.
std::vector<Complex> synthesize(const std::vector<std::pair<std::int64_t, Complex>>& coeffs,
                                std::size_t M);

// Grid Fourier coefficients c_k = mean_j v_j exp(-i k t_j), returned for
// k = -M/2 .. M/2 - 1 at index k + M/2.
std::vector<Complex> analyze(const std::vector<Complex>& values);

}  // namespace menshov::fft
