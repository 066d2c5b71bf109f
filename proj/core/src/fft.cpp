#include "fft.hpp"

#include <fftw3.h>

#include <mutex>

namespace menshov::fft {

namespace {

std::mutex planner_mutex;

void run(std::vector<Complex>& data, int sign) {
  const int n = static_cast<int>(data.size());
  auto* buf = reinterpret_cast<fftw_complex*>(data.data());
  fftw_plan plan;
  {
    std::lock_guard<std::mutex> lock(planner_mutex);
    plan = fftw_plan_dft_1d(n, buf, buf, sign, FFTW_ESTIMATE);
  }
  fftw_execute(plan);
  std::lock_guard<std::mutex> lock(planner_mutex);
  fftw_destroy_plan(plan);
}

}  // namespace

std::vector<Complex> synthesize(const std::vector<std::pair<std::int64_t, Complex>>& coeffs,
                                std::size_t M) {
  std::vector<Complex> data(M, Complex{});
  const auto m = static_cast<std::int64_t>(M);
  for (const auto& [k, c] : coeffs) {
    const auto idx = static_cast<std::size_t>(((k % m) + m) % m);
    data[idx] += (k % 2 == 0) ? c : -c;
  }
  run(data, FFTW_BACKWARD);
  return data;
}

std::vector<Complex> analyze(const std::vector<Complex>& values) {
  std::vector<Complex> data = values;
  const std::size_t M = data.size();
  run(data, FFTW_FORWARD);
  std::vector<Complex> out(M);
  const auto m = static_cast<std::int64_t>(M);
  const double inv = 1.0 / static_cast<double>(M);
  for (std::int64_t k = -m / 2; k < m / 2; ++k) {
    const auto idx = static_cast<std::size_t>(((k % m) + m) % m);
    const Complex c = data[idx] * inv;
    out[static_cast<std::size_t>(k + m / 2)] = (k % 2 == 0) ? c : -c;
  }
  return out;
}

}  // namespace menshov::fft
