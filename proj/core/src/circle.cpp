#include "menshov/circle.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <numbers>
#include <ostream>
#include <sstream>
#include <string>

#include "menshov/errors.hpp"
#include "csv_util.hpp"

namespace menshov {

namespace {
constexpr double kPi = std::numbers::pi;
}

CircleGrid::CircleGrid(std::size_t size) : size_(size) {
  if (size < 8 || size % 2 != 0) {
    throw ParameterError("grid size must be even and >= 8, got " + std::to_string(size));
  }
  roots_.resize(size);
  for (std::size_t m = 0; m < size; ++m) {
    const double angle = 2.0 * kPi * static_cast<double>(m) / static_cast<double>(size);
    roots_[m] = Complex(std::cos(angle), std::sin(angle));
  }
}

double CircleGrid::step() const { return 2.0 * kPi / static_cast<double>(size_); }

double CircleGrid::point(std::size_t j) const {
  return -kPi + 2.0 * kPi * static_cast<double>(j) / static_cast<double>(size_);
}

std::vector<double> CircleGrid::points() const {
  std::vector<double> out(size_);
  for (std::size_t j = 0; j < size_; ++j) out[j] = point(j);
  return out;
}

std::size_t CircleGrid::nearest_index(double t) const {
  const double u = (t + kPi) / (2.0 * kPi);
  const double frac = u - std::floor(u);
  auto j = static_cast<std::int64_t>(std::llround(frac * static_cast<double>(size_)));
  return static_cast<std::size_t>(j % static_cast<std::int64_t>(size_));
}

void CircleGrid::require_degree(std::int64_t degree) const {
  if (degree < 0) return;
  if (static_cast<long double>(size_) <= 4.0L * static_cast<long double>(degree)) {
    throw AliasingError("grid size " + std::to_string(size_) + " must exceed 4 * degree = 4 * " +
                        std::to_string(degree));
  }
}

Complex CircleGrid::unit(std::int64_t k, std::size_t j) const {
  // exp(i k (-pi + 2 pi j / M)) = (-1)^k exp(2 pi i k j / M)
  const auto M = static_cast<std::int64_t>(size_);
  const std::int64_t km = ((k % M) + M) % M;
  const auto idx = static_cast<std::size_t>((static_cast<std::uint64_t>(km) * j) %
                                            static_cast<std::uint64_t>(M));
  const Complex r = roots_[idx];
  return (k % 2 == 0) ? r : -r;
}

void CircleGrid::accumulate(std::int64_t k, Complex c, std::vector<Complex>& acc) const {
  const auto M = static_cast<std::int64_t>(size_);
  const auto step = static_cast<std::size_t>(((k % M) + M) % M);
  const Complex cc = (k % 2 == 0) ? c : -c;
  std::size_t idx = 0;
  // Spelled out: std::complex operator* routes through the NaN-recovering helper.
  const double cr = cc.real(), ci = cc.imag();
  for (std::size_t j = 0; j < size_; ++j) {
    const double rr = roots_[idx].real(), ri = roots_[idx].imag();
    acc[j] += Complex(cr * rr - ci * ri, cr * ri + ci * rr);
    idx += step;
    if (idx >= size_) idx -= size_;
  }
}

SampledFunction::SampledFunction(const CircleGrid& g) : grid(g), values(g.size(), Complex{}) {}

SampledFunction::SampledFunction(const CircleGrid& g, std::vector<Complex> v)
    : grid(g), values(std::move(v)) {
  if (values.size() != grid.size()) {
    throw ParameterError("sample count " + std::to_string(values.size()) +
                         " does not match grid size " + std::to_string(grid.size()));
  }
}

bool SampledFunction::has_extended() const {
  return std::any_of(extended.begin(), extended.end(), [](std::int8_t e) { return e != 0; });
}

double SampledFunction::sup_abs() const {
  double m = 0.0;
  for (std::size_t j = 0; j < values.size(); ++j) {
    if (!is_extended(j)) m = std::max(m, std::abs(values[j]));
  }
  return m;
}

SampledFunction SampledFunction::from_real(const CircleGrid& g,
                                           const std::function<double(double)>& f) {
  SampledFunction out(g);
  for (std::size_t j = 0; j < g.size(); ++j) out.values[j] = f(g.point(j));
  return out;
}

SampledFunction SampledFunction::from_complex(const CircleGrid& g,
                                              const std::function<Complex(double)>& f) {
  SampledFunction out(g);
  for (std::size_t j = 0; j < g.size(); ++j) out.values[j] = f(g.point(j));
  return out;
}

namespace {

void require_same_grid(const SampledFunction& a, const SampledFunction& b) {
  if (!(a.grid == b.grid)) throw ParameterError("sampled functions live on different grids");
}

std::vector<std::int8_t> merge_extended(const SampledFunction& a, const SampledFunction& b) {
  if (!a.has_extended() && !b.has_extended()) return {};
  std::vector<std::int8_t> out(a.size(), 0);
  for (std::size_t j = 0; j < out.size(); ++j) {
    const int ea = a.is_extended(j) ? a.extended[j] : 0;
    const int eb = b.is_extended(j) ? b.extended[j] : 0;
    out[j] = static_cast<std::int8_t>(ea != 0 ? ea : eb);
  }
  return out;
}

template <typename Op>
SampledFunction combine(const SampledFunction& a, const SampledFunction& b, Op op) {
  require_same_grid(a, b);
  SampledFunction out(a.grid);
  for (std::size_t j = 0; j < a.size(); ++j) out.values[j] = op(a.values[j], b.values[j]);
  out.extended = merge_extended(a, b);
  return out;
}

}  // namespace

SampledFunction operator+(const SampledFunction& a, const SampledFunction& b) {
  return combine(a, b, std::plus<Complex>());
}

SampledFunction operator-(const SampledFunction& a, const SampledFunction& b) {
  return combine(a, b, std::minus<Complex>());
}

SampledFunction operator*(const SampledFunction& a, const SampledFunction& b) {
  return combine(a, b, std::multiplies<Complex>());
}

SampledFunction operator*(Complex c, const SampledFunction& a) {
  SampledFunction out = a;
  for (auto& v : out.values) v *= c;
  return out;
}

SampledFunction abs(const SampledFunction& a) {
  SampledFunction out = a;
  for (auto& v : out.values) v = std::abs(v);
  return out;
}

MeasureEstimate estimate_measure(const SampledFunction& f, const PointPredicate& predicate) {
  MeasureEstimate est;
  est.grid_size = f.size();
  for (std::size_t j = 0; j < f.size(); ++j) {
    const int sign = f.is_extended(j) ? f.extended[j] : 0;
    if (predicate(SamplePoint{j, f.grid.point(j), f.values[j], sign})) ++est.count;
  }
  est.fraction = est.grid_size == 0 ? 0.0
                                    : static_cast<double>(est.count) /
                                          static_cast<double>(est.grid_size);
  return est;
}

MeasureEstimate estimate_measure(const std::vector<bool>& mask) {
  MeasureEstimate est;
  est.grid_size = mask.size();
  est.count = static_cast<std::size_t>(std::count(mask.begin(), mask.end(), true));
  est.fraction = mask.empty() ? 0.0
                              : static_cast<double>(est.count) / static_cast<double>(mask.size());
  return est;
}

double l0_norm(const SampledFunction& f) {
  if (f.has_extended()) throw ParameterError("L0 undefined for infinite values");
  std::vector<double> mags(f.size());
  for (std::size_t j = 0; j < f.size(); ++j) mags[j] = std::abs(f.values[j]);
  const double n = static_cast<double>(mags.size());
  auto holds = [&](double eps) {
    std::size_t c = 0;
    for (double m : mags) c += (m > eps) ? 1 : 0;
    return static_cast<double>(c) / n < eps;
  };
  // The condition holds for every eps > 1, so the infimum is at most 1.
  double hi = 1.0;
  if (!holds(hi)) return 1.0;
  const double sup = mags.empty() ? 0.0 : *std::max_element(mags.begin(), mags.end());
  if (sup == 0.0) return 0.0;
  double lo = 0.0;
  // The answer lies in [0, 1] whatever the size of f.
  const double tol = 1e-9;
  while (hi - lo > tol) {
    const double mid = 0.5 * (lo + hi);
    if (holds(mid)) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return hi;
}

double triangle_value(double eps, double t) {
  // reduce t to [-pi, pi)
  double u = std::fmod(t + kPi, 2.0 * kPi);
  if (u < 0) u += 2.0 * kPi;
  u -= kPi;
  const double a = std::abs(u);
  return a < eps ? 1.0 - a / eps : 0.0;
}

SampledFunction triangle_function(double eps, const CircleGrid& grid) {
  if (!(eps > 0.0 && eps <= kPi)) throw ParameterError("triangle width must lie in (0, pi]");
  return SampledFunction::from_real(grid, [eps](double t) { return triangle_value(eps, t); });
}

double triangle_coeff(double eps, std::int64_t n) {
  if (!(eps > 0.0 && eps <= kPi)) throw ParameterError("triangle width must lie in (0, pi]");
  const double base = eps / (2.0 * kPi);
  if (n == 0) return base;
  const double cycles = static_cast<double>(n) * eps / (2.0 * kPi);
  if (std::abs(cycles - std::round(cycles)) < 1e-12 * std::max(1.0, std::abs(cycles))) return 0.0;
  const double x = static_cast<double>(n) * eps / 2.0;
  const double s = std::sin(x) / x;
  return base * s * s;
}

double triangle_tail_bound(double eps, std::int64_t N) {
  // sum_{|n| > N} (eps/2pi) (2/(n eps))^2 <= (eps/2pi) (4/eps^2) * 2/N
  if (N <= 0) return 1.0;
  return (eps / (2.0 * kPi)) * (4.0 / (eps * eps)) * 2.0 / static_cast<double>(N);
}

TailInterval triangle_tail_interval(double eps, std::int64_t N) {
  if (N < 1) throw ParameterError("tail enclosure needs N >= 1");
  // sin^2(x) = (1 - cos 2x) / 2 splits the tail into (2/(pi eps)) (Z - C) with
  // Z = sum_{n>N} 1/n^2 (Euler-Maclaurin enclosure) and
  // |C| = |sum_{n>N} cos(n eps)/n^2| <= 1 / (sin(eps/2) (N+1)^2) (summation by parts).
  const double n = static_cast<double>(N);
  const double z_lo = 1.0 / n - 1.0 / (2.0 * n * n);
  const double z_hi = z_lo + 1.0 / (6.0 * n * n * n);
  const double c = 1.0 / (std::sin(eps / 2.0) * (n + 1.0) * (n + 1.0));
  const double scale = 2.0 / (kPi * eps);
  return {scale * (z_lo - c), scale * (z_hi + c)};
}

void write_csv(std::ostream& out, const SampledFunction& f) {
  out << "t,re,im,extended_sign\n";
  for (std::size_t j = 0; j < f.size(); ++j) {
    const int sign = f.is_extended(j) ? f.extended[j] : 0;
    out << csv::fmt(f.grid.point(j)) << ',' << csv::fmt(f.values[j].real()) << ','
        << csv::fmt(f.values[j].imag()) << ',' << sign << '\n';
  }
}

SampledFunction read_sampled_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw ParameterError("empty sampled-function CSV");
  if (csv::trim(line) != "t,re,im,extended_sign") {
    throw ParameterError("sampled-function CSV header must be t,re,im,extended_sign");
  }
  std::vector<Complex> values;
  std::vector<std::int8_t> ext;
  while (std::getline(in, line)) {
    if (csv::trim(line).empty()) continue;
    const auto cells = csv::split(line);
    if (cells.size() != 4) throw ParameterError("sampled-function CSV row needs 4 columns: " + line);
    values.emplace_back(std::stod(cells[1]), std::stod(cells[2]));
    const int sign = std::stoi(cells[3]);
    if (sign < -1 || sign > 1) throw ParameterError("extended_sign must be -1, 0 or 1");
    ext.push_back(static_cast<std::int8_t>(sign));
  }
  const CircleGrid grid(values.size());
  SampledFunction f(grid, std::move(values));
  if (std::any_of(ext.begin(), ext.end(), [](std::int8_t e) { return e != 0; })) {
    f.extended = std::move(ext);
  }
  return f;
}

}  // namespace menshov
