#pragma once

#include <complex>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <vector>

namespace menshov {

using Complex = std::complex<double>;

inline constexpr std::size_t kDefaultGridSize = std::size_t{1} << 14;

// Uniform sample points t_j = -pi + 2 pi j / M, j = 0..M-1.
class CircleGrid {
 public:
  explicit CircleGrid(std::size_t size = kDefaultGridSize);

  std::size_t size() const { return size_; }
  double step() const;
  double point(std::size_t j) const;
  std::vector<double> points() const;

  // Index of the grid point nearest to t (t taken mod 2 pi).
  std::size_t nearest_index(double t) const;

  // Throws AliasingError unless size > 4 * degree.
  void require_degree(std::int64_t degree) const;

  // exp(i k t_j) from an exact root-of-unity table; k may be any int64.
  Complex unit(std::int64_t k, std::size_t j) const;
  // acc[j] += c exp(i k t_j) for every j.
  void accumulate(std::int64_t k, Complex c, std::vector<Complex>& acc) const;

  bool operator==(const CircleGrid& other) const { return size_ == other.size_; }

 private:
  std::size_t size_;
  std::vector<Complex> roots_;  // exp(2 pi i m / M)
};

// Complex samples with an optional +-infinity marker per point.
// extended[j] is 0 for finite points, +1 / -1 for +inf / -inf.
struct SampledFunction {
  CircleGrid grid;
  std::vector<Complex> values;
  std::vector<std::int8_t> extended;

  SampledFunction() = default;
  explicit SampledFunction(const CircleGrid& g);
  SampledFunction(const CircleGrid& g, std::vector<Complex> v);

  std::size_t size() const { return values.size(); }
  bool has_extended() const;
  bool is_extended(std::size_t j) const { return !extended.empty() && extended[j] != 0; }

  double sup_abs() const;

  static SampledFunction from_real(const CircleGrid& g, const std::function<double(double)>& f);
  static SampledFunction from_complex(const CircleGrid& g, const std::function<Complex(double)>& f);
};

SampledFunction operator+(const SampledFunction& a, const SampledFunction& b);
SampledFunction operator-(const SampledFunction& a, const SampledFunction& b);
SampledFunction operator*(const SampledFunction& a, const SampledFunction& b);
SampledFunction operator*(Complex c, const SampledFunction& a);
SampledFunction abs(const SampledFunction& a);

struct MeasureEstimate {
  double fraction = 0.0;
  std::size_t count = 0;
  std::size_t grid_size = 0;
};

struct SamplePoint {
  std::size_t index;
  double t;
  Complex value;
  int extended_sign;
};

using PointPredicate = std::function<bool(const SamplePoint&)>;

MeasureEstimate estimate_measure(const SampledFunction& f, const PointPredicate& predicate);
MeasureEstimate estimate_measure(const std::vector<bool>& mask);

// inf{eps > 0 : m{|f| > eps} < eps}, by bisection.
double l0_norm(const SampledFunction& f);

// Triangle of half-width eps: 1 - |t|/eps on |t| < eps, zero elsewhere.
SampledFunction triangle_function(double eps, const CircleGrid& grid = CircleGrid());
double triangle_value(double eps, double t);
// Exact Fourier coefficient under normalized measure; exactly 0 where
// n eps / 2 pi is a nonzero integer.
double triangle_coeff(double eps, std::int64_t n);
// Crude analytic bound on sum_{|n| > N} triangle_coeff(eps, n).
double triangle_tail_bound(double eps, std::int64_t N);

struct TailInterval {
  double lo;
  double hi;
};
// Two-sided enclosure of sum_{|n| > N} triangle_coeff(eps, n), N >= 1.
TailInterval triangle_tail_interval(double eps, std::int64_t N);

void write_csv(std::ostream& out, const SampledFunction& f);
SampledFunction read_sampled_csv(std::istream& in);

}  // namespace menshov
