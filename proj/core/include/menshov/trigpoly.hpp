#pragma once

#include <complex>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <iosfwd>
#include <map>
#include <utility>
#include <vector>

#include "menshov/circle.hpp"

namespace menshov {

// Sparse trigonometric polynomial sum_k c_k e^{ikt}. Invariant: no stored
// zero coefficient, so the key set is the spectrum.
class TrigPoly {
 public:
  using Map = std::map<std::int64_t, Complex>;

  TrigPoly() = default;
  TrigPoly(std::initializer_list<std::pair<const std::int64_t, Complex>> init);
  explicit TrigPoly(Map coeffs);

  Complex coeff(std::int64_t k) const;
  void set(std::int64_t k, Complex c);
  void add(std::int64_t k, Complex c);

  const Map& coeffs() const { return coeffs_; }
  bool empty() const { return coeffs_.empty(); }
  std::size_t support_size() const { return coeffs_.size(); }
  // max |k| over the support; 0 for the zero polynomial.
  std::int64_t degree() const;
  std::int64_t min_frequency() const;
  std::int64_t max_frequency() const;
  std::vector<std::int64_t> spectrum() const;
  bool is_analytic() const;  // spectrum inside the positive integers

  // Drop coefficients with |c| <= tol.
  TrigPoly pruned(double tol) const;

  TrigPoly& operator+=(const TrigPoly& other);
  TrigPoly& operator-=(const TrigPoly& other);
  TrigPoly& operator*=(Complex c);

  bool operator==(const TrigPoly& other) const { return coeffs_ == other.coeffs_; }

 private:
  Map coeffs_;
};

TrigPoly operator+(TrigPoly a, const TrigPoly& b);
TrigPoly operator-(TrigPoly a, const TrigPoly& b);
TrigPoly operator*(Complex c, TrigPoly a);

// Largest coefficient-wise difference; the tolerance currency for identities.
double max_coeff_diff(const TrigPoly& a, const TrigPoly& b);

SampledFunction evaluate(const TrigPoly& P, const CircleGrid& grid);
Complex evaluate_at(const TrigPoly& P, double t);
// Same values without the degree guard. Samples stay exact for any degree,
// but grid measures of sets that oscillate faster than the grid are only
// sample estimates; the guarded forms are the certificate-grade ones.
SampledFunction sample(const TrigPoly& P, const CircleGrid& grid);

// Coefficients restricted to [-n, n].
TrigPoly partial_sum(const TrigPoly& P, std::int64_t n);
// Coefficients restricted to [m, n]; m > n is an error.
TrigPoly partial_sum_rect(const TrigPoly& P, std::int64_t m, std::int64_t n);

// sup_n |S_n P| and sup_{m<=n} |S_{m,n} P| per grid point.
SampledFunction s_star(const TrigPoly& P, const CircleGrid& grid);
SampledFunction s_star_star(const TrigPoly& P, const CircleGrid& grid);
// Visits S_n P on the grid for every n in {|k| : k in spec P}, increasing;
// S_n is constant between consecutive visited n.
void for_each_partial_sum(
    const TrigPoly& P, const CircleGrid& grid,
    const std::function<void(std::int64_t n, const std::vector<Complex>& values)>& visit);

void for_each_sampled_partial_sum(
    const TrigPoly& P, const CircleGrid& grid,
    const std::function<void(std::int64_t n, const std::vector<Complex>& values)>& visit);
SampledFunction sample_s_star_star(const TrigPoly& P, const CircleGrid& grid);

// Frequency k -> k r.
TrigPoly contract(const TrigPoly& P, std::int64_t r);
// c_k -> c_k e^{ik shift}.
TrigPoly translate(const TrigPoly& P, double shift);
TrigPoly multiply(const TrigPoly& P, const TrigPoly& Q);
// Q_[r] * P; needs r > 2 deg P and Q(0) = 0.
TrigPoly special_product(const TrigPoly& P, const TrigPoly& Q, std::int64_t r);

// Block-decomposition right-hand side for the one-sided partial sum of
// H = Q_[r] P: for n >= 0 it equals sum_{j=0}^{n} H(j) e^{ijt}, for n < 0 it
// equals sum_{j=n}^{0} H(j) e^{ijt}.
TrigPoly special_product_partial(const TrigPoly& P, const TrigPoly& Q, std::int64_t r,
                                 std::int64_t n);
// One-sided partial sum of any polynomial, matching the convention above.
TrigPoly one_sided_partial_sum(const TrigPoly& P, std::int64_t n);

struct CoeffNorms {
  double linf = 0.0;
  double l1 = 0.0;
  std::vector<std::pair<double, double>> lp;  // (p, norm)
  double at(double p) const;
};
CoeffNorms coeff_norms(const TrigPoly& P, const std::vector<double>& ps = {});

// Every |k| in spec P strictly exceeds every |l| in spec Q.
bool follows(const TrigPoly& P, const TrigPoly& Q);

void write_csv(std::ostream& out, const TrigPoly& P);
TrigPoly read_trigpoly_csv(std::istream& in);

}  // namespace menshov
