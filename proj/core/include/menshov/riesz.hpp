#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "menshov/circle.hpp"

namespace menshov {

// Arbitrary-size natural number, little-endian 64-bit limbs, no leading zero
// limb. Lacunary frequencies pass 2^64 after a few dozen terms.
class Natural {
 public:
  Natural() = default;
  Natural(std::uint64_t v);  // NOLINT: implicit on purpose
  static Natural pow2(std::size_t e);

  const std::vector<std::uint64_t>& limbs() const { return limbs_; }
  bool is_zero() const { return limbs_.empty(); }
  std::size_t bit_length() const;
  std::size_t trailing_zeros() const;  // 0 for zero
  bool fits_u64() const { return limbs_.size() <= 1; }
  std::uint64_t to_u64() const;        // throws OverflowError
  double log2() const;                 // -inf for zero
  std::string to_string() const;       // decimal

  Natural& operator*=(const Natural& o);
  Natural& operator<<=(std::size_t bits);
  Natural& operator>>=(std::size_t bits);
  Natural& operator-=(const Natural& o);  // needs *this >= o

  friend Natural operator*(Natural a, const Natural& b) { return a *= b; }
  friend bool operator==(const Natural&, const Natural&) = default;
  friend std::strong_ordering operator<=>(const Natural& a, const Natural& b);

 private:
  void trim();
  std::vector<std::uint64_t> limbs_;
};

Natural gcd(Natural a, Natural b);

// Growth rule L_k = base * ratio^k, nu_1 = first, nu_{k+1} = nu_k L_k.
struct RieszGrowth {
  std::uint64_t first = 8;
  std::uint64_t base = 4;
  std::uint64_t ratio = 2;
};

// nu_1 < nu_2 < ...; ratio_floor[k] bounds nu_{k+1} / nu_k from below
// (ratio_floor[0] is unused and 1). Indices are zero-based here.
struct RieszSchedule {
  std::vector<Natural> frequencies;
  std::vector<Natural> ratio_floor;
  // nu_{k+1} / nu_k when it is an integer, else zero; drives exact phases.
  std::vector<Natural> exact_ratio;

  std::size_t size() const { return frequencies.size(); }
  // Throws InvariantViolation unless increasing with nu_{k+1} >= nu_k L_k.
  void validate() const;
  // nu_k as int64 when it fits (1-based k).
  std::optional<std::int64_t> frequency_i64(std::size_t k) const;
  nlohmann::json to_json() const;  // decimal strings
};

RieszSchedule make_schedule(std::size_t n, const RieszGrowth& growth = {});
// Explicit frequencies, floors set to floor(nu_{k+1} / nu_k) >= 1 when both fit u64.
RieszSchedule schedule_from_frequencies(const std::vector<std::uint64_t>& nu);

// Where the products are observed. Grid: the uniform circle grid, exact
// phases, needs M > 2 nu_max. MonteCarlo: seeded uniform dyadic points
// x = X / 2^B with B past log2 nu_max + 64, so frac(nu_k x) is exact and
// its leading 64 bits are uniform for every k.
struct RieszSampling {
  enum class Mode { Grid, MonteCarlo };
  Mode mode = Mode::MonteCarlo;
  CircleGrid grid{kDefaultGridSize};
  std::size_t points = 20000;
  std::uint64_t seed = 1;
};

// Signed reduced phases s = nu_k t / 2 pi mod 1 in [-1/2, 1/2), row-major
// points x n.
struct PhaseTable {
  std::size_t points = 0;
  std::size_t n = 0;
  std::vector<double> t;       // sample location in [-pi, pi)
  std::vector<double> phase;   // phase[p * n + (k - 1)]
  double at(std::size_t p, std::size_t k) const { return phase[p * n + (k - 1)]; }
};

PhaseTable riesz_phases(const RieszSchedule& sched, std::size_t n_max,
                        const RieszSampling& sampling);

// 1 - cos(2 pi s) and |1 - e^{2 pi i s}| without cancellation.
double one_minus_cos(double s);
double log_one_minus_cos(double s);

struct CosineProductOptions {
  std::size_t n_max = 200;
  std::size_t window_lo = 20;  // bounds are judged for n in [window_lo, window_hi]
  std::size_t window_hi = 60;
  double c = 0.9;
  double mask_below = 1e-30;   // points with some 1 - cos nu_k t below this are masked
  bool keep_trace = false;     // retain log products for CSV export
};

struct CosineProductReport {
  std::size_t points = 0;
  std::size_t masked = 0;
  std::size_t n_max = 0;
  std::vector<double> t;
  std::vector<bool> mask;  // true: excluded
  // First n from which 3^-n < P_n holds through n_max (n_max + 1: never).
  std::vector<std::size_t> lower_from;
  std::vector<std::size_t> upper_from;  // same for P_n < c^n
  std::vector<double> mean_log;         // (1/n_max) sum log(1 - cos nu_k t)
  std::vector<double> log_trace;        // points x n_max when kept
  double fraction_lower = 0.0;  // unmasked points with the lower bound on the whole window
  double fraction_upper = 0.0;
  double fraction_both = 0.0;
  double empirical_A = 0.0;     // mean of mean_log over unmasked points
  double c = 0.9;
  std::size_t window_lo = 0, window_hi = 0;

  nlohmann::json summary_json() const;
};

CosineProductReport cosine_product_bounds(const RieszSchedule& sched,
                                          const RieszSampling& sampling,
                                          const CosineProductOptions& options = {});
CosineProductReport cosine_product_bounds(const PhaseTable& phases,
                                          const CosineProductOptions& options);

// Columns t, n, product, bound_lo, bound_hi, pass; needs keep_trace.
void write_cosine_trace_csv(std::ostream& out, const CosineProductReport& report);

// F = log(1 - cos t) + log 2 = -2 sum cos(nt)/n, so for nu, mu with
// nu / g = a, mu / g = b (g = gcd) the integral of F(nu t) F(mu t) is
// pi^2 / (3 a b). Entries are exact; the certificate is
// |entry| < 2^{-(k + k')} for k != k' (1-based).
struct AlmostOrthogonality {
  std::size_t n = 0;
  std::vector<double> log2_entry;  // n x n, log2 |integral|
  std::vector<bool> pass;          // n x n, diagonal true
  bool all_pass = true;
  std::size_t first_fail_k = 0, first_fail_kp = 0;

  double entry(std::size_t k, std::size_t kp) const;
  bool pair_passes(std::size_t k, std::size_t kp) const { return pass[(k - 1) * n + kp - 1]; }
  nlohmann::json to_json() const;
};

AlmostOrthogonality almost_orthogonality(const RieszSchedule& sched, std::size_t n = 0);
// Sampled estimate of the same integral with its standard error.
struct SampledInnerProduct {
  double value = 0.0;
  double std_error = 0.0;
  std::size_t used = 0;
};
SampledInnerProduct sampled_inner_product(const PhaseTable& phases, std::size_t k,
                                          std::size_t kp, double mask_below = 1e-30);

struct AnalyticProductOptions {
  std::size_t n_max = 40;
  std::size_t window_lo = 20;  // (3/4)^n bound judged on [window_lo, n_max]
  double threshold = 1e-2;     // liminf proxy: min_n |q_n| < threshold
  double lower_base = 0.75;
  double mask_below = 1e-30;
};

struct AnalyticProductReport {
  std::size_t points = 0;
  std::size_t masked = 0;
  std::size_t n_max = 0;
  std::vector<double> t;
  std::vector<bool> mask;
  std::vector<double> min_log_abs;  // min_n log|q_n|
  std::vector<std::size_t> K1;      // first n from which (3/4)^n < |q_n| through n_max
  double fraction_liminf = 0.0;
  double fraction_lower = 0.0;
  // max over points and n of |log prod(1 - cos) - (2 log|q_n| - n log 2)|,
  // with q_n multiplied out as complex numbers.
  double cross_identity_error = 0.0;
  double threshold = 0.0;
  double lower_base = 0.0;

  nlohmann::json summary_json() const;
};

AnalyticProductReport analytic_product_diagnostics(const RieszSchedule& sched,
                                                   const RieszSampling& sampling,
                                                   const AnalyticProductOptions& options = {});
AnalyticProductReport analytic_product_diagnostics(const PhaseTable& phases,
                                                   const AnalyticProductOptions& options);

// phi(t) = log|1 - e^{it}| / sqrt(pi^2 / 12): zero mean, unit L2 norm.
double clt_phi(double s);

struct CltReport {
  std::size_t N = 0;
  std::size_t used = 0;
  double ks_distance = 0.0;
  double mean = 0.0;
  double stddev = 0.0;
  nlohmann::json to_json() const;
};

CltReport clt_check(const RieszSchedule& sched, const RieszSampling& sampling, std::size_t N);
CltReport clt_check(const PhaseTable& phases, std::size_t N, double mask_below = 1e-30);

// sup_x |F_n(x) - Phi(x)| for the empirical CDF of the sample.
double ks_distance_normal(std::vector<double> sample);

}  // namespace menshov
