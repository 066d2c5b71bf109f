#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "menshov/blocks.hpp"
#include "menshov/circle.hpp"
#include "menshov/trigpoly.hpp"

namespace menshov {

// One measured inequality "measured relation bound".
struct Requirement {
  std::string name;
  std::string relation;  // "<", ">" or "=="
  double measured = 0.0;
  double bound = 0.0;
  bool pass = false;
};

struct ApproximantReport {
  TrigPoly poly;
  std::vector<Requirement> requirements;  // in construction order
  std::map<std::string, double> diagnostics;
  std::vector<bool> exceptional_set;  // empty unless the construction defines one

  bool all_pass() const;
  const Requirement* first_failure() const;
  // Throws ParameterError for an unknown name.
  const Requirement& requirement(std::string_view name) const;
  double diagnostic(std::string_view name) const;

  void add_requirement(std::string name, std::string relation, double measured, double bound);
  // Throws CertificateFailure for the first failing requirement.
  void enforce() const;
  nlohmann::json to_json() const;
};

// One '0'/'1' per grid point, one line.
void write_mask(std::ostream& out, const std::vector<bool>& mask);
std::vector<bool> read_mask(std::istream& in);

// Fraction of grid points where |values| > threshold (pointwise threshold).
double measure_above(const std::vector<Complex>& values, double threshold);
double measure_above(const std::vector<Complex>& values, const std::vector<double>& threshold);

// ---------------------------------------------------------------- Lemma 3

struct AnalyticUnitOptions {
  CircleGrid grid{kDefaultGridSize};  // minimum evaluation grid; grown to fit the degree
  std::int64_t start_degree = 16;
  std::int64_t max_degree = std::int64_t{1} << 16;
  // g sits at log(2/eps) below zero off an arc of measure arc_fraction * eps.
  double arc_fraction = 0.7;
  // erf transition width relative to the arc half-width.
  double transition = 0.15;
  std::size_t work_grid = std::size_t{1} << 16;  // grown to exceed 4 max_degree
  bool strict = true;                             // enforce() before returning
};

// Analytic R with l0(R - 1) < eps: R = 1 - F truncated, F = exp(g + i g~)
// with g of zero mean, so F(0) = 1 and the constant term cancels.
ApproximantReport analytic_unit(double eps, const AnalyticUnitOptions& options = {});

// ---------------------------------------------------------------- Lemma 2

enum class KornerLayout {
  // N_s drawn by a seeded search, all inside the grid; blocks may share frequencies.
  Interleaved,
  // N_s = K (2 deg F + deg G + 2)^s: consecutive spectra, only fits tiny K.
  Consecutive,
};

struct KornerParams {
  double eps = 0.25;
  double delta = 0.25;
  int K = 0;                    // 0: floor(1/delta) + 1, so max|Q^| <= 1/K < delta
  double approx_l1_tol = 0.0;   // > 0: degrees of F, G from the l1 tail bound
  std::int64_t f_degree = 0;    // 0: K - 1 (approx_l1_tol == 0)
  std::int64_t g_degree = 0;    // 0: round(8 / eps) - 1 (approx_l1_tol == 0)
  KornerLayout layout = KornerLayout::Interleaved;
  std::vector<std::int64_t> N;  // explicit N_1..N_K, overrides the layout
  std::uint64_t seed = 1;
  int trials = 4000;
  double sstar_budget = 64.0;   // gate on ||S**(Q)||_inf * eps
  CircleGrid grid{kDefaultGridSize};
  bool strict = true;
};

// Q = sum_s T^s(F) G_[N_s] with f = triangle(2 pi / K) and
// g = 1 - triangle_h / triangle_h^(0), h = pi eps / 4 (so m{g != 1} = eps/4).
ApproximantReport korner_polynomial(const KornerParams& params);

// Triangle partial sums used by the Korner constructions.
TrigPoly triangle_partial_sum(double width, std::int64_t degree);
// Smallest N with analytic tail bound sum_{|n|>N} triangle^(n) < tol.
std::int64_t triangle_degree_for_tail(double width, double tol);

// ---------------------------------------------------------------- Lemma 9

struct AnalyticKornerOptions {
  CircleGrid grid{std::size_t{1} << 15};
  // 0: the smallest K meeting both lower bounds. A smaller explicit K is
  // built anyway and reported as a failing requirement.
  int K = 0;
  std::vector<std::int64_t> N;  // explicit N_1..N_K; empty: K (2 deg F + deg G + 2)^s
  TrigPoly G;                   // analytic G to use instead of analytic_unit(eps/4)
  bool jensen_precheck = true;
  AnalyticUnitOptions unit;     // for G; its eps is forced to eps/4
  bool strict = true;
};

// Lower bound on the support size of an analytic Q with Q^(0) = 0,
// max|Q^| < eps and |Q - 1| < eps off a set of measure < eps. From Jensen:
// int log|1 - Q| >= 0 forces ||1 - Q||_2^2 >= eps^{1 - 2(1 - eps)/eps}.
double analytic_support_lower_bound(double eps);

// Analytic Q plus mask E (true on E); five measured requirements.
ApproximantReport analytic_korner(double eps, const AnalyticKornerOptions& options = {});

// ---------------------------------------------------------------- Lemmas 4, 12

// Fejer mean sigma_n f: coefficients (1 - |k|/n) f^(k), |k| < n.
TrigPoly fejer_mean(const SampledFunction& f, std::int64_t n);
// Doubles n until m{|f - sigma_n f| > delta} < eps; throws ConstructionError past cap.
TrigPoly fejer_approximant(const SampledFunction& f, double eps, double delta,
                           std::int64_t cap = std::int64_t{1} << 12);

// p(k) = a (2s)^{k+s}, checked.
std::int64_t block_frequency(int s, std::int64_t a, int k);

// P = (Q3)_[p(s+2)] * sum_k P1^(k) e^{ikt} (Q2)_[p(k)]. Needs deg of all three
// below s + 1, Q2 analytic, Q3^(0) = 0; Q3 analytic as well for D(s, a).
TrigPoly assemble_block_polynomial(const TrigPoly& P1, const TrigPoly& Q2, const TrigPoly& Q3,
                                   int s, std::int64_t a);

struct BlockApproximantOptions {
  std::int64_t fejer_cap = std::int64_t{1} << 12;
  double sstar_budget = 64.0;  // C in m{S**(P) > C (|f| + delta) / eps} < eps
  AnalyticUnitOptions unit;
  KornerParams korner;         // eps, delta, grid overwritten
  AnalyticKornerOptions analytic_korner;
  bool strict = true;
};

// spec P inside B(s, a). Throws BlockTooSmall once an ingredient degree
// reaches s; remaining ingredients are then not built.
ApproximantReport block_approximant(const SampledFunction& f, double eps, double delta, int s,
                                    std::int64_t a, const BlockApproximantOptions& options = {});
// spec P inside D(s, a).
ApproximantReport analytic_block_approximant(const SampledFunction& f, double eps, int s,
                                             std::int64_t a,
                                             const BlockApproximantOptions& options = {});

}  // namespace menshov
