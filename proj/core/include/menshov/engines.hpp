#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "menshov/approximants.hpp"
#include "menshov/blocks.hpp"
#include "menshov/circle.hpp"
#include "menshov/riesz.hpp"
#include "menshov/trigpoly.hpp"

namespace menshov {

// ---------------------------------------------------------------- records

struct ErrorSchedule {
  std::vector<double> eps;
  std::vector<double> delta;

  // eps_n = 2^-n, delta_n = 2^-2n
  static ErrorSchedule dyadic(int N);
  // eps_n = n^-2, delta_n = 4^-n
  static ErrorSchedule squares(int N);
  bool valid() const;  // positive and strictly decreasing
};

struct RunStage {
  std::int64_t n = 0;
  TrigPoly poly;                     // P_n as it enters the series
  TrigPoly inner;                    // block polynomial before any modulation (P^1_n, P'_k)
  SampledFunction residual_before;   // F_n / T_k
  std::optional<BlockRecord> block;  // block used, if any
  std::vector<Requirement> certificates;
  std::map<std::string, double> diagnostics;
  std::vector<bool> mask;            // E_n, or the still-active set of a stop-time stage

  bool all_pass() const;
  void add(std::string name, std::string relation, double measured, double bound);
};

struct RepresentationRun {
  std::string engine;
  nlohmann::json target_info;  // name and parameters, free-form
  SampledFunction target;
  SpectrumSet spectrum;
  ErrorSchedule schedule;  // per-stage (eps, delta) actually used
  std::vector<RunStage> stages;
  std::vector<Requirement> summary;  // run-level certificates
  std::map<std::string, double> diagnostics;
  bool exhausted = false;  // stopped before the requested stage count
  std::string stop_reason;

  bool all_pass() const;  // every stage and summary certificate, and not exhausted
  void add(std::string name, std::string relation, double measured, double bound);
  // Sum of all stage polynomials.
  TrigPoly merged() const;
  // Merged coefficients in stage order, increasing |k| (then k) within a stage.
  std::vector<std::pair<std::int64_t, Complex>> coefficient_stream() const;
  SampledFunction partial_sum_values() const;  // sum_k P_k on the target grid

  nlohmann::json to_json() const;
  // manifest.json, stage_<n>.csv, stream.csv (order_index, k, re, im).
  void write(const std::string& directory) const;
};

void write_stream_csv(std::ostream& out, const std::vector<std::pair<std::int64_t, Complex>>& s);

// ---------------------------------------------------------------- stage approximants

struct StageRequest {
  const SampledFunction* target = nullptr;
  double eps = 0.0;
  double delta = 0.0;      // unused by the analytic engines
  int s = 0;               // inner block B(s, a) or D(s, a)
  std::int64_t a = 0;
  bool analytic = false;   // D(s, a) instead of B(s, a)
  std::int64_t stage = 0;
};

// Returns a polynomial with spectrum in the inner block; may throw
// BlockTooSmall (the engine then tries the next block with larger s).
using StageApproximant = std::function<TrigPoly(const StageRequest&)>;

// The block constructions of the approximants module.
StageApproximant block_stage_approximant(const BlockApproximantOptions& options = {});
// Orthogonal projection onto the block exponentials through grid inner
// products; throws AliasingError unless the block is injective mod M. No
// approximation claim: it reproduces exactly the targets that already live
// on the block, which is what the engine tests need. Coefficients below
// 1e-12 max(sup|f|, 1) are dropped.
StageApproximant projection_stage_approximant();

struct AnalyticQ {
  TrigPoly Q;            // analytic, Q^(0) = 0
  std::vector<bool> E;   // grid mask of the good set
};
using AnalyticQProvider = std::function<AnalyticQ(double eps, const CircleGrid& grid)>;
AnalyticQProvider analytic_korner_provider(const AnalyticKornerOptions& options = {});

// ---------------------------------------------------------------- engines

struct AeEngineOptions {
  StageApproximant approximant;  // empty: block_stage_approximant()
  double sstar_budget = 64.0;    // C in m{S*(P_n) > C (|F_n| + delta_n) / eps_n} < eps_n
};

// Blocks of kind "B" from the manifest, first qualifying one per stage.
RepresentationRun run_ae_engine(const SampledFunction& f, const SpectrumBuild& spectrum, int N,
                                const AeEngineOptions& options = {});

struct SquaresEngineOptions {
  StageApproximant approximant;
  RieszGrowth growth;   // nu_n > nu_{n-1} L_{n-1}, L_k = base ratio^k
  double c1 = 0.9;      // gate on the median |F_N|
};

// Blocks of kind "B_nu"; P_n = cos(nu_n t) P^1_n.
RepresentationRun run_squares_engine(const SampledFunction& f, const SpectrumBuild& spectrum,
                                     int N, const SquaresEngineOptions& options = {});

struct AsymptoticEngineOptions {
  AnalyticQProvider provider;     // empty: analytic_korner_provider()
  std::int64_t fejer_cap = std::int64_t{1} << 12;
  double l2_budget = 64.0;        // C in sup_k ||S_k P_n||_L2(W) < C 2^-n
  double decay_factor = 1.5;      // summary gate across stages 2..N
  // Sweep S_k P_n directly while support x M stays below this; past it the
  // block-decomposition upper bound is reported instead.
  double exact_sweep_limit = 3e8;
};

RepresentationRun run_asymptotic_L2_engine(const SampledFunction& f, int N,
                                           const AsymptoticEngineOptions& options = {});
// Same scheme against f_n = f on A, +n on B+, -n on B-.
RepresentationRun run_infinity_mode(const SampledFunction& f, int N,
                                    const AsymptoticEngineOptions& options = {});

struct StopTimeOptions {
  StageApproximant approximant;  // analytic requests
  RieszGrowth growth;
  int stage_cap = 40;
};

// Blocks of kind "D_nu" from the pool are consumed in order. f must vanish
// off the interval mask I.
struct StopTimeResult {
  TrigPoly P;
  RepresentationRun run;
};
StopTimeResult run_stoptime_engine(const SampledFunction& f, const std::vector<bool>& I,
                                   const SpectrumBuild& spectrum, double eps,
                                   const StopTimeOptions& options = {});

// Pass p covers the circle with the 2^p arcs of length 2 pi 2^-p, in order.
struct DyadicArc {
  int pass = 1;
  std::int64_t index = 0;
  double length = 0.0;  // normalized measure
  std::vector<bool> mask(const CircleGrid& grid) const;
};
DyadicArc dyadic_cover(std::int64_t k);  // k = 1, 2, ...

struct MeasureEngineOptions {
  StopTimeOptions stoptime;
};

RepresentationRun run_measure_engine(const SampledFunction& f, const SpectrumBuild& spectrum,
                                     int stages, const MeasureEngineOptions& options = {});

// ---------------------------------------------------------------- transforms

struct SeriesTransform {
  std::int64_t shift = 0;   // c_k -> c_{k + shift}
  std::int64_t divide = 1;  // d_k = c_{divide k}
};

// Shift then divide. The target becomes e^{-i shift t} g, then its m-fold
// average (1/m) sum_{r<m} g((t + 2 pi r) / m); target_fn, when given,
// evaluates g off the grid, otherwise the nearest sample is used.
// diagnostics["identity_error"] is the grid check of the finite-sum identity.
RepresentationRun transform_series(const RepresentationRun& run, const SeriesTransform& tr,
                                   const std::function<Complex(double)>& target_fn = {});

}  // namespace menshov
