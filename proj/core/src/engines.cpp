#include "menshov/engines.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <limits>
#include <fstream>
#include <numbers>
#include <ostream>
#include <set>

#include <nlohmann/json.hpp>

#include "checked.hpp"
#include "csv_util.hpp"
#include "menshov/errors.hpp"

namespace menshov {

namespace {

constexpr double kPi = std::numbers::pi;

std::string num(double v) { return csv::fmt(v); }

Requirement make_requirement(std::string name, std::string relation, double measured,
                             double bound) {
  bool pass = false;
  if (relation == "<") {
    pass = measured < bound;
  } else if (relation == "<=") {
    pass = measured <= bound;
  } else if (relation == ">") {
    pass = measured > bound;
  } else if (relation == ">=") {
    pass = measured >= bound;
  } else if (relation == "==") {
    pass = measured == bound;
  } else {
    throw ParameterError("unknown relation '" + relation + "'");
  }
  return {std::move(name), std::move(relation), measured, bound, pass};
}

bool all_met(const std::vector<Requirement>& rs) {
  return std::all_of(rs.begin(), rs.end(), [](const Requirement& r) { return r.pass; });
}

nlohmann::json requirements_json(const std::vector<Requirement>& rs) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& r : rs) {
    out.push_back({{"name", r.name},
                   {"relation", r.relation},
                   {"measured", r.measured},
                   {"bound", r.bound},
                   {"pass", r.pass}});
  }
  return out;
}

nlohmann::json block_json(const BlockRecord& b) {
  nlohmann::json j = {{"kind", b.kind}, {"s", b.s}, {"a", b.a}};
  j["nu"] = b.nu ? nlohmann::json(*b.nu) : nlohmann::json(nullptr);
  return j;
}

double pow2(int e) { return std::ldexp(1.0, e); }

std::int64_t count_outside(const TrigPoly& P, const SpectrumSet& S) {
  std::int64_t c = 0;
  for (const auto& kv : P.coeffs()) c += S.contains(kv.first) ? 0 : 1;
  return c;
}

std::int64_t count_nonpositive(const TrigPoly& P) {
  std::int64_t c = 0;
  for (const auto& kv : P.coeffs()) c += kv.first <= 0 ? 1 : 0;
  return c;
}

// Smallest |k| over a block; B and B_nu are symmetric with a hole at 0.
std::int64_t block_distance_to_zero(const SpectrumSet& block) {
  std::int64_t d = std::numeric_limits<std::int64_t>::max();
  for (auto x : block.elements()) d = std::min(d, x < 0 ? -x : x);
  return d;
}

// Pointwise sup_n |S_n P|, sampled (exact phases, any degree).
std::vector<Complex> sampled_s_star(const TrigPoly& P, const CircleGrid& grid) {
  std::vector<Complex> out(grid.size(), Complex{});
  for_each_sampled_partial_sum(P, grid, [&](std::int64_t, const std::vector<Complex>& v) {
    for (std::size_t j = 0; j < v.size(); ++j) out[j] = std::max(out[j].real(), std::abs(v[j]));
  });
  return out;
}

std::vector<Complex> minus(const std::vector<Complex>& a, const std::vector<Complex>& b) {
  std::vector<Complex> out(a.size());
  for (std::size_t j = 0; j < a.size(); ++j) out[j] = a[j] - b[j];
  return out;
}

double mask_fraction(const std::vector<bool>& mask, bool value) {
  if (mask.empty()) return 0.0;
  const auto c = static_cast<double>(std::count(mask.begin(), mask.end(), value));
  return c / static_cast<double>(mask.size());
}

double median_abs(const std::vector<Complex>& v) {
  std::vector<double> a(v.size());
  for (std::size_t j = 0; j < v.size(); ++j) a[j] = std::abs(v[j]);
  if (a.empty()) return 0.0;
  const auto mid = a.begin() + static_cast<std::ptrdiff_t>(a.size() / 2);
  std::nth_element(a.begin(), mid, a.end());
  if (a.size() % 2 == 1) return *mid;
  const double hi = *mid;
  return 0.5 * (hi + *std::max_element(a.begin(), mid));
}

TrigPoly modulate(const TrigPoly& P, std::int64_t nu, Complex weight) {
  TrigPoly out;
  for (const auto& [k, c] : P.coeffs()) out.add(checked::add(k, nu), weight * c);
  return out;
}

// Root mean of |v|^2 over the mask; 0 on an empty mask.
double l2_on(const std::vector<Complex>& v, const std::vector<bool>& mask) {
  double acc = 0.0;
  std::size_t n = 0;
  for (std::size_t j = 0; j < v.size(); ++j) {
    if (!mask[j]) continue;
    acc += std::norm(v[j]);
    ++n;
  }
  return n == 0 ? 0.0 : std::sqrt(acc / static_cast<double>(n));
}

}  // namespace

// ---------------------------------------------------------------- records

ErrorSchedule ErrorSchedule::dyadic(int N) {
  ErrorSchedule s;
  for (int n = 1; n <= N; ++n) {
    s.eps.push_back(pow2(-n));
    s.delta.push_back(pow2(-2 * n));
  }
  return s;
}

ErrorSchedule ErrorSchedule::squares(int N) {
  ErrorSchedule s;
  for (int n = 1; n <= N; ++n) {
    s.eps.push_back(1.0 / (static_cast<double>(n) * n));
    s.delta.push_back(pow2(-2 * n));
  }
  return s;
}

bool ErrorSchedule::valid() const {
  if (eps.size() != delta.size()) return false;
  for (std::size_t i = 0; i < eps.size(); ++i) {
    if (!(eps[i] > 0.0) || !(delta[i] > 0.0)) return false;
    if (i > 0 && (eps[i] >= eps[i - 1] || delta[i] >= delta[i - 1])) return false;
  }
  return true;
}

bool RunStage::all_pass() const { return all_met(certificates); }

void RunStage::add(std::string name, std::string relation, double measured, double bound) {
  certificates.push_back(make_requirement(std::move(name), std::move(relation), measured, bound));
}

bool RepresentationRun::all_pass() const {
  if (exhausted || !all_met(summary)) return false;
  return std::all_of(stages.begin(), stages.end(), [](const RunStage& s) { return s.all_pass(); });
}

void RepresentationRun::add(std::string name, std::string relation, double measured,
                            double bound) {
  summary.push_back(make_requirement(std::move(name), std::move(relation), measured, bound));
}

TrigPoly RepresentationRun::merged() const {
  TrigPoly out;
  for (const auto& s : stages) out += s.poly;
  return out;
}

std::vector<std::pair<std::int64_t, Complex>> RepresentationRun::coefficient_stream() const {
  std::vector<std::pair<std::int64_t, Complex>> out;
  for (const auto& s : stages) {
    std::vector<std::pair<std::int64_t, Complex>> part(s.poly.coeffs().begin(),
                                                       s.poly.coeffs().end());
    std::stable_sort(part.begin(), part.end(), [](const auto& x, const auto& y) {
      const auto ax = x.first < 0 ? -x.first : x.first;
      const auto ay = y.first < 0 ? -y.first : y.first;
      return ax != ay ? ax < ay : x.first < y.first;
    });
    out.insert(out.end(), part.begin(), part.end());
  }
  return out;
}

SampledFunction RepresentationRun::partial_sum_values() const {
  return sample(merged(), target.grid);
}

nlohmann::json RepresentationRun::to_json() const {
  nlohmann::json stages_json = nlohmann::json::array();
  for (const auto& s : stages) {
    nlohmann::json diag = nlohmann::json::object();
    for (const auto& [k, v] : s.diagnostics) diag[k] = v;
    stages_json.push_back({{"n", s.n},
                           {"block", s.block ? block_json(*s.block) : nlohmann::json(nullptr)},
                           {"degree", s.poly.degree()},
                           {"support", s.poly.support_size()},
                           {"certificates", requirements_json(s.certificates)},
                           {"diagnostics", diag},
                           {"pass", s.all_pass()}});
  }
  nlohmann::json diag = nlohmann::json::object();
  for (const auto& [k, v] : diagnostics) diag[k] = v;
  return {{"engine", engine},
          {"target", target_info.is_null() ? nlohmann::json::object() : target_info},
          {"grid", target.grid.size()},
          {"spectrum_size", spectrum.size()},
          {"schedule", {{"eps", schedule.eps}, {"delta", schedule.delta}}},
          {"stages", stages_json},
          {"summary", requirements_json(summary)},
          {"diagnostics", diag},
          {"exhausted", exhausted},
          {"stop_reason", stop_reason},
          {"all_pass", all_pass()}};
}

void write_stream_csv(std::ostream& out,
                      const std::vector<std::pair<std::int64_t, Complex>>& s) {
  out << "order_index,k,re,im\n";
  for (std::size_t i = 0; i < s.size(); ++i) {
    out << i << ',' << s[i].first << ',' << csv::fmt(s[i].second.real()) << ','
        << csv::fmt(s[i].second.imag()) << '\n';
  }
}

void RepresentationRun::write(const std::string& directory) const {
  namespace fs = std::filesystem;
  fs::create_directories(directory);
  {
    std::ofstream m(fs::path(directory) / "manifest.json");
    m << to_json().dump(2) << '\n';
  }
  for (const auto& s : stages) {
    std::ofstream p(fs::path(directory) / ("stage_" + std::to_string(s.n) + ".csv"));
    write_csv(p, s.poly);
  }
  std::ofstream st(fs::path(directory) / "stream.csv");
  write_stream_csv(st, coefficient_stream());
}

// ---------------------------------------------------------------- stage approximants

StageApproximant block_stage_approximant(const BlockApproximantOptions& options) {
  return [options](const StageRequest& req) {
    BlockApproximantOptions o = options;
    o.strict = false;  // the engine records its own stage certificates
    if (req.analytic) return analytic_block_approximant(*req.target, req.eps, req.s, req.a, o).poly;
    return block_approximant(*req.target, req.eps, req.delta, req.s, req.a, o).poly;
  };
}

StageApproximant projection_stage_approximant() {
  return [](const StageRequest& req) {
    const SampledFunction& f = *req.target;
    const SpectrumSet block = req.analytic ? block_D(req.s, req.a) : block_B(req.s, req.a);
    const auto M = static_cast<std::int64_t>(f.grid.size());
    std::set<std::int64_t> residues;
    for (auto b : block.elements()) {
      if (!residues.insert(((b % M) + M) % M).second) {
        throw AliasingError("block (" + std::to_string(req.s) + ", " + std::to_string(req.a) +
                            ") is not injective mod M = " + std::to_string(M));
      }
    }
    // Exponentials with distinct residues are orthonormal on the grid.
    const double cut = 1e-12 * std::max(f.sup_abs(), 1.0);
    TrigPoly P;
    for (auto b : block.elements()) {
      Complex acc{};
      for (std::size_t j = 0; j < f.size(); ++j) acc += f.values[j] * std::conj(f.grid.unit(b, j));
      acc /= static_cast<double>(M);
      if (std::abs(acc) > cut) P.set(b, acc);
    }
    return P;
  };
}

AnalyticQProvider analytic_korner_provider(const AnalyticKornerOptions& options) {
  return [options](double eps, const CircleGrid& grid) {
    AnalyticKornerOptions o = options;
    o.grid = grid;
    ApproximantReport rep = analytic_korner(eps, o);
    return AnalyticQ{std::move(rep.poly), std::move(rep.exceptional_set)};
  };
}

// ---------------------------------------------------------------- a.e. engine

RepresentationRun run_ae_engine(const SampledFunction& f, const SpectrumBuild& spectrum, int N,
                                const AeEngineOptions& options) {
  if (N < 1) throw ParameterError("stage count must be >= 1");
  if (f.has_extended()) throw ParameterError("the a.e. engine needs a finite target");
  const StageApproximant approx = options.approximant ? options.approximant : block_stage_approximant();
  const CircleGrid& grid = f.grid;

  RepresentationRun run;
  run.engine = "ae";
  run.target = f;
  run.spectrum = spectrum.spectrum;
  std::vector<Complex> F = f.values;
  TrigPoly prev;  // last nonzero stage polynomial
  std::size_t cursor = 0;

  for (int n = 1; n <= N; ++n) {
    const double eps = pow2(-n), delta = pow2(-2 * n);
    RunStage st;
    st.n = n;
    st.residual_before = SampledFunction(grid, F);
    std::optional<TrigPoly> P;
    std::int64_t S_seen = 0;
    std::string failure;
    for (; cursor < spectrum.manifest.size(); ++cursor) {
      const BlockRecord& b = spectrum.manifest[cursor];
      if (b.kind != "B") continue;
      // s > deg P_{n-1} via the hole at zero: min|B(s, a)| > deg P_{n-1}.
      if (block_distance_to_zero(b.materialize()) <= prev.degree()) continue;
      try {
        P = approx(StageRequest{&st.residual_before, eps, delta, b.s, b.a, false, n});
        st.block = b;
        ++cursor;
        break;
      } catch (const BlockTooSmall& e) {
        S_seen = std::max(S_seen, e.required());
      } catch (const ParameterError&) {
        throw;
      } catch (const Error& e) {
        failure = e.what();
        break;
      }
    }
    if (!failure.empty()) {
      run.exhausted = true;
      run.stop_reason = "stage " + std::to_string(n) + ": " + failure;
      break;
    }
    if (!P) {
      run.exhausted = true;
      run.stop_reason = "stage " + std::to_string(n) + ": no manifest B block with s > S" +
                        (S_seen > 0 ? " (S >= " + std::to_string(S_seen) + ")" : std::string());
      break;
    }
    run.schedule.eps.push_back(eps);
    run.schedule.delta.push_back(delta);
    const SpectrumSet block = st.block->materialize();
    const auto vals = sample(*P, grid).values;
    F = minus(F, vals);
    std::vector<double> thr(grid.size());
    for (std::size_t j = 0; j < thr.size(); ++j) {
      thr[j] = options.sstar_budget * (std::abs(st.residual_before.values[j]) + delta) / eps;
    }
    st.add("spec P_n outside block", "==", static_cast<double>(count_outside(*P, block)), 0.0);
    st.add("P_n follows P_{n-1}", "==", follows(*P, prev) ? 1.0 : 0.0, 1.0);
    st.add("m{|f - sum P_k| > delta_n} < eps_n", "<", measure_above(F, delta), eps);
    st.add("m{S*(P_n) > C (|F_n| + delta_n) / eps_n} < eps_n", "<",
           measure_above(sampled_s_star(*P, grid), thr), eps);
    st.diagnostics["s"] = st.block->s;
    st.diagnostics["a"] = static_cast<double>(st.block->a);
    st.diagnostics["S_rejected"] = static_cast<double>(S_seen);
    st.diagnostics["degree"] = static_cast<double>(P->degree());
    st.diagnostics["support"] = static_cast<double>(P->support_size());
    st.diagnostics["C"] = options.sstar_budget;
    st.poly = *P;
    st.inner = *P;
    if (!P->empty()) prev = *P;
    run.stages.push_back(std::move(st));
  }

  const TrigPoly total = run.merged();
  std::size_t support_sum = 0;
  for (const auto& s : run.stages) support_sum += s.poly.support_size();
  const double M = static_cast<double>(grid.size());
  run.add("l0(f - sum P) <= 2^-N + 4/M", "<=", l0_norm(SampledFunction(grid, F)),
          pow2(-N) + 4.0 / M);
  run.add("overlapping stage frequencies", "==",
          static_cast<double>(support_sum - total.support_size()), 0.0);
  run.add("merged support outside spectrum", "==",
          static_cast<double>(count_outside(total, run.spectrum)), 0.0);
  run.diagnostics["stages"] = static_cast<double>(run.stages.size());
  return run;
}

// ---------------------------------------------------------------- squares engine

RepresentationRun run_squares_engine(const SampledFunction& f, const SpectrumBuild& spectrum,
                                     int N, const SquaresEngineOptions& options) {
  if (N < 1) throw ParameterError("stage count must be >= 1");
  if (f.has_extended()) throw ParameterError("the squares engine needs a finite target");
  const StageApproximant approx = options.approximant ? options.approximant : block_stage_approximant();
  const CircleGrid& grid = f.grid;

  RepresentationRun run;
  run.engine = "squares";
  run.target = f;
  run.spectrum = spectrum.spectrum;
  std::vector<Complex> F = f.values;
  TrigPoly prev;
  std::optional<std::int64_t> prev_nu;
  std::size_t cursor = 0;

  for (int n = 1; n <= N; ++n) {
    const double eps = 1.0 / (static_cast<double>(n) * n), delta = pow2(-2 * n);
    RunStage st;
    st.n = n;
    st.residual_before = SampledFunction(grid, F);
    std::optional<TrigPoly> P1;
    std::int64_t S_seen = 0;
    std::string failure;
    for (; cursor < spectrum.manifest.size(); ++cursor) {
      const BlockRecord& b = spectrum.manifest[cursor];
      if (b.kind != "B_nu" || !b.nu) continue;
      if (block_distance_to_zero(b.materialize()) <= prev.degree()) continue;
      if (prev_nu) {
        // nu_n > nu_{n-1} L_{n-1}, L_k = base ratio^k; overflow means no int64 nu qualifies.
        std::int64_t L = 0;
        try {
          L = checked::mul(static_cast<std::int64_t>(options.growth.base),
                           checked::pow(static_cast<std::int64_t>(options.growth.ratio), n - 1));
          const std::int64_t floor = checked::mul(*prev_nu, L);
          if (!(*b.nu > floor)) {
            throw ParameterError("stage " + std::to_string(n) + ": nu = " + std::to_string(*b.nu) +
                                 " must exceed nu_{n-1} L_{n-1} = " + std::to_string(floor));
          }
        } catch (const OverflowError&) {
          throw ParameterError("stage " + std::to_string(n) +
                               ": nu_{n-1} L_{n-1} leaves int64, no manifest nu can exceed it");
        }
      }
      try {
        // eps_1 = 1 is out of the approximants' range; a tighter request is still valid.
        P1 = approx(StageRequest{&st.residual_before, std::min(eps, 0.5), delta, b.s, b.a, false, n});
        st.block = b;
        ++cursor;
        break;
      } catch (const BlockTooSmall& e) {
        S_seen = std::max(S_seen, e.required());
      } catch (const ParameterError&) {
        throw;
      } catch (const Error& e) {
        failure = e.what();
        break;
      }
    }
    if (!failure.empty()) {
      run.exhausted = true;
      run.stop_reason = "stage " + std::to_string(n) + ": " + failure;
      break;
    }
    if (!P1) {
      run.exhausted = true;
      run.stop_reason = "stage " + std::to_string(n) + ": no manifest B_nu block with s > S" +
                        (S_seen > 0 ? " (S >= " + std::to_string(S_seen) + ")" : std::string());
      break;
    }
    run.schedule.eps.push_back(eps);
    run.schedule.delta.push_back(delta);
    const std::int64_t nu = *st.block->nu;
    const TrigPoly P = modulate(*P1, nu, 0.5) + modulate(*P1, -nu, 0.5);
    const auto pv = sample(P, grid).values;
    std::vector<Complex> r(grid.size());
    std::vector<Complex> damped(grid.size());
    for (std::size_t j = 0; j < r.size(); ++j) {
      const double c = grid.unit(nu, j).real();
      r[j] = F[j] * c - pv[j];
      damped[j] = F[j] * (1.0 - c);
    }
    // F_{n+1} = F_n (1 - cos nu_n t) + r_n
    std::vector<Complex> next = minus(F, pv);
    double recursion = 0.0;
    for (std::size_t j = 0; j < r.size(); ++j) {
      recursion = std::max(recursion, std::abs(next[j] - (damped[j] + r[j])));
    }
    const auto sstar = sampled_s_star(P, grid);
    const auto sss = sample_s_star_star(*P1, grid).values;
    double excess = -std::numeric_limits<double>::infinity(), scale = 0.0;
    for (std::size_t j = 0; j < sstar.size(); ++j) {
      excess = std::max(excess, sstar[j].real() - sss[j].real());
      scale = std::max(scale, sss[j].real());
    }
    st.add("spec P_n outside B(s, a, nu)", "==",
           static_cast<double>(count_outside(P, block_B_nu(st.block->s, st.block->a, nu))), 0.0);
    st.add("P_n follows P_{n-1}", "==", follows(P, prev) ? 1.0 : 0.0, 1.0);
    st.add("m{|F_n cos(nu_n t) - P_n| > 4^-n} < n^-2", "<", measure_above(r, delta), eps);
    st.add("max(S*(P_n) - S**(P^1_n)) <= 0", "<=", excess, 1e-9 * (1.0 + scale));
    st.diagnostics["s"] = st.block->s;
    st.diagnostics["a"] = static_cast<double>(st.block->a);
    st.diagnostics["nu"] = static_cast<double>(nu);
    st.diagnostics["l0(r_n)"] = l0_norm(SampledFunction(grid, r));
    st.diagnostics["recursion_error"] = recursion;
    st.diagnostics["S_rejected"] = static_cast<double>(S_seen);
    st.poly = P;
    st.inner = *P1;
    if (!P.empty()) prev = P;
    prev_nu = nu;
    F = std::move(next);
    run.stages.push_back(std::move(st));
  }

  // |F_N| is the residual entering stage N; a short run is judged on its last residual.
  const std::vector<Complex>& FN =
      static_cast<int>(run.stages.size()) >= N ? run.stages[N - 1].residual_before.values : F;
  const double gate = std::pow(options.c1, N);
  std::size_t below = 0;
  for (const auto& v : FN) below += std::abs(v) < gate ? 1 : 0;
  run.add("median |F_N| < c1^N", "<", median_abs(FN), gate);
  run.add("merged support outside spectrum", "==",
          static_cast<double>(count_outside(run.merged(), run.spectrum)), 0.0);
  run.diagnostics["fraction |F_N| < c1^N"] = static_cast<double>(below) / static_cast<double>(FN.size());
  run.diagnostics["median |F_final|"] = median_abs(F);
  run.diagnostics["c1"] = options.c1;
  return run;
}

// ---------------------------------------------------------------- asymptotic L2 engine

namespace {

// Grid index of r t_j mod 2 pi: t_i = -pi + 2 pi i / M with i = r j + (1 - r) M / 2 mod M.
std::vector<std::size_t> contraction_permutation(std::int64_t r, std::size_t M) {
  const auto m = static_cast<std::int64_t>(M);
  const std::int64_t rm = ((r % m) + m) % m;
  const std::int64_t offset = ((1 - rm) % 2 == 0) ? 0 : m / 2;
  std::vector<std::size_t> perm(M);
  for (std::size_t j = 0; j < M; ++j) {
    const auto i = (static_cast<__int128>(rm) * static_cast<__int128>(j) + offset) % m;
    perm[j] = static_cast<std::size_t>(i);
  }
  return perm;
}

struct L2Sweep {
  double value = 0.0;
  bool exact = false;
};

// sup_k ||S_k (Q_[r] G)||_{L2(W)} as a root mean over W. Directly when the
// product is small, else through S_k = (S_{q-1}Q)_[r] G + Q^(q) e^{iqrt} S_{[-d,l]} G.
L2Sweep l2_partial_sup(const TrigPoly& P, const TrigPoly& G, const TrigPoly& Q,
                       const std::vector<Complex>& Gv, const std::vector<std::size_t>& perm,
                       const CircleGrid& grid, const std::vector<bool>& W, double limit) {
  L2Sweep out;
  if (std::none_of(W.begin(), W.end(), [](bool b) { return b; })) return {0.0, true};
  const double M = static_cast<double>(grid.size());
  if (static_cast<double>(P.support_size()) * M <= limit) {
    for_each_sampled_partial_sum(P, grid, [&](std::int64_t, const std::vector<Complex>& v) {
      out.value = std::max(out.value, l2_on(v, W));
    });
    out.exact = true;
    return out;
  }
  double window = 0.0;
  {
    std::vector<Complex> run(grid.size(), Complex{});
    for (const auto& [k, c] : G.coeffs()) {
      grid.accumulate(k, c, run);
      window = std::max(window, l2_on(run, W));
    }
  }
  std::vector<Complex> qrun(grid.size(), Complex{});
  std::vector<Complex> prod(grid.size());
  auto head = [&]() {
    for (std::size_t j = 0; j < prod.size(); ++j) prod[j] = qrun[perm[j]] * Gv[j];
    return l2_on(prod, W);
  };
  for (const auto& [q, c] : Q.coeffs()) {
    out.value = std::max(out.value, head() + std::abs(c) * window);
    grid.accumulate(q, c, qrun);
  }
  out.value = std::max(out.value, head());
  return out;
}

RepresentationRun asymptotic_scheme(const SampledFunction& f, int N,
                                    const AsymptoticEngineOptions& options, bool split) {
  if (N < 1) throw ParameterError("stage count must be >= 1");
  const AnalyticQProvider provider = options.provider ? options.provider : analytic_korner_provider();
  const CircleGrid& grid = f.grid;
  const std::size_t M = grid.size();

  RepresentationRun run;
  run.engine = split ? "infinity" : "asymptotic_L2";
  run.target = f;
  std::vector<Complex> sum(M, Complex{});
  std::vector<bool> E_prev(M, true);
  std::vector<bool> A(M, true), Bplus(M, false), Bpm(M, false);
  for (std::size_t j = 0; j < M; ++j) {
    const int e = f.is_extended(j) ? f.extended[j] : 0;
    A[j] = e == 0;
    Bplus[j] = e > 0;
    Bpm[j] = e != 0;
  }
  TrigPoly prev;
  std::vector<double> l2_by_stage;
  std::set<std::int64_t> spectrum_acc;

  for (int n = 1; n <= N; ++n) {
    const double tol = pow2(-(n + 1));
    RunStage st;
    st.n = n;
    std::vector<Complex> fn(M);
    for (std::size_t j = 0; j < M; ++j) {
      fn[j] = A[j] ? f.values[j] : Complex(f.extended[j] > 0 ? n : -n, 0.0);
    }
    st.residual_before = SampledFunction(grid, minus(fn, sum));
    const auto& F = st.residual_before.values;
    TrigPoly G, Q, P;
    std::vector<bool> E(M, true);
    std::int64_t r = 0;
    double eps_n = tol;
    try {
      G = fejer_approximant(st.residual_before, tol, tol, options.fejer_cap);
      eps_n = tol / (coeff_norms(G).l1 + 1.0);
      r = checked::add(prev.degree(), checked::add(checked::mul(2, G.degree()), 1));
      if (!G.empty()) {
        AnalyticQ q = provider(eps_n, grid);
        if (q.E.size() != M) throw InvariantViolation("provider mask does not match the grid");
        if (q.Q.coeff(0) != Complex{} || !q.Q.is_analytic()) {
          throw InvariantViolation("provider Q must be analytic with Q^(0) = 0");
        }
        Q = std::move(q.Q);
        E = std::move(q.E);
        P = special_product(G, Q, r);
      }
    } catch (const Error& e) {
      run.exhausted = true;
      run.stop_reason = "stage " + std::to_string(n) + ": " + e.what();
      break;
    }
    run.schedule.eps.push_back(eps_n);
    run.schedule.delta.push_back(tol);

    const auto perm = contraction_permutation(r, M);
    const auto Gv = sample(G, grid).values;
    const auto Qv = sample(Q, grid).values;
    std::vector<bool> En(M);
    std::vector<Complex> Pv(M);
    for (std::size_t j = 0; j < M; ++j) {
      const bool D = std::abs(Gv[j] - F[j]) <= tol;
      En[j] = E[perm[j]] && D;
      Pv[j] = Qv[perm[j]] * Gv[j];  // (Q_[r] G)(t_j)
      sum[j] += Pv[j];
    }
    double sup_err = 0.0;
    for (std::size_t j = 0; j < M; ++j) {
      if (En[j]) sup_err = std::max(sup_err, std::abs(sum[j] - fn[j]));
    }
    std::vector<bool> W(M);
    for (std::size_t j = 0; j < M; ++j) W[j] = En[j] && E_prev[j];
    const double budget = options.l2_budget * pow2(-n);

    st.add("m(T \\ E_n) < 2^-n", "<", mask_fraction(En, false), pow2(-n));
    st.add("sup_{E_n} |sum P_k - f_n| < 2^-n", "<", sup_err, pow2(-n));
    st.add("nonpositive frequencies in P_n", "==", static_cast<double>(count_nonpositive(P)), 0.0);
    st.add("P_n follows P_{n-1}", "==", follows(P, prev) ? 1.0 : 0.0, 1.0);
    double l2_value = 0.0;
    if (split) {
      std::vector<bool> WA(M), WB(M);
      for (std::size_t j = 0; j < M; ++j) {
        WA[j] = W[j] && A[j];
        WB[j] = W[j] && Bpm[j];
      }
      const auto a = l2_partial_sup(P, G, Q, Gv, perm, grid, WA, options.exact_sweep_limit);
      const auto b = l2_partial_sup(P, G, Q, Gv, perm, grid, WB, options.exact_sweep_limit);
      st.add("sup_k ||S_k P_n||_L2(W n A) < C 2^-n", "<", a.value, budget);
      st.add("sup_k ||S_k P_n||_L2(W n B) < C", "<", b.value, options.l2_budget);
      st.diagnostics["l2_B"] = b.value;
      st.diagnostics["l2_exact"] = (a.exact && b.exact) ? 1.0 : 0.0;
      l2_value = a.value;
    } else {
      const auto a = l2_partial_sup(P, G, Q, Gv, perm, grid, W, options.exact_sweep_limit);
      st.add("sup_k ||S_k P_n||_L2(E_n n E_{n-1}) < C 2^-n", "<", a.value, budget);
      st.diagnostics["l2_exact"] = a.exact ? 1.0 : 0.0;
      l2_value = a.value;
    }
    l2_by_stage.push_back(l2_value);
    st.diagnostics["l2"] = l2_value;
    st.diagnostics["C_measured"] = l2_value * pow2(n);
    st.diagnostics["eps_n"] = eps_n;
    st.diagnostics["r_n"] = static_cast<double>(r);
    st.diagnostics["deg_G"] = static_cast<double>(G.degree());
    st.diagnostics["support_Q"] = static_cast<double>(Q.support_size());
    st.diagnostics["m(E_n)"] = mask_fraction(En, true);
    for (const auto& kv : P.coeffs()) spectrum_acc.insert(kv.first);
    st.inner = G;
    st.poly = std::move(P);
    st.mask = std::move(En);
    if (!st.poly.empty()) prev = st.poly;
    E_prev = st.mask;
    run.stages.push_back(std::move(st));
  }
  run.spectrum = SpectrumSet(std::vector<std::int64_t>(spectrum_acc.begin(), spectrum_acc.end()));

  if (static_cast<int>(l2_by_stage.size()) >= 3) {
    double worst = std::numeric_limits<double>::infinity();
    for (std::size_t i = 2; i < l2_by_stage.size(); ++i) {
      const double ratio = l2_by_stage[i] > 0.0 ? l2_by_stage[i - 1] / l2_by_stage[i]
                                                 : std::numeric_limits<double>::infinity();
      worst = std::min(worst, ratio);
    }
    run.add("min decay ratio of the L2 partial-sum norm, stages 2..N", ">=", worst,
            options.decay_factor);
  }
  if (split && N >= 4 && std::any_of(Bplus.begin(), Bplus.end(), [](bool b) { return b; }) &&
      !run.exhausted) {
    std::size_t hit = 0, total = 0;
    for (std::size_t j = 0; j < M; ++j) {
      if (!Bplus[j]) continue;
      ++total;
      hit += sum[j].real() > 3.0 ? 1 : 0;
    }
    run.add("fraction of B+ with Re sum P > 3", ">=",
            static_cast<double>(hit) / static_cast<double>(total), 0.9);
  }
  run.diagnostics["stages"] = static_cast<double>(run.stages.size());
  return run;
}

}  // namespace

RepresentationRun run_asymptotic_L2_engine(const SampledFunction& f, int N,
                                           const AsymptoticEngineOptions& options) {
  if (f.has_extended()) throw ParameterError("infinite values need run_infinity_mode");
  return asymptotic_scheme(f, N, options, false);
}

RepresentationRun run_infinity_mode(const SampledFunction& f, int N,
                                    const AsymptoticEngineOptions& options) {
  if (!f.has_extended()) {
    RepresentationRun run = asymptotic_scheme(f, N, options, false);
    run.engine = "infinity";
    return run;
  }
  return asymptotic_scheme(f, N, options, true);
}

// ---------------------------------------------------------------- stop-time engine

namespace {

struct StopTimeState {
  std::size_t cursor = 0;     // next manifest entry
  std::int64_t min_degree = 0;  // every block must lie above this
};

StopTimeResult stoptime_impl(const SampledFunction& f, const std::vector<bool>& I,
                             const SpectrumBuild& spectrum, double eps,
                             const StopTimeOptions& options, StopTimeState& state) {
  const CircleGrid& grid = f.grid;
  const std::size_t M = grid.size();
  if (I.size() != M) throw ParameterError("interval mask does not match the grid");
  if (!(eps > 0.0 && eps < 1.0)) throw ParameterError("eps must lie in (0, 1), got " + num(eps));
  if (f.has_extended()) throw ParameterError("the stop-time engine needs a finite target");
  for (std::size_t j = 0; j < M; ++j) {
    if (!I[j] && f.values[j] != Complex{}) {
      throw ParameterError("target does not vanish outside the interval");
    }
  }
  const StageApproximant approx = options.approximant ? options.approximant : block_stage_approximant();

  RepresentationRun run;
  run.engine = "stoptime";
  run.target = f;
  run.spectrum = spectrum.spectrum;
  std::vector<Complex> T = f.values;
  std::vector<bool> active = I;
  std::int64_t deg_prev = state.min_degree;
  TrigPoly prev;
  std::optional<std::int64_t> prev_nu;
  bool stopped = false;

  for (int k = 1; k <= options.stage_cap; ++k) {
    const double tol = eps * pow2(-k - 2);
    RunStage st;
    st.n = k;
    st.residual_before = SampledFunction(grid, T);
    SampledFunction R(grid);
    bool zero = true;
    for (std::size_t j = 0; j < M; ++j) {
      active[j] = active[j] && std::abs(T[j]) > 0.5 * eps;  // one-way: frozen points stay frozen
      if (active[j]) {
        R.values[j] = T[j];
        zero = zero && T[j] == Complex{};
      }
    }
    st.mask = active;
    TrigPoly P;
    if (!zero) {
      std::optional<TrigPoly> Pp;
      std::int64_t S_seen = 0;
      std::string failure;
      for (; state.cursor < spectrum.manifest.size(); ++state.cursor) {
        const BlockRecord& b = spectrum.manifest[state.cursor];
        if (b.kind != "D_nu" || !b.nu) continue;
        const SpectrumSet full = b.materialize();
        if (full.min() <= deg_prev) continue;
        if (prev_nu) {
          const std::int64_t L = checked::mul(
              static_cast<std::int64_t>(options.growth.base),
              checked::pow(static_cast<std::int64_t>(options.growth.ratio), k - 1));
          std::int64_t floor = 0;
          if (__builtin_mul_overflow(*prev_nu, L, &floor) || !(*b.nu > floor)) continue;
        }
        try {
          Pp = approx(StageRequest{&R, tol, tol, b.s, b.a, true, k});
          st.block = b;
          ++state.cursor;
          break;
        } catch (const BlockTooSmall& e) {
          S_seen = std::max(S_seen, e.required());
        } catch (const ParameterError&) {
          throw;
        } catch (const Error& e) {
          failure = e.what();
          break;
        }
      }
      if (!failure.empty()) {
        run.exhausted = true;
        run.stop_reason = "stage " + std::to_string(k) + ": " + failure;
        break;
      }
      if (!Pp) {
        run.exhausted = true;
        run.stop_reason = "stage " + std::to_string(k) + ": no D_nu block with s > S" +
                          (S_seen > 0 ? " (S >= " + std::to_string(S_seen) + ")" : std::string());
        break;
      }
      const std::int64_t nu = *st.block->nu;
      P = modulate(*Pp, nu, 1.0);
      const auto ppv = sample(*Pp, grid).values;
      std::vector<double> thr(M);
      for (std::size_t j = 0; j < M; ++j) thr[j] = 2.0 * std::abs(R.values[j]) + tol;
      double sn = 0.0;
      for_each_sampled_partial_sum(P, grid, [&](std::int64_t, const std::vector<Complex>& v) {
        sn = std::max(sn, measure_above(v, thr));
      });
      st.add("spec P'_k outside D(s, a)", "==",
             static_cast<double>(count_outside(*Pp, block_D(st.block->s, st.block->a))), 0.0);
      st.add("l0(R_k - P'_k) < eps 2^{-k-2}", "<",
             l0_norm(SampledFunction(grid, minus(R.values, ppv))), tol);
      st.add("sup_n m{|S_n P_k| > 2|R_k| + eps 2^{-k-2}} < eps 2^{-k-2}", "<", sn, tol);
      st.add("P_k follows P_{k-1}", "==", follows(P, prev) ? 1.0 : 0.0, 1.0);
      st.diagnostics["nu"] = static_cast<double>(nu);
      st.diagnostics["s"] = st.block->s;
      st.diagnostics["a"] = static_cast<double>(st.block->a);
      st.inner = *Pp;
      prev_nu = nu;
      if (!P.empty()) {
        prev = P;
        deg_prev = std::max(deg_prev, P.degree());
      }
    }
    T = minus(T, sample(P, grid).values);
    const double l0T = l0_norm(SampledFunction(grid, T));
    st.diagnostics["l0(T_{k+1})"] = l0T;
    st.diagnostics["m(active)"] = mask_fraction(active, true);
    st.poly = std::move(P);
    run.stages.push_back(std::move(st));
    run.schedule.eps.push_back(tol);
    run.schedule.delta.push_back(tol);
    if (l0T < eps) {
      stopped = true;
      break;
    }
    if (zero) {
      run.exhausted = true;
      run.stop_reason = "stage " + std::to_string(k) + ": R_k = 0 while l0(T) >= eps";
      break;
    }
  }
  if (!stopped && !run.exhausted) {
    run.exhausted = true;
    run.stop_reason = "l0(T_k) >= eps after the stage cap " + std::to_string(options.stage_cap);
  }
  state.min_degree = deg_prev;

  StopTimeResult out;
  out.P = run.merged();
  double outside = 0.0;
  std::vector<double> thr(M);
  for (std::size_t j = 0; j < M; ++j) {
    thr[j] = I[j] ? std::numeric_limits<double>::infinity() : eps;
  }
  for_each_sampled_partial_sum(out.P, grid, [&](std::int64_t, const std::vector<Complex>& v) {
    outside = std::max(outside, measure_above(v, thr));
  });
  run.add("l0(P - f) < eps", "<", l0_norm(SampledFunction(grid, T)), eps);
  run.add("spec P outside Lambda", "==", static_cast<double>(count_outside(out.P, run.spectrum)),
          0.0);
  run.add("sup_n m{t not in I : |S_n P| > eps} < eps", "<", outside, eps);
  run.diagnostics["K"] = static_cast<double>(run.stages.size());
  run.diagnostics["eps"] = eps;
  out.run = std::move(run);
  return out;
}

}  // namespace

StopTimeResult run_stoptime_engine(const SampledFunction& f, const std::vector<bool>& I,
                                   const SpectrumBuild& spectrum, double eps,
                                   const StopTimeOptions& options) {
  StopTimeState state;
  return stoptime_impl(f, I, spectrum, eps, options, state);
}

// ---------------------------------------------------------------- measure engine

std::vector<bool> DyadicArc::mask(const CircleGrid& grid) const {
  std::vector<bool> out(grid.size());
  const auto M = static_cast<unsigned __int128>(grid.size());
  for (std::size_t j = 0; j < grid.size(); ++j) {
    out[j] = (static_cast<unsigned __int128>(j) << pass) / M == static_cast<unsigned __int128>(index);
  }
  return out;
}

DyadicArc dyadic_cover(std::int64_t k) {
  if (k < 1) throw ParameterError("cover index starts at 1");
  int p = 1;
  while (k > (std::int64_t{2} << p) - 2) ++p;  // pass p holds k = 2^p - 1 .. 2^{p+1} - 2
  return {p, k - ((std::int64_t{1} << p) - 1), pow2(-p)};
}

RepresentationRun run_measure_engine(const SampledFunction& f, const SpectrumBuild& spectrum,
                                     int stages, const MeasureEngineOptions& options) {
  if (stages < 1) throw ParameterError("stage count must be >= 1");
  if (f.has_extended()) throw ParameterError("the measure engine needs a finite target");
  const CircleGrid& grid = f.grid;
  const std::size_t M = grid.size();

  RepresentationRun run;
  run.engine = "measure";
  run.target = f;
  run.spectrum = spectrum.spectrum;
  std::vector<Complex> sum(M, Complex{});
  StopTimeState state;
  TrigPoly prev;
  std::vector<double> pass_l0;

  for (int k = 1; k <= stages; ++k) {
    const DyadicArc arc = dyadic_cover(k);
    const auto I = arc.mask(grid);
    const double eps = pow2(-k);
    RunStage st;
    st.n = k;
    st.residual_before = SampledFunction(grid, minus(f.values, sum));
    SampledFunction R(grid);
    for (std::size_t j = 0; j < M; ++j) R.values[j] = I[j] ? st.residual_before.values[j] : Complex{};
    const std::int64_t floor = state.min_degree;
    StopTimeResult sub;
    try {
      sub = stoptime_impl(R, I, spectrum, eps, options.stoptime, state);
    } catch (const Error& e) {
      run.exhausted = true;
      run.stop_reason = "stage " + std::to_string(k) + ": " + e.what();
      break;
    }
    const TrigPoly& P = sub.P;
    double sn_l0 = 0.0;
    for_each_sampled_partial_sum(P, grid, [&](std::int64_t, const std::vector<Complex>& v) {
      sn_l0 = std::max(sn_l0, l0_norm(SampledFunction(grid, v)));
    });
    std::int64_t below = 0;
    for (const auto& kv : P.coeffs()) below += kv.first <= floor ? 1 : 0;
    st.certificates = sub.run.summary;
    st.add("stop-time run completed", "==", sub.run.exhausted ? 0.0 : 1.0, 1.0);
    st.add("spec P_k below deg P_{k-1}", "==", static_cast<double>(below), 0.0);
    st.add("P_k follows P_{k-1}", "==", follows(P, prev) ? 1.0 : 0.0, 1.0);
    st.add("max_n l0(S_n P_k) < 2^-k + |I_k|", "<", sn_l0, eps + arc.length);
    st.diagnostics["pass"] = arc.pass;
    st.diagnostics["arc"] = static_cast<double>(arc.index);
    st.diagnostics["inner_stages"] = static_cast<double>(sub.run.stages.size());
    st.poly = P;
    st.mask = I;
    const auto pv = sample(P, grid).values;
    for (std::size_t j = 0; j < M; ++j) sum[j] += pv[j];
    const double l0_now = l0_norm(SampledFunction(grid, minus(f.values, sum)));
    st.diagnostics["l0(f - sum P)"] = l0_now;
    if (!P.empty()) prev = P;
    run.schedule.eps.push_back(eps);
    run.schedule.delta.push_back(eps);
    const bool failed = sub.run.exhausted;
    const std::string reason = sub.run.stop_reason;
    run.stages.push_back(std::move(st));
    if (arc.index == (std::int64_t{1} << arc.pass) - 1) {
      pass_l0.push_back(l0_now);
      run.diagnostics["l0 after pass " + std::to_string(arc.pass)] = l0_now;
    }
    if (failed) {
      run.exhausted = true;
      run.stop_reason = "stage " + std::to_string(k) + ": " + reason;
      break;
    }
  }
  if (pass_l0.size() >= 2) {
    std::size_t rises = 0;
    for (std::size_t i = 1; i < pass_l0.size(); ++i) rises += pass_l0[i] > pass_l0[i - 1] ? 1 : 0;
    run.add("passes where l0(f - sum P) increased", "==", static_cast<double>(rises), 0.0);
  }
  run.add("merged support outside spectrum", "==",
          static_cast<double>(count_outside(run.merged(), run.spectrum)), 0.0);
  return run;
}

// ---------------------------------------------------------------- transforms

namespace {

TrigPoly shift_poly(const TrigPoly& P, std::int64_t n) {
  TrigPoly out;
  for (const auto& [k, c] : P.coeffs()) out.set(checked::sub(k, n), c);
  return out;
}

TrigPoly divide_poly(const TrigPoly& P, std::int64_t m) {
  TrigPoly out;
  for (const auto& [k, c] : P.coeffs()) {
    if (k % m == 0) out.set(k / m, c);
  }
  return out;
}

// (1/m) sum_{r<m} P((t_j + 2 pi r) / m) with exact rational phases:
// k (t_j + 2 pi r) / m = 2 pi k (j + r M - M/2) / (m M).
std::vector<Complex> averaged_values(const TrigPoly& P, const CircleGrid& grid, std::int64_t m) {
  const auto M = static_cast<__int128>(grid.size());
  const __int128 mod = M * m;
  std::vector<Complex> out(grid.size(), Complex{});
  for (const auto& [k, c] : P.coeffs()) {
    const __int128 kk = ((static_cast<__int128>(k) % mod) + mod) % mod;
    for (std::size_t j = 0; j < grid.size(); ++j) {
      Complex acc{};
      for (std::int64_t r = 0; r < m; ++r) {
        const __int128 x = static_cast<__int128>(j) + r * M - M / 2;
        const __int128 xr = ((x % mod) + mod) % mod;
        const auto phase = static_cast<double>((kk * xr) % mod) / static_cast<double>(mod);
        acc += std::polar(1.0, 2.0 * kPi * phase);
      }
      out[j] += c * acc / static_cast<double>(m);
    }
  }
  return out;
}

}  // namespace

RepresentationRun transform_series(const RepresentationRun& run, const SeriesTransform& tr,
                                   const std::function<Complex(double)>& target_fn) {
  if (tr.divide < 1) throw ParameterError("divisor must be a positive integer");
  const CircleGrid& grid = run.target.grid;
  const std::size_t M = grid.size();
  RepresentationRun out = run;
  out.engine = run.engine + "+transform";
  out.target_info = {{"source", run.target_info.is_null() ? nlohmann::json::object() : run.target_info},
                     {"shift", tr.shift},
                     {"divide", tr.divide}};

  // Shift: c_k -> c_{k + n}, target e^{-int} g.
  const TrigPoly old_total = run.merged();
  for (auto& s : out.stages) {
    s.poly = shift_poly(s.poly, tr.shift);
    s.inner = s.poly;
  }
  out.spectrum = shift_spectrum(run.spectrum, tr.shift);
  SampledFunction g = run.target;
  for (std::size_t j = 0; j < M; ++j) g.values[j] *= std::conj(grid.unit(tr.shift, j));
  std::function<Complex(double)> g_fn;
  if (target_fn) {
    g_fn = [target_fn, n = tr.shift](double t) {
      return std::polar(1.0, -static_cast<double>(n) * t) * target_fn(t);
    };
  }
  double identity = 0.0;
  const TrigPoly shifted_total = shift_poly(old_total, tr.shift);
  if (tr.shift != 0) {
    const auto lhs = sample(shifted_total, grid).values;
    const auto rhs = sample(old_total, grid).values;
    for (std::size_t j = 0; j < M; ++j) {
      identity = std::max(identity, std::abs(lhs[j] - std::conj(grid.unit(tr.shift, j)) * rhs[j]));
    }
  }

  if (tr.divide > 1) {
    const std::int64_t m = tr.divide;
    for (auto& s : out.stages) {
      s.poly = divide_poly(s.poly, m);
      s.inner = s.poly;
    }
    out.spectrum = divide_spectrum(out.spectrum, m);
    SampledFunction h(grid);
    h.extended.clear();
    for (std::size_t j = 0; j < M; ++j) {
      Complex acc{};
      for (std::int64_t r = 0; r < m; ++r) {
        const double t = (grid.point(j) + 2.0 * kPi * static_cast<double>(r)) / static_cast<double>(m);
        acc += g_fn ? g_fn(t) : g.values[grid.nearest_index(t)];
      }
      h.values[j] = acc / static_cast<double>(m);
    }
    out.diagnostics["target_nearest_sample"] = g_fn ? 0.0 : 1.0;
    g = std::move(h);
    const auto lhs = sample(divide_poly(shifted_total, m), grid).values;
    const auto rhs = averaged_values(shifted_total, grid, m);
    for (std::size_t j = 0; j < M; ++j) identity = std::max(identity, std::abs(lhs[j] - rhs[j]));
  }
  out.target = g;

  std::vector<Complex> partial(M, Complex{});
  for (auto& s : out.stages) {
    s.residual_before = SampledFunction(grid, minus(g.values, partial));
    const auto v = sample(s.poly, grid).values;
    for (std::size_t j = 0; j < M; ++j) partial[j] += v[j];
  }
  double scale = 0.0;
  for (const auto& [k, c] : old_total.coeffs()) scale += std::abs(c);
  out.diagnostics["identity_error"] = identity;
  out.add("finite-sum identity error", "<=", identity, 1e-9 * (1.0 + scale));
  out.add("merged support outside spectrum", "==",
          static_cast<double>(count_outside(out.merged(), out.spectrum)), 0.0);
  return out;
}

}  // namespace menshov
