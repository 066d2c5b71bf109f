#include "menshov/approximants.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <numbers>
#include <ostream>
#include <random>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "checked.hpp"
#include "csv_util.hpp"
#include "fft.hpp"
#include "menshov/errors.hpp"

namespace menshov {

namespace {

constexpr double kPi = std::numbers::pi;

std::string num(double v) { return csv::fmt(v); }

void require_unit_interval(double v, const char* name) {
  if (!(v > 0.0 && v < 1.0)) {
    throw ParameterError(std::string(name) + " must lie in (0, 1), got " + num(v));
  }
}

std::size_t pow2_above(std::int64_t x) {
  std::size_t n = 8;
  while (static_cast<std::int64_t>(n) <= x) n <<= 1;
  return n;
}

// Grid that resolves the degree while being at least `base`.
CircleGrid grid_for(const CircleGrid& base, std::int64_t degree) {
  if (static_cast<std::int64_t>(base.size()) > 4 * degree) return base;
  return CircleGrid(pow2_above(4 * degree));
}

std::int64_t count_nonpositive(const TrigPoly& P) {
  std::int64_t n = 0;
  for (const auto& kv : P.coeffs()) n += kv.first <= 0 ? 1 : 0;
  return n;
}

double coeff_linf(const TrigPoly& P) { return coeff_norms(P).linf; }
double coeff_l1(const TrigPoly& P) { return coeff_norms(P).l1; }

}  // namespace

// ---------------------------------------------------------------- report

bool ApproximantReport::all_pass() const { return first_failure() == nullptr; }

const Requirement* ApproximantReport::first_failure() const {
  for (const auto& r : requirements) {
    if (!r.pass) return &r;
  }
  return nullptr;
}

const Requirement& ApproximantReport::requirement(std::string_view name) const {
  for (const auto& r : requirements) {
    if (r.name == name) return r;
  }
  throw ParameterError("no requirement named '" + std::string(name) + "'");
}

double ApproximantReport::diagnostic(std::string_view name) const {
  const auto it = diagnostics.find(std::string(name));
  if (it == diagnostics.end()) {
    throw ParameterError("no diagnostic named '" + std::string(name) + "'");
  }
  return it->second;
}

void ApproximantReport::add_requirement(std::string name, std::string relation, double measured,
                                        double bound) {
  bool pass = false;
  if (relation == "<") {
    pass = measured < bound;
  } else if (relation == ">") {
    pass = measured > bound;
  } else if (relation == "==") {
    pass = measured == bound;
  } else {
    throw ParameterError("unknown relation '" + relation + "'");
  }
  requirements.push_back({std::move(name), std::move(relation), measured, bound, pass});
}

void ApproximantReport::enforce() const {
  if (const Requirement* r = first_failure()) {
    throw CertificateFailure(r->name, r->measured, r->bound);
  }
}

nlohmann::json ApproximantReport::to_json() const {
  nlohmann::json req = nlohmann::json::object();
  for (const auto& r : requirements) {
    req[r.name] = {{"bound", r.bound},
                   {"measured", r.measured},
                   {"pass", r.pass},
                   {"relation", r.relation}};
  }
  nlohmann::json diag = nlohmann::json::object();
  for (const auto& [k, v] : diagnostics) diag[k] = v;
  return {{"requirements", req},
          {"diagnostics", diag},
          {"all_pass", all_pass()},
          {"degree", poly.degree()},
          {"support", poly.support_size()}};
}

void write_mask(std::ostream& out, const std::vector<bool>& mask) {
  for (bool b : mask) out << (b ? '1' : '0');
  out << '\n';
}

std::vector<bool> read_mask(std::istream& in) {
  std::string line;
  std::getline(in, line);
  const std::string body = csv::trim(line);
  std::vector<bool> mask;
  mask.reserve(body.size());
  for (char c : body) {
    if (c != '0' && c != '1') throw ParameterError("mask may contain only 0 and 1");
    mask.push_back(c == '1');
  }
  return mask;
}

double measure_above(const std::vector<Complex>& values, double threshold) {
  if (values.empty()) return 0.0;
  std::size_t c = 0;
  for (const auto& v : values) c += std::abs(v) > threshold ? 1 : 0;
  return static_cast<double>(c) / static_cast<double>(values.size());
}

double measure_above(const std::vector<Complex>& values, const std::vector<double>& threshold) {
  if (values.size() != threshold.size()) throw ParameterError("threshold size mismatch");
  if (values.empty()) return 0.0;
  std::size_t c = 0;
  for (std::size_t j = 0; j < values.size(); ++j) c += std::abs(values[j]) > threshold[j] ? 1 : 0;
  return static_cast<double>(c) / static_cast<double>(values.size());
}

// ---------------------------------------------------------------- Lemma 3

ApproximantReport analytic_unit(double eps, const AnalyticUnitOptions& options) {
  require_unit_interval(eps, "eps");
  if (options.start_degree < 1 || options.max_degree < options.start_degree) {
    throw ParameterError("analytic_unit needs 1 <= start_degree <= max_degree");
  }
  if (!(options.arc_fraction > 0.0 && options.arc_fraction < 1.0 / eps) ||
      !(options.transition > 0.0)) {
    throw ParameterError("analytic_unit arc shape out of range");
  }
  const std::size_t W = std::max(options.work_grid, pow2_above(4 * options.max_degree));
  const CircleGrid work(W);

  // g: -L off the arc, H on it, erf edges; zero mean. |F| = e^g = eps/2 off the arc.
  const double half = kPi * options.arc_fraction * eps;
  const double width = options.transition * half;
  const double L = std::log(2.0 / eps);
  std::vector<double> ind(W);
  double m = 0.0;
  for (std::size_t j = 0; j < W; ++j) {
    const double t = work.point(j);
    ind[j] = 0.5 * (std::erf((t + half) / width) - std::erf((t - half) / width));
    m += ind[j];
  }
  m /= static_cast<double>(W);
  const double H = L * (1.0 - m) / m;
  std::vector<Complex> g(W);
  double mean = 0.0;
  for (std::size_t j = 0; j < W; ++j) {
    g[j] = -L + (H + L) * ind[j];
    mean += g[j].real();
  }
  mean /= static_cast<double>(W);
  for (auto& v : g) v -= mean;

  // Conjugate function: multiplier -i sign(k).
  const auto gc = fft::analyze(g);
  const auto half_w = static_cast<std::int64_t>(W / 2);
  std::vector<std::pair<std::int64_t, Complex>> conj;
  conj.reserve(W);
  for (std::int64_t k = -half_w; k < half_w; ++k) {
    if (k == 0) continue;
    const Complex c = gc[static_cast<std::size_t>(k + half_w)];
    conj.emplace_back(k, Complex(0.0, k > 0 ? -1.0 : 1.0) * c);
  }
  const auto gt = fft::synthesize(conj, W);
  std::vector<Complex> F(W);
  for (std::size_t j = 0; j < W; ++j) F[j] = std::exp(Complex(g[j].real(), gt[j].real()));
  const auto Fc = fft::analyze(F);
  auto Fhat = [&](std::int64_t k) { return Fc[static_cast<std::size_t>(k + half_w)]; };

  double negative_mass = 0.0;
  for (std::int64_t k = -half_w; k < 0; ++k) negative_mass = std::max(negative_mass, std::abs(Fhat(k)));

  ApproximantReport report;
  report.diagnostics["arc_height"] = H;
  report.diagnostics["off_arc_level"] = -L;
  report.diagnostics["work_grid"] = static_cast<double>(W);
  report.diagnostics["F_mean_error"] = std::abs(Fhat(0) - 1.0);
  report.diagnostics["F_negative_coeff_max"] = negative_mass;

  std::int64_t D = options.start_degree;
  double l0 = 1.0;
  while (true) {
    TrigPoly R;
    for (std::int64_t k = 1; k <= D; ++k) {
      const Complex c = -Fhat(k);
      if (c != Complex{}) R.set(k, c);
    }
    const CircleGrid eval = grid_for(options.grid, D);
    SampledFunction diff = evaluate(R, eval);
    for (auto& v : diff.values) v -= 1.0;
    l0 = l0_norm(diff);
    report.poly = std::move(R);
    report.diagnostics["truncation_degree"] = static_cast<double>(D);
    report.diagnostics["eval_grid"] = static_cast<double>(eval.size());
    if (l0 < eps || D >= options.max_degree) break;
    D = std::min(2 * D, options.max_degree);
  }
  report.add_requirement("nonpositive frequencies", "==",
                         static_cast<double>(count_nonpositive(report.poly)), 0.0);
  report.add_requirement("l0(R - 1)", "<", l0, eps);
  if (options.strict && !report.all_pass()) {
    if (l0 >= eps) {
      throw ConstructionError("analytic_unit(" + num(eps) + "): l0(R - 1) = " + num(l0) +
                              " at the degree cap " + std::to_string(options.max_degree) +
                              " (F mean error " + num(report.diagnostics["F_mean_error"]) + ")");
    }
    report.enforce();
  }
  return report;
}

// ---------------------------------------------------------------- Lemma 2

TrigPoly triangle_partial_sum(double width, std::int64_t degree) {
  if (degree < 0) throw ParameterError("degree must be >= 0");
  TrigPoly P;
  for (std::int64_t k = -degree; k <= degree; ++k) {
    const double c = triangle_coeff(width, k);
    if (c != 0.0) P.set(k, c);
  }
  return P;
}

std::int64_t triangle_degree_for_tail(double width, double tol) {
  if (!(tol > 0.0)) throw ParameterError("tail tolerance must be positive");
  auto ok = [&](std::int64_t N) { return triangle_tail_interval(width, N).hi < tol; };
  std::int64_t hi = 1;
  while (!ok(hi)) {
    if (hi > (std::int64_t{1} << 40)) {
      throw ParameterError("triangle tail tolerance " + num(tol) + " is out of reach");
    }
    hi *= 2;
  }
  std::int64_t lo = hi / 2;  // ok(lo) false unless lo == 0
  if (lo == 0) return hi;
  while (hi - lo > 1) {
    const std::int64_t mid = lo + (hi - lo) / 2;
    (ok(mid) ? hi : lo) = mid;
  }
  return hi;
}

namespace {

struct KornerPieces {
  int K = 0;
  TrigPoly F;  // triangle(2 pi / K) partial sum
  TrigPoly G;  // 1 - g, i.e. zero-mean part with G^(0) = 0
  double F_l1_error = 0.0;
  double G_l1_error = 0.0;
};

// Q_s = T^s(F) G_[N_s]; T^s shifts by 2 pi s / K, phases taken exactly mod K.
TrigPoly korner_block(const KornerPieces& p, int s, std::int64_t N) {
  TrigPoly Q;
  for (const auto& [a, ga] : p.G.coeffs()) {
    const std::int64_t base = checked::mul(a, N);
    for (const auto& [b, fb] : p.F.coeffs()) {
      const std::int64_t r = ((b * s) % p.K + p.K) % p.K;
      const double angle = 2.0 * kPi * static_cast<double>(r) / static_cast<double>(p.K);
      Q.add(checked::add(base, b), ga * fb * Complex(std::cos(angle), std::sin(angle)));
    }
  }
  return Q;
}

// Number of frequencies shared by two or more blocks.
std::int64_t block_collisions(const std::vector<TrigPoly>& blocks) {
  std::vector<std::int64_t> keys;
  for (const auto& B : blocks) {
    for (const auto& kv : B.coeffs()) keys.push_back(kv.first);
  }
  std::sort(keys.begin(), keys.end());
  std::int64_t c = 0;
  for (std::size_t i = 1; i < keys.size(); ++i) c += keys[i] == keys[i - 1] ? 1 : 0;
  return c;
}

bool blocks_consecutive(const std::vector<TrigPoly>& blocks) {
  for (std::size_t i = 1; i < blocks.size(); ++i) {
    if (!follows(blocks[i], blocks[i - 1])) return false;
  }
  return true;
}

TrigPoly sum_blocks(const std::vector<TrigPoly>& blocks) {
  TrigPoly Q;
  for (const auto& B : blocks) Q += B;
  return Q;
}

std::vector<TrigPoly> korner_blocks(const KornerPieces& p, const std::vector<std::int64_t>& N) {
  std::vector<TrigPoly> blocks;
  blocks.reserve(N.size());
  for (int s = 1; s <= p.K; ++s) blocks.push_back(korner_block(p, s, N[static_cast<std::size_t>(s - 1)]));
  return blocks;
}

// N_s = K (2 deg F + deg G + 2)^s.
std::vector<std::int64_t> consecutive_frequencies(int K, std::int64_t degF, std::int64_t degG) {
  const std::int64_t base = 2 * degF + degG + 2;
  std::vector<std::int64_t> N;
  for (int s = 1; s <= K; ++s) {
    try {
      N.push_back(checked::mul(K, checked::pow(base, s)));
    } catch (const OverflowError&) {
      throw OverflowError("N_" + std::to_string(s) + " = " + std::to_string(K) + " * " +
                          std::to_string(base) + "^" + std::to_string(s) + " leaves int64");
    }
  }
  return N;
}

}  // namespace

ApproximantReport korner_polynomial(const KornerParams& params) {
  require_unit_interval(params.eps, "eps");
  require_unit_interval(params.delta, "delta");
  const int K = params.K > 0 ? params.K : static_cast<int>(std::floor(1.0 / params.delta)) + 1;
  if (K < 2) throw ParameterError("Korner K must be >= 2");
  if (1.0 / K >= params.delta) {
    throw ParameterError("Korner K = " + std::to_string(K) + " needs 1/K < delta = " +
                         num(params.delta));
  }
  const CircleGrid& grid = params.grid;
  const double wf = 2.0 * kPi / K;
  const double h = kPi * params.eps / 4.0;
  const double g0 = triangle_coeff(h, 0);

  std::int64_t dF = params.f_degree;
  std::int64_t dG = params.g_degree;
  if (params.approx_l1_tol > 0.0) {
    if (dF == 0) dF = triangle_degree_for_tail(wf, params.approx_l1_tol);
    if (dG == 0) dG = triangle_degree_for_tail(h, params.approx_l1_tol * g0);
  }
  if (dF == 0) dF = K - 1;
  if (dG == 0) dG = std::max<std::int64_t>(1, std::llround(8.0 / params.eps) - 1);

  KornerPieces p;
  p.K = K;
  p.F = triangle_partial_sum(wf, dF);
  for (std::int64_t k = -dG; k <= dG; ++k) {
    if (k == 0) continue;
    const double c = triangle_coeff(h, k);
    if (c != 0.0) p.G.set(k, -c / g0);
  }
  p.F_l1_error = triangle_tail_interval(wf, std::max<std::int64_t>(dF, 1)).hi;
  p.G_l1_error = triangle_tail_interval(h, dG).hi / g0;

  std::vector<std::int64_t> N = params.N;
  std::vector<TrigPoly> blocks;
  if (!N.empty()) {
    if (static_cast<int>(N.size()) != K) {
      throw ParameterError("Korner needs exactly K = " + std::to_string(K) + " frequencies N_s");
    }
    blocks = korner_blocks(p, N);
  } else if (params.layout == KornerLayout::Consecutive) {
    N = consecutive_frequencies(K, dF, dG);
    blocks = korner_blocks(p, N);
  } else {
    // Seeded search over N in [2 deg F + 1, (M/4 - 1 - deg F) / deg G]. Blocks
    // may share frequencies: on desk grids no collision-free layout meets the
    // measure bound, so max|Q^| is measured rather than inferred from 1/K.
    // Score is the worse of the two ratio-to-bound values.
    const auto max_degree = static_cast<std::int64_t>(grid.size() / 4) - 1;
    const std::int64_t lo = 2 * dF + 1;
    const std::int64_t hi = (max_degree - dF) / dG;
    if (hi - lo + 1 < K) {
      throw ConstructionError("Korner search: only " + std::to_string(std::max<std::int64_t>(0, hi - lo + 1)) +
                              " admissible N_s on a grid of size " + std::to_string(grid.size()) +
                              ", need K = " + std::to_string(K));
    }
    std::mt19937_64 rng(params.seed);
    const auto range = static_cast<std::uint64_t>(hi - lo + 1);
    // Dense coefficient buffer over [-max_degree, max_degree]; the phases of
    // T^s are tabulated once.
    std::vector<Complex> dense(static_cast<std::size_t>(2 * max_degree + 1));
    std::vector<std::vector<Complex>> fphase(static_cast<std::size_t>(K));
    for (int s = 1; s <= K; ++s) {
      for (const auto& [b, fb] : p.F.coeffs()) {
        const std::int64_t r = ((b * s) % K + K) % K;
        const double angle = 2.0 * kPi * static_cast<double>(r) / static_cast<double>(K);
        fphase[static_cast<std::size_t>(s - 1)].push_back(fb * Complex(std::cos(angle), std::sin(angle)));
      }
    }
    std::vector<std::pair<std::int64_t, Complex>> terms;
    double best_score = 0.0;
    for (int trial = 0; trial < params.trials; ++trial) {
      std::set<std::int64_t> pick;
      while (static_cast<int>(pick.size()) < K) pick.insert(lo + static_cast<std::int64_t>(rng() % range));
      std::vector<std::int64_t> cand(pick.begin(), pick.end());
      std::fill(dense.begin(), dense.end(), Complex{});
      for (int s = 1; s <= K; ++s) {
        const auto& ph = fphase[static_cast<std::size_t>(s - 1)];
        for (const auto& [a, ga] : p.G.coeffs()) {
          const std::int64_t base = a * cand[static_cast<std::size_t>(s - 1)] + max_degree;
          std::size_t i = 0;
          for (const auto& kv : p.F.coeffs()) dense[static_cast<std::size_t>(base + kv.first)] += ga * ph[i++];
        }
      }
      terms.clear();
      double linf = 0.0;
      for (std::size_t i = 0; i < dense.size(); ++i) {
        if (dense[i] == Complex{}) continue;
        linf = std::max(linf, std::abs(dense[i]));
        terms.emplace_back(static_cast<std::int64_t>(i) - max_degree, dense[i]);
      }
      auto vals = fft::synthesize(terms, grid.size());
      for (auto& v : vals) v -= 1.0;
      const double score = std::max(linf / params.delta, measure_above(vals, params.delta) / params.eps);
      if (N.empty() || score < best_score) {
        best_score = score;
        N = cand;
      }
    }
    if (N.empty()) throw ParameterError("Korner search needs trials >= 1");
    blocks = korner_blocks(p, N);
  }

  ApproximantReport report;
  report.poly = sum_blocks(blocks);
  const TrigPoly& Q = report.poly;
  const SampledFunction vals = evaluate(Q, grid);
  std::vector<Complex> diff(vals.size());
  for (std::size_t j = 0; j < diff.size(); ++j) diff[j] = vals.values[j] - 1.0;
  const double sstar = sample_s_star_star(Q, grid).sup_abs();

  report.add_requirement("Q^(0) == 0", "==", std::abs(Q.coeff(0)), 0.0);
  report.add_requirement("max|Q^| < delta", "<", coeff_linf(Q), params.delta);
  report.add_requirement("m{|Q - 1| > delta} < eps", "<", measure_above(diff, params.delta),
                         params.eps);
  report.add_requirement("N_s > 2 deg F", ">",
                         static_cast<double>(*std::min_element(N.begin(), N.end())),
                         static_cast<double>(2 * p.F.degree()));
  report.add_requirement("||S**(Q)||_inf * eps < budget", "<", sstar * params.eps,
                         params.sstar_budget);

  auto& d = report.diagnostics;
  d["K"] = K;
  d["deg_F"] = static_cast<double>(p.F.degree());
  d["deg_G"] = static_cast<double>(p.G.degree());
  d["F_l1_error"] = p.F_l1_error;
  d["G_l1_error"] = p.G_l1_error;
  d["sstar_sup"] = sstar;
  d["consecutive"] = blocks_consecutive(blocks) ? 1.0 : 0.0;
  d["block_collisions"] = static_cast<double>(block_collisions(blocks));
  for (std::size_t s = 0; s < N.size(); ++s) d["N_" + std::to_string(s + 1)] = static_cast<double>(N[s]);
  if (params.strict) report.enforce();
  return report;
}

// ---------------------------------------------------------------- Lemma 9

double analytic_support_lower_bound(double eps) {
  if (!(eps > 0.0 && eps < 1.0)) throw ParameterError("eps must lie in (0, 1)");
  // ||1 - Q||_2^2 = 1 + sum |Q^(k)|^2 < 1 + n eps^2.
  const double l2 = std::exp((1.0 - 2.0 * (1.0 - eps) / eps) * std::log(eps));
  return std::max(0.0, (l2 - 1.0) / (eps * eps));
}

namespace {

// |wrap(t)| for t reduced to [-pi, pi).
double circle_abs(double t) {
  double u = std::fmod(t + kPi, 2.0 * kPi);
  if (u < 0) u += 2.0 * kPi;
  return std::abs(u - kPi);
}

}  // namespace

ApproximantReport analytic_korner(double eps, const AnalyticKornerOptions& options) {
  if (!(eps > 0.0 && eps < 0.5)) {
    throw ParameterError("analytic_korner needs eps in (0, 1/2), got " + num(eps));
  }
  const CircleGrid& grid = options.grid;
  const double jensen = analytic_support_lower_bound(eps);
  const double reach = static_cast<double>(grid.size() / 4);
  if (options.jensen_precheck && jensen >= reach) {
    throw ConstructionError("analytic_korner(" + num(eps) + "): any analytic Q meeting the bounds has at least " +
                            num(std::ceil(jensen)) + " nonzero coefficients (Jensen), but a grid of size " +
                            std::to_string(grid.size()) + " resolves degree < " + num(reach));
  }

  KornerPieces p;
  if (options.G.empty()) {
    AnalyticUnitOptions uo = options.unit;
    uo.strict = true;
    p.G = analytic_unit(eps / 4.0, uo).poly;
  } else {
    if (!options.G.is_analytic()) throw ParameterError("supplied G must be analytic");
    p.G = options.G;
  }
  const double G1 = coeff_l1(p.G);

  const auto k_floor = [&](double x) { return static_cast<std::int64_t>(std::floor(x)) + 1; };
  const std::int64_t K_def = k_floor(std::pow(2.0 * G1 / eps, 2.0));
  const std::int64_t K_chain = k_floor(std::pow(G1 / eps, 2.0));
  const std::int64_t K_min = std::max(K_def, K_chain);
  const std::int64_t K = options.K > 0 ? options.K : K_min;
  if (K > (std::int64_t{1} << 30)) throw OverflowError("analytic_korner K = " + std::to_string(K));
  p.K = static_cast<int>(K);
  const double wf = 2.0 * kPi / static_cast<double>(K);
  const double ftol = eps / (10.0 * static_cast<double>(K) * G1);
  const std::int64_t dF = triangle_degree_for_tail(wf, ftol);
  p.F = triangle_partial_sum(wf, dF);
  p.F_l1_error = triangle_tail_interval(wf, dF).hi;

  std::vector<std::int64_t> N = options.N;
  if (N.empty()) {
    N = consecutive_frequencies(p.K, p.F.degree(), p.G.degree());
  } else if (static_cast<std::int64_t>(N.size()) != K) {
    throw ParameterError("analytic_korner needs exactly K = " + std::to_string(K) + " frequencies N_s");
  }
  const auto blocks = korner_blocks(p, N);

  ApproximantReport report;
  report.poly = sum_blocks(blocks);
  const TrigPoly& Q = report.poly;
  grid.require_degree(Q.degree());
  const SampledFunction vals = evaluate(Q, grid);
  const std::size_t M = grid.size();

  // U_s: points of the support of T^s f where G_[N_s] is not yet eps/4-close to 1.
  std::vector<bool> E(M, true);
  for (int s = 1; s <= p.K; ++s) {
    const std::int64_t Ns = N[static_cast<std::size_t>(s - 1)];
    for (std::size_t j = 0; j < M; ++j) {
      if (circle_abs(grid.point(j) + wf * s) > wf) continue;
      Complex g{};
      for (const auto& [k, c] : p.G.coeffs()) g += c * grid.unit(checked::mul(k, Ns), j);
      if (std::abs(g - 1.0) >= eps / 4.0) E[j] = false;
    }
  }
  std::size_t e_count = 0;
  double sup_on_E = 0.0;
  for (std::size_t j = 0; j < M; ++j) {
    if (!E[j]) continue;
    ++e_count;
    sup_on_E = std::max(sup_on_E, std::abs(vals.values[j] - 1.0));
  }
  double l2_sup = 0.0;
  double big_sup = 0.0;
  for_each_partial_sum(Q, grid, [&](std::int64_t, const std::vector<Complex>& v) {
    double acc = 0.0;
    for (std::size_t j = 0; j < M; ++j) {
      if (E[j]) acc += std::norm(v[j]);
    }
    if (e_count > 0) l2_sup = std::max(l2_sup, std::sqrt(acc / static_cast<double>(e_count)));
    big_sup = std::max(big_sup, measure_above(v, 2.0));
  });

  report.add_requirement("K >= K_min", ">", static_cast<double>(K), static_cast<double>(K_min - 1));
  report.add_requirement("nonpositive frequencies", "==", static_cast<double>(count_nonpositive(Q)), 0.0);
  report.add_requirement("max|Q^| < eps", "<", coeff_linf(Q), eps);
  report.add_requirement("m(T \\ E) < eps", "<",
                         1.0 - static_cast<double>(e_count) / static_cast<double>(M), eps);
  report.add_requirement("sup_E |Q - 1| < eps", "<", sup_on_E, eps);
  // Mean over E: at least the normalized-measure L2(E) norm.
  report.add_requirement("sup_n ||S_n Q||_L2(E) < 2", "<", l2_sup, 2.0);
  report.add_requirement("sup_n m{|S_n Q| > 2} < eps", "<", big_sup, eps);
  report.exceptional_set = std::move(E);

  auto& d = report.diagnostics;
  d["K"] = static_cast<double>(K);
  d["G_l1"] = G1;
  d["deg_F"] = static_cast<double>(p.F.degree());
  d["deg_G"] = static_cast<double>(p.G.degree());
  d["F_l1_error"] = p.F_l1_error;
  d["jensen_support_lower_bound"] = jensen;
  d["coeff_bound_G_l1_over_K"] = G1 / static_cast<double>(K);
  d["consecutive"] = blocks_consecutive(blocks) ? 1.0 : 0.0;
  if (options.strict) report.enforce();
  return report;
}

// ---------------------------------------------------------------- Lemmas 4, 12

TrigPoly fejer_mean(const SampledFunction& f, std::int64_t n) {
  if (n < 1) throw ParameterError("Fejer mean needs n >= 1");
  if (f.has_extended()) throw ParameterError("Fejer mean needs a finite target");
  f.grid.require_degree(n - 1);
  const auto c = fft::analyze(f.values);
  const auto half = static_cast<std::int64_t>(f.size() / 2);
  TrigPoly P;
  for (std::int64_t k = -(n - 1); k <= n - 1; ++k) {
    const Complex v = c[static_cast<std::size_t>(k + half)] *
                      (1.0 - static_cast<double>(std::llabs(k)) / static_cast<double>(n));
    if (std::abs(v) > 1e-15) P.set(k, v);
  }
  return P;
}

TrigPoly fejer_approximant(const SampledFunction& f, double eps, double delta, std::int64_t cap) {
  const std::int64_t limit = std::min<std::int64_t>(cap, static_cast<std::int64_t>(f.size() / 4));
  double last = 1.0;
  for (std::int64_t n = 1; n - 1 <= limit; n *= 2) {
    TrigPoly P = fejer_mean(f, n);
    const auto v = evaluate(P, f.grid).values;
    std::vector<Complex> diff(v.size());
    for (std::size_t j = 0; j < v.size(); ++j) diff[j] = v[j] - f.values[j];
    last = measure_above(diff, delta);
    if (last < eps) return P;
  }
  throw ConstructionError("Fejer approximation: m{|f - sigma_n f| > " + num(delta) + "} = " + num(last) +
                          " >= " + num(eps) + " at the degree cap " + std::to_string(limit));
}

std::int64_t block_frequency(int s, std::int64_t a, int k) {
  if (s < 1 || a < 1 || k + s < 0) throw ParameterError("p(k) needs s, a >= 1 and k >= -s");
  return checked::mul(a, checked::pow(2 * s, k + s));
}

TrigPoly assemble_block_polynomial(const TrigPoly& P1, const TrigPoly& Q2, const TrigPoly& Q3,
                                   int s, std::int64_t a) {
  if (P1.degree() > s || Q2.degree() > s || Q3.degree() > s) {
    throw ParameterError("block assembly needs every ingredient degree <= s = " + std::to_string(s));
  }
  if (!Q2.is_analytic()) throw ParameterError("Q2 must be analytic");
  if (Q3.coeff(0) != Complex{}) throw ParameterError("Q3 must have Q3^(0) = 0");
  TrigPoly P2;
  for (const auto& [k, c] : P1.coeffs()) {
    const std::int64_t pk = block_frequency(s, a, static_cast<int>(k));
    for (const auto& [j, q] : Q2.coeffs()) P2.add(checked::add(k, checked::mul(j, pk)), c * q);
  }
  if (P2.empty() || Q3.empty()) return {};
  return special_product(P2, Q3, block_frequency(s, a, s + 2));
}

namespace {

struct BlockIngredients {
  TrigPoly P1, Q2, Q3;
  std::int64_t S = 0;
};

void check_block_args(const SampledFunction& f, int s, std::int64_t a) {
  if (s < 1 || s > kMaxBlockS) {
    throw ParameterError("block size s must lie in 1.." + std::to_string(kMaxBlockS));
  }
  if (a < 1) throw ParameterError("block scale a must be >= 1");
  if (f.has_extended()) throw ParameterError("block approximants need a finite target");
}

// Throws once the running max degree reaches s (S then only bounded below).
void grow_S(BlockIngredients& in, std::int64_t degree, int s) {
  in.S = std::max(in.S, degree);
  if (in.S >= s) throw BlockTooSmall(s, in.S, false);
}

std::vector<Complex> residual(const TrigPoly& P, const SampledFunction& f) {
  auto v = sample(P, f.grid).values;
  for (std::size_t j = 0; j < v.size(); ++j) v[j] -= f.values[j];
  return v;
}

std::int64_t count_outside(const TrigPoly& P, const SpectrumSet& block) {
  std::int64_t c = 0;
  for (const auto& kv : P.coeffs()) c += block.contains(kv.first) ? 0 : 1;
  return c;
}

void record_ingredients(ApproximantReport& report, const BlockIngredients& in, std::int64_t s,
                        std::int64_t a) {
  auto& d = report.diagnostics;
  d["S"] = static_cast<double>(in.S);
  d["s"] = static_cast<double>(s);
  d["a"] = static_cast<double>(a);
  d["deg_P1"] = static_cast<double>(in.P1.degree());
  d["deg_Q2"] = static_cast<double>(in.Q2.degree());
  d["deg_Q3"] = static_cast<double>(in.Q3.degree());
  d["degree"] = static_cast<double>(report.poly.degree());
}

// P2 degree from the assembly formula, for the p(s+2) requirement.
std::int64_t p2_degree(const BlockIngredients& in, int s, std::int64_t a) {
  std::int64_t d = 0;
  for (const auto& kv : in.P1.coeffs()) {
    const std::int64_t pk = block_frequency(s, a, static_cast<int>(kv.first));
    for (const auto& qv : in.Q2.coeffs()) {
      d = std::max<std::int64_t>(d, std::llabs(checked::add(kv.first, checked::mul(qv.first, pk))));
    }
  }
  return d;
}

}  // namespace

ApproximantReport block_approximant(const SampledFunction& f, double eps, double delta, int s,
                                    std::int64_t a, const BlockApproximantOptions& options) {
  require_unit_interval(eps, "eps");
  require_unit_interval(delta, "delta");
  check_block_args(f, s, a);
  BlockIngredients in;
  const bool zero = f.sup_abs() == 0.0;
  if (!zero) {
    in.P1 = fejer_approximant(f, eps / 3.0, delta / 3.0, options.fejer_cap);
    grow_S(in, in.P1.degree(), s);
    const double n1 = coeff_l1(in.P1);
    AnalyticUnitOptions uo = options.unit;
    uo.grid = f.grid;
    const double eps2 = eps / (6.0 * static_cast<double>(in.P1.degree()) + 3.0);
    const double delta2 = delta / (3.0 * n1);
    in.Q2 = analytic_unit(std::min(eps2, delta2), uo).poly;
    grow_S(in, in.Q2.degree(), s);
    KornerParams kp = options.korner;
    kp.eps = eps / 3.0;
    kp.delta = delta / (6.0 * n1 * coeff_l1(in.Q2));
    kp.grid = f.grid;
    in.Q3 = korner_polynomial(kp).poly;
    grow_S(in, in.Q3.degree(), s);
  }

  ApproximantReport report;
  report.poly = zero ? TrigPoly{} : assemble_block_polynomial(in.P1, in.Q2, in.Q3, s, a);
  const TrigPoly& P = report.poly;
  const auto res = residual(P, f);
  const auto sss = sample_s_star_star(P, f.grid).values;
  std::vector<double> thr(f.size());
  for (std::size_t j = 0; j < thr.size(); ++j) {
    thr[j] = options.sstar_budget * (std::abs(f.values[j]) + delta) / eps;
  }
  report.add_requirement("spec P outside B(s, a)", "==",
                         static_cast<double>(count_outside(P, block_B(s, a))), 0.0);
  report.add_requirement("p(s+2) > 2 deg P2", ">", static_cast<double>(block_frequency(s, a, s + 2)),
                         static_cast<double>(2 * p2_degree(in, s, a)));
  report.add_requirement("m{|P - f| > delta} < eps", "<", measure_above(res, delta), eps);
  report.add_requirement("m{S**(P) > C (|f| + delta) / eps} < eps", "<", measure_above(sss, thr), eps);
  record_ingredients(report, in, s, a);
  if (options.strict) report.enforce();
  return report;
}

ApproximantReport analytic_block_approximant(const SampledFunction& f, double eps, int s,
                                             std::int64_t a, const BlockApproximantOptions& options) {
  require_unit_interval(eps, "eps");
  check_block_args(f, s, a);
  BlockIngredients in;
  const bool zero = f.sup_abs() == 0.0;
  if (!zero) {
    in.P1 = fejer_approximant(f, eps / 3.0, eps / 3.0, options.fejer_cap);
    grow_S(in, in.P1.degree(), s);
    const double n1 = coeff_l1(in.P1);
    AnalyticUnitOptions uo = options.unit;
    uo.grid = f.grid;
    const double eps2 = eps / (6.0 * std::max(n1, static_cast<double>(in.P1.degree())) + 3.0);
    in.Q2 = analytic_unit(eps2, uo).poly;
    grow_S(in, in.Q2.degree(), s);
    AnalyticKornerOptions ko = options.analytic_korner;
    ko.grid = f.grid;
    in.Q3 = analytic_korner(eps / (6.0 * n1 * coeff_l1(in.Q2) + 3.0), ko).poly;
    grow_S(in, in.Q3.degree(), s);
  }

  ApproximantReport report;
  report.poly = zero ? TrigPoly{} : assemble_block_polynomial(in.P1, in.Q2, in.Q3, s, a);
  const TrigPoly& P = report.poly;
  SampledFunction diff(f.grid, residual(P, f));
  std::vector<double> thr(f.size());
  for (std::size_t j = 0; j < thr.size(); ++j) thr[j] = 2.0 * std::abs(f.values[j]) + eps;
  double sn_sup = measure_above(std::vector<Complex>(f.size()), thr);  // S_n P = 0 below the spectrum
  for_each_sampled_partial_sum(P, f.grid, [&](std::int64_t, const std::vector<Complex>& v) {
    sn_sup = std::max(sn_sup, measure_above(v, thr));
  });
  report.add_requirement("spec P outside D(s, a)", "==",
                         static_cast<double>(count_outside(P, block_D(s, a))), 0.0);
  report.add_requirement("p(s+2) > 2 deg P2", ">", static_cast<double>(block_frequency(s, a, s + 2)),
                         static_cast<double>(2 * p2_degree(in, s, a)));
  report.add_requirement("l0(f - P) < eps", "<", l0_norm(diff), eps);
  report.add_requirement("sup_n m{|S_n P| > 2|f| + eps} < eps", "<", sn_sup, eps);
  record_ingredients(report, in, s, a);
  if (options.strict) report.enforce();
  return report;
}

}  // namespace menshov
