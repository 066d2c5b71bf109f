#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>

#include <nlohmann/json.hpp>

#include "menshov/engines.hpp"
#include "menshov/errors.hpp"
#include "oracle.hpp"

using namespace menshov;

namespace {

constexpr double kPi = std::numbers::pi;

// Every block below is injective mod 8212 and the three B blocks (and the
// three D blocks) have pairwise disjoint residues, so grid projection is exact.
const CircleGrid kBlockGrid(8212);

SpectrumBuild manifest_of(std::vector<BlockRecord> blocks) {
  SpectrumBuild b;
  b.manifest = std::move(blocks);
  SpectrumSet all;
  for (const auto& r : b.manifest) all = set_union(all, r.materialize());
  b.spectrum = all;
  return b;
}

SpectrumBuild hadamard_blocks() {
  return manifest_of({{"B", 1, 128, {}}, {"B", 2, 65536, {}}, {"B", 3, 33554432, {}}});
}

SpectrumBuild d_blocks() {
  return manifest_of({{"D_nu", 1, 128, 128}, {"D_nu", 2, 65536, 65536},
                      {"D_nu", 3, 33554432, 33554432}});
}

SpectrumBuild squares_blocks() {
  return manifest_of({{"B_nu", 1, 152, 5776}, {"B_nu", 2, 375498, 35249687001}});
}

// Samples with the phase k t_j = 2 pi k (j - M/2) / M reduced mod M in
// integers first, so frequencies near 1e9 stay exact.
SampledFunction from_coeffs(const CircleGrid& g, const oracle::Coeffs& c) {
  SampledFunction f(g);
  const auto M = static_cast<__int128>(g.size());
  for (std::size_t j = 0; j < g.size(); ++j) {
    std::complex<long double> acc{};
    for (const auto& [k, v] : c) {
      const __int128 r = ((static_cast<__int128>(k) * (static_cast<__int128>(j) - M / 2)) % M + M) % M;
      const long double a = 2.0L * std::numbers::pi_v<long double> * static_cast<long double>(r) /
                            static_cast<long double>(M);
      acc += std::complex<long double>(v.real(), v.imag()) * std::complex<long double>(std::cos(a), std::sin(a));
    }
    f.values[j] = {static_cast<double>(acc.real()), static_cast<double>(acc.imag())};
  }
  return f;
}

double poly_gap(const TrigPoly& P, const oracle::Coeffs& c) {
  double gap = 0.0;
  for (const auto& [k, v] : c) gap = std::max(gap, std::abs(P.coeff(k) - v));
  for (const auto& [k, v] : P.coeffs()) {
    if (!c.count(k)) gap = std::max(gap, std::abs(v));
  }
  return gap;
}

const Requirement& find(const std::vector<Requirement>& rs, const std::string& name) {
  for (const auto& r : rs) {
    if (r.name == name) return r;
  }
  throw std::runtime_error("missing requirement " + name);
}

void expect_telescoping(const RepresentationRun& run) {
  for (std::size_t n = 0; n + 1 < run.stages.size(); ++n) {
    const auto pv = sample(run.stages[n].poly, run.target.grid).values;
    double err = 0.0;
    for (std::size_t j = 0; j < pv.size(); ++j) {
      err = std::max(err, std::abs(run.stages[n + 1].residual_before.values[j] -
                                   (run.stages[n].residual_before.values[j] - pv[j])));
    }
    EXPECT_LT(err, 1e-9) << "stage " << n + 1;
  }
}

std::vector<bool> interval_mask(const CircleGrid& g, double lo, double hi) {
  std::vector<bool> m(g.size());
  for (std::size_t j = 0; j < g.size(); ++j) {
    const double t = static_cast<double>(oracle::grid_point(j, g.size()));
    m[j] = t >= lo && t < hi;
  }
  return m;
}

// Harness provider: Q = e^{it}, E = {cos t > 0}.
AnalyticQ half_circle_provider(double, const CircleGrid& g) {
  AnalyticQ q;
  q.Q.set(1, 1.0);
  q.E.resize(g.size());
  for (std::size_t j = 0; j < g.size(); ++j) q.E[j] = std::cos(g.point(j)) > 0.0;
  return q;
}

}  // namespace

TEST(ErrorSchedule, Defaults) {
  const auto d = ErrorSchedule::dyadic(5);
  ASSERT_EQ(d.eps.size(), 5u);
  EXPECT_EQ(d.eps[2], 0.125);
  EXPECT_EQ(d.delta[2], 1.0 / 64);
  EXPECT_TRUE(d.valid());
  const auto s = ErrorSchedule::squares(4);
  EXPECT_EQ(s.eps[1], 0.25);
  EXPECT_EQ(s.delta[3], 1.0 / 256);
  EXPECT_TRUE(s.valid());
  ErrorSchedule bad{{0.5, 0.5}, {0.1, 0.01}};
  EXPECT_FALSE(bad.valid());
}

TEST(AeEngine, ZeroTargetKeepsEveryStageEmpty) {
  const CircleGrid g(2048);
  const auto run = run_ae_engine(SampledFunction(g), hadamard_blocks(), 3);
  ASSERT_EQ(run.stages.size(), 3u);
  for (const auto& s : run.stages) {
    EXPECT_TRUE(s.poly.empty());
    EXPECT_TRUE(s.all_pass());
    EXPECT_EQ(s.block->s, static_cast<int>(s.n));
  }
  EXPECT_TRUE(run.all_pass());
}

TEST(AeEngine, StepTargetExhaustsTheFaithfulBlocks) {
  const CircleGrid g(2048);
  const auto f = SampledFunction::from_real(g, [](double t) { return t >= 0 ? 1.0 : 0.0; });
  const auto run = run_ae_engine(f, hadamard_blocks(), 3);
  EXPECT_TRUE(run.exhausted);
  EXPECT_TRUE(run.stages.empty());
  EXPECT_NE(run.stop_reason.find("S >="), std::string::npos) << run.stop_reason;
  EXPECT_FALSE(run.all_pass());
}

TEST(AeEngine, ProjectionHarnessRecoversBlockComponents) {
  const auto build = hadamard_blocks();
  const auto b1 = block_B(1, 128).elements();
  const auto b2 = block_B(2, 65536).elements();
  const oracle::Coeffs part1{{b1.front(), {0.5, 0.25}}, {b1.back(), {-0.75, 0.0}}};
  // Below delta_1 = 1/4, so stage 1 already meets its measure certificate.
  const oracle::Coeffs part2{{b2[3], {0.0, 0.02}}, {b2[40], {0.01, -0.005}}};
  oracle::Coeffs all = part1;
  all.insert(part2.begin(), part2.end());
  const auto f = from_coeffs(kBlockGrid, all);
  AeEngineOptions opt;
  opt.approximant = projection_stage_approximant();
  const auto run = run_ae_engine(f, build, 3, opt);
  ASSERT_EQ(run.stages.size(), 3u);
  EXPECT_LT(poly_gap(run.stages[0].poly, part1), 1e-9);
  EXPECT_LT(poly_gap(run.stages[1].poly, part2), 1e-9);
  EXPECT_TRUE(run.stages[2].poly.empty());
  for (const auto& s : run.stages) {
    for (const auto& r : s.certificates) EXPECT_TRUE(r.pass) << s.n << ": " << r.name << " " << r.measured;
  }
  for (const auto& r : run.summary) EXPECT_TRUE(r.pass) << r.name << " " << r.measured;
  EXPECT_TRUE(run.all_pass());
  EXPECT_TRUE(follows(run.stages[1].poly, run.stages[0].poly));
  expect_telescoping(run);

  // Stream: stage order, increasing |k| inside a stage.
  const auto stream = run.coefficient_stream();
  ASSERT_EQ(stream.size(), 4u);
  EXPECT_EQ(std::abs(stream[0].first), std::min(std::abs(b1.front()), std::abs(b1.back())));
  EXPECT_TRUE(build.spectrum.contains(stream[3].first));
  EXPECT_GT(std::abs(stream[2].first), std::abs(stream[1].first));
}

TEST(AeEngine, ManifestExhaustionReturnsPartialRun) {
  const CircleGrid g(1024);
  const auto run = run_ae_engine(SampledFunction(g), manifest_of({{"B", 1, 128, {}}}), 2);
  EXPECT_EQ(run.stages.size(), 1u);
  EXPECT_TRUE(run.exhausted);
  EXPECT_FALSE(run.all_pass());
}

TEST(AeEngine, ProjectionRejectsAliasedBlocks) {
  const CircleGrid g(16384);  // 65536 = 0 mod M folds B(2, 65536)
  SampledFunction f(g);
  f.values[3] = 1.0;
  StageRequest req{&f, 0.25, 0.0625, 2, 65536, false, 1};
  EXPECT_THROW(projection_stage_approximant()(req), AliasingError);
}

TEST(RepresentationRun, JsonAndFiles) {
  const auto f = from_coeffs(kBlockGrid, {{block_B(1, 128).elements().back(), 1.0}});
  AeEngineOptions opt;
  opt.approximant = projection_stage_approximant();
  auto run = run_ae_engine(f, hadamard_blocks(), 2, opt);
  run.target_info = {{"name", "exp"}};
  const auto j = run.to_json();
  EXPECT_EQ(j["engine"], "ae");
  EXPECT_EQ(j["target"]["name"], "exp");
  ASSERT_EQ(j["stages"].size(), 2u);
  EXPECT_EQ(j["stages"][0]["block"]["kind"], "B");
  EXPECT_EQ(j["schedule"]["eps"][1], 0.25);
  EXPECT_TRUE(j["stages"][0]["certificates"].is_array());

  const auto dir = std::filesystem::temp_directory_path() / "menshov_engine_files";
  std::filesystem::remove_all(dir);
  run.write(dir.string());
  EXPECT_TRUE(std::filesystem::exists(dir / "manifest.json"));
  EXPECT_TRUE(std::filesystem::exists(dir / "stage_1.csv"));
  std::ifstream in(dir / "stream.csv");
  std::string header, row;
  std::getline(in, header);
  std::getline(in, row);
  EXPECT_EQ(header, "order_index,k,re,im");
  EXPECT_EQ(row.rfind("0,", 0), 0u);
  std::filesystem::remove_all(dir);
}

TEST(SquaresEngine, FaithfulBlocksAreExhausted) {
  const CircleGrid g(2048);
  const auto f = SampledFunction::from_real(g, [](double) { return 1.0; });
  const auto run = run_squares_engine(f, squares_blocks(), 4);
  EXPECT_TRUE(run.exhausted);
  EXPECT_FALSE(run.all_pass());
  // Nothing was subtracted: the median of |F| is still 1.
  EXPECT_EQ(find(run.summary, "median |F_N| < c1^N").measured, 1.0);
}

TEST(SquaresEngine, CosineModulationAndRecursion) {
  const auto inner = block_B(1, 152).elements();
  const oracle::Coeffs g1{{inner[1], {0.6, 0.0}}, {inner[7], {0.0, -0.3}}};
  const auto f = from_coeffs(kBlockGrid, g1);
  SquaresEngineOptions opt;
  opt.approximant = projection_stage_approximant();
  const auto run = run_squares_engine(f, squares_blocks(), 3, opt);
  ASSERT_EQ(run.stages.size(), 2u);
  EXPECT_TRUE(run.exhausted);
  const auto& s1 = run.stages[0];
  EXPECT_LT(poly_gap(s1.inner, g1), 1e-9);
  // P_1 = cos(nu t) P^1: halves at k +- nu.
  for (const auto& [k, c] : g1) {
    EXPECT_LT(std::abs(s1.poly.coeff(k + 5776) - 0.5 * c), 1e-9);
    EXPECT_LT(std::abs(s1.poly.coeff(k - 5776) - 0.5 * c), 1e-9);
  }
  for (const auto& s : run.stages) {
    EXPECT_TRUE(find(s.certificates, "spec P_n outside B(s, a, nu)").pass);
    EXPECT_TRUE(find(s.certificates, "max(S*(P_n) - S**(P^1_n)) <= 0").pass);
    EXPECT_TRUE(find(s.certificates, "P_n follows P_{n-1}").pass);
    EXPECT_LT(s.diagnostics.at("recursion_error"), 1e-12);
  }
  // Stage 1 reproduces F_1 cos(nu t) exactly, so r_1 = 0.
  EXPECT_TRUE(find(s1.certificates, "m{|F_n cos(nu_n t) - P_n| > 4^-n} < n^-2").pass);
  EXPECT_LT(s1.diagnostics.at("l0(r_n)"), 1e-9);
  // F_2 = F_1 (1 - cos nu t), checked against the target directly.
  for (std::size_t j = 0; j < kBlockGrid.size(); j += 97) {
    const double t = static_cast<double>(oracle::grid_point(j, kBlockGrid.size()));
    const Complex want = f.values[j] * (1.0 - std::cos(5776.0 * t));
    EXPECT_LT(std::abs(run.stages[1].residual_before.values[j] - want), 1e-9);
  }
}

TEST(SquaresEngine, RatioViolationIsAParameterError) {
  const CircleGrid g(1024);
  const auto f = from_coeffs(g, {{11, 1.0}});
  SquaresEngineOptions opt;
  opt.approximant = projection_stage_approximant();
  // nu_2 = 500 < 8 nu_1 = 800.
  const auto build = manifest_of({{"B_nu", 1, 1, 100}, {"B_nu", 1, 1, 500}});
  EXPECT_THROW(run_squares_engine(f, build, 2, opt), ParameterError);
  const auto ok = manifest_of({{"B_nu", 1, 1, 100}, {"B_nu", 1, 1, 900}});
  EXPECT_NO_THROW(run_squares_engine(f, ok, 2, opt));
}

TEST(AsymptoticEngine, DefaultProviderStopsOnTheJensenBound) {
  const CircleGrid g(4096);
  const auto f = SampledFunction::from_real(g, [](double t) { return t >= 0 ? 1.0 : -1.0; });
  const auto run = run_asymptotic_L2_engine(f, 4);
  EXPECT_TRUE(run.exhausted);
  EXPECT_TRUE(run.stages.empty());
  EXPECT_NE(run.stop_reason.find("stage 1"), std::string::npos);
  EXPECT_FALSE(run.all_pass());
}

TEST(AsymptoticEngine, HarnessProviderMechanics) {
  const CircleGrid g(4096);
  const auto f = SampledFunction::from_real(g, [](double t) { return std::cos(t) + 0.5 * std::sin(2 * t); });
  AsymptoticEngineOptions opt;
  opt.provider = half_circle_provider;
  const auto run = run_asymptotic_L2_engine(f, 3, opt);
  ASSERT_EQ(run.stages.size(), 3u);
  expect_telescoping(run);
  TrigPoly prev;
  for (const auto& s : run.stages) {
    EXPECT_TRUE(s.poly.is_analytic());
    EXPECT_TRUE(follows(s.poly, prev));
    const auto r = static_cast<std::int64_t>(s.diagnostics.at("r_n"));
    EXPECT_EQ(r, prev.degree() + 2 * s.inner.degree() + 1);
    EXPECT_EQ(s.poly, special_product(s.inner, TrigPoly{{1, 1.0}}, r));
    // E_n = {cos(r t) > 0} n {|G - F| <= 2^-(n+1)} from direct evaluation.
    const auto Gv = sample(s.inner, g).values;
    const double tol = std::ldexp(1.0, -static_cast<int>(s.n) - 1);
    std::size_t mismatch = 0;
    for (std::size_t j = 0; j < g.size(); ++j) {
      const long double t = oracle::grid_point(j, g.size());
      const long double c = std::cos(static_cast<long double>(r) * t);
      if (std::abs(c) < 1e-9) continue;
      const bool want = c > 0 && std::abs(Gv[j] - s.residual_before.values[j]) <= tol;
      mismatch += want != s.mask[j] ? 1 : 0;
    }
    EXPECT_EQ(mismatch, 0u) << "stage " << s.n;
    EXPECT_EQ(s.diagnostics.at("l2_exact"), 1.0);
    if (!s.poly.empty()) prev = s.poly;
  }
  for (auto k : run.spectrum.elements()) EXPECT_GT(k, 0);
}

TEST(AsymptoticEngine, DecompositionBoundDominatesTheSweep) {
  const CircleGrid g(2048);
  const auto f = SampledFunction::from_real(g, [](double t) { return t >= 0 ? 1.0 : -1.0; });
  AsymptoticEngineOptions opt;
  opt.provider = [](double, const CircleGrid& grid) {
    AnalyticQ q;
    q.Q = TrigPoly{{1, 0.5}, {2, Complex(0.0, 0.3)}, {4, -0.2}};
    q.E.assign(grid.size(), true);
    return q;
  };
  const auto exact = run_asymptotic_L2_engine(f, 2, opt);
  opt.exact_sweep_limit = 0.0;
  const auto bound = run_asymptotic_L2_engine(f, 2, opt);
  ASSERT_EQ(exact.stages.size(), bound.stages.size());
  for (std::size_t n = 0; n < exact.stages.size(); ++n) {
    EXPECT_EQ(bound.stages[n].diagnostics.at("l2_exact"), 0.0);
    EXPECT_GE(bound.stages[n].diagnostics.at("l2") + 1e-12, exact.stages[n].diagnostics.at("l2"));
    EXPECT_EQ(bound.stages[n].poly, exact.stages[n].poly);
  }
}

TEST(InfinityMode, FiniteTargetMatchesTheL2Engine) {
  const CircleGrid g(2048);
  const auto f = SampledFunction::from_real(g, [](double t) { return std::cos(t); });
  AsymptoticEngineOptions opt;
  opt.provider = half_circle_provider;
  const auto a = run_asymptotic_L2_engine(f, 2, opt);
  const auto b = run_infinity_mode(f, 2, opt);
  EXPECT_EQ(b.engine, "infinity");
  ASSERT_EQ(a.stages.size(), b.stages.size());
  for (std::size_t n = 0; n < a.stages.size(); ++n) EXPECT_EQ(a.stages[n].poly, b.stages[n].poly);
}

TEST(InfinityMode, ClipsAndSplitsCertificates) {
  const CircleGrid g(2048);
  SampledFunction f(g);
  f.extended.assign(g.size(), 0);
  for (std::size_t j = 0; j < g.size(); ++j) {
    const double t = g.point(j);
    if (t >= 0.0 && t < 1.0) f.extended[j] = 1;
  }
  AsymptoticEngineOptions opt;
  opt.provider = half_circle_provider;
  const auto run = run_infinity_mode(f, 2, opt);
  ASSERT_EQ(run.stages.size(), 2u);
  const auto p1 = sample(run.stages[0].poly, g).values;
  for (std::size_t j = 0; j < g.size(); ++j) {
    if (f.extended[j] != 1) continue;
    EXPECT_EQ(run.stages[0].residual_before.values[j], Complex(1.0, 0.0));
    EXPECT_LT(std::abs(run.stages[1].residual_before.values[j] - (2.0 - p1[j])), 1e-12);
  }
  for (const auto& s : run.stages) {
    EXPECT_NO_THROW(find(s.certificates, "sup_k ||S_k P_n||_L2(W n A) < C 2^-n"));
    const auto& b = find(s.certificates, "sup_k ||S_k P_n||_L2(W n B) < C");
    EXPECT_TRUE(std::isfinite(b.measured));
  }
  EXPECT_THROW(run_asymptotic_L2_engine(f, 1, opt), ParameterError);
}

TEST(StopTimeEngine, ZeroTargetStopsAfterOneStage) {
  const CircleGrid g(2048);
  const auto I = interval_mask(g, 0.0, kPi / 2);
  const auto res = run_stoptime_engine(SampledFunction(g), I, d_blocks(), 0.25);
  EXPECT_TRUE(res.P.empty());
  ASSERT_EQ(res.run.stages.size(), 1u);
  EXPECT_FALSE(res.run.exhausted);
  for (const auto& r : res.run.summary) EXPECT_TRUE(r.pass) << r.name;
}

TEST(StopTimeEngine, IndicatorExhaustsTheFaithfulBlocks) {
  const CircleGrid g(2048);
  const auto I = interval_mask(g, 0.0, kPi / 2);
  SampledFunction f(g);
  for (std::size_t j = 0; j < g.size(); ++j) f.values[j] = I[j] ? 1.0 : 0.0;
  const auto res = run_stoptime_engine(f, I, d_blocks(), 0.25);
  // Either the Fejer step misses eps 2^-3 on this grid or the block is too small.
  EXPECT_TRUE(res.run.exhausted);
  EXPECT_EQ(res.run.stop_reason.rfind("stage 1: ", 0), 0u) << res.run.stop_reason;
  EXPECT_FALSE(find(res.run.summary, "l0(P - f) < eps").pass);
}

TEST(StopTimeEngine, StopTimeMechanics) {
  const auto& g = kBlockGrid;
  const auto I = interval_mask(g, 0.0, kPi / 2);
  SampledFunction f(g);
  for (std::size_t j = 0; j < g.size(); ++j) f.values[j] = I[j] ? 1.0 : 0.0;
  StopTimeOptions opt;
  opt.approximant = projection_stage_approximant();
  const auto res = run_stoptime_engine(f, I, d_blocks(), 0.25, opt);
  ASSERT_FALSE(res.run.stages.empty());
  expect_telescoping(res.run);
  std::vector<bool> before = I;
  for (const auto& s : res.run.stages) {
    for (std::size_t j = 0; j < g.size(); ++j) {
      EXPECT_TRUE(!s.mask[j] || before[j]);  // frozen points stay frozen, never outside I
    }
    before = s.mask;
    if (s.block) {
      TrigPoly shifted;
      for (const auto& [k, c] : s.inner.coeffs()) shifted.set(k + *s.block->nu, c);
      EXPECT_EQ(s.poly, shifted);
    }
  }
  EXPECT_TRUE(find(res.run.summary, "spec P outside Lambda").pass);
  EXPECT_TRUE(res.P.is_analytic());
}

TEST(StopTimeEngine, TargetMustVanishOffTheInterval) {
  const CircleGrid g(1024);
  const auto I = interval_mask(g, 0.0, 1.0);
  const auto f = SampledFunction::from_real(g, [](double) { return 1.0; });
  EXPECT_THROW(run_stoptime_engine(f, I, d_blocks(), 0.25), ParameterError);
}

TEST(DyadicCover, PassesPartitionTheCircle) {
  EXPECT_EQ(dyadic_cover(1).pass, 1);
  EXPECT_EQ(dyadic_cover(2).index, 1);
  EXPECT_EQ(dyadic_cover(3).pass, 2);
  EXPECT_EQ(dyadic_cover(6).index, 3);
  EXPECT_EQ(dyadic_cover(7).pass, 3);
  EXPECT_EQ(dyadic_cover(7).length, 0.125);
  const CircleGrid g(1000);
  for (int p = 1; p <= 4; ++p) {
    std::vector<int> hits(g.size(), 0);
    for (std::int64_t k = (1 << p) - 1; k <= (2 << p) - 2; ++k) {
      const auto arc = dyadic_cover(k);
      ASSERT_EQ(arc.pass, p);
      const auto m = arc.mask(g);
      for (std::size_t j = 0; j < g.size(); ++j) {
        if (!m[j]) continue;
        ++hits[j];
        const double lo = -kPi + 2 * kPi * static_cast<double>(arc.index) / (1 << p);
        EXPECT_GE(g.point(j), lo - 1e-12);
        EXPECT_LT(g.point(j), lo + 2 * kPi / (1 << p) + 1e-12);
      }
    }
    for (int h : hits) EXPECT_EQ(h, 1);
  }
}

TEST(MeasureEngine, ZeroTargetPassesEveryStage) {
  const CircleGrid g(1024);
  const auto run = run_measure_engine(SampledFunction(g), d_blocks(), 6);
  ASSERT_EQ(run.stages.size(), 6u);
  for (const auto& s : run.stages) EXPECT_TRUE(s.all_pass()) << s.n;
  EXPECT_TRUE(run.all_pass());
}

TEST(MeasureEngine, SawtoothStopsAtTheFirstArc) {
  const CircleGrid g(1024);
  const auto f = SampledFunction::from_real(g, [](double t) { return t / kPi; });
  const auto run = run_measure_engine(f, d_blocks(), 6);
  EXPECT_TRUE(run.exhausted);
  ASSERT_EQ(run.stages.size(), 1u);
  EXPECT_FALSE(find(run.stages[0].certificates, "stop-time run completed").pass);
}

TEST(TransformSeries, IdentityAndShiftRoundTrip) {
  const auto f = from_coeffs(kBlockGrid, {{block_B(1, 128).elements()[2], {0.5, -0.5}}});
  AeEngineOptions opt;
  opt.approximant = projection_stage_approximant();
  const auto run = run_ae_engine(f, hadamard_blocks(), 2, opt);
  const auto same = transform_series(run, {0, 1});
  EXPECT_EQ(same.merged(), run.merged());
  EXPECT_EQ(same.target.values, run.target.values);
  EXPECT_EQ(same.diagnostics.at("identity_error"), 0.0);

  const auto there = transform_series(run, {37, 1});
  EXPECT_EQ(there.spectrum, shift_spectrum(run.spectrum, 37));
  EXPECT_LT(there.diagnostics.at("identity_error"), 1e-12);
  const auto back = transform_series(there, {-37, 1});
  EXPECT_EQ(back.merged(), run.merged());
  double gap = 0.0;
  for (std::size_t j = 0; j < f.size(); ++j) gap = std::max(gap, std::abs(back.target.values[j] - f.values[j]));
  EXPECT_LT(gap, 1e-13);
  for (const auto& r : back.summary) EXPECT_TRUE(r.pass) << r.name;
}

TEST(TransformSeries, DecimationAveragesTheTarget) {
  const CircleGrid g(512);
  const oracle::Coeffs c{{2, {1.0, 0.0}}, {-6, {0.0, 0.5}}, {3, {0.25, 0.0}}, {8, {-0.3, 0.2}}};
  RepresentationRun run;
  run.engine = "manual";
  run.target = from_coeffs(g, c);
  run.spectrum = SpectrumSet({-6, 2, 3, 8});
  RunStage s1, s2;
  s1.n = 1;
  s1.poly = TrigPoly{{2, 1.0}, {3, 0.25}};
  s2.n = 2;
  s2.poly = TrigPoly{{-6, Complex(0.0, 0.5)}, {8, Complex(-0.3, 0.2)}};
  run.stages = {s1, s2};
  auto g_fn = [&c](double t) { return oracle::eval(c, t); };
  const auto out = transform_series(run, {0, 2}, g_fn);
  EXPECT_EQ(out.stages[0].poly, (TrigPoly{{1, 1.0}}));
  EXPECT_EQ(out.stages[1].poly, (TrigPoly{{-3, Complex(0.0, 0.5)}, {4, Complex(-0.3, 0.2)}}));
  EXPECT_EQ(out.spectrum, SpectrumSet({-3, 1, 4}));
  EXPECT_LT(out.diagnostics.at("identity_error"), 1e-12);
  EXPECT_EQ(out.diagnostics.at("target_nearest_sample"), 0.0);
  // The averaged target is the decimated series itself: the odd term cancels.
  const auto v = sample(out.merged(), g).values;
  for (std::size_t j = 0; j < g.size(); ++j) EXPECT_LT(std::abs(out.target.values[j] - v[j]), 1e-12);
  EXPECT_TRUE(out.all_pass());
}
