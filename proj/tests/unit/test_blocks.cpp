#include <gtest/gtest.h>

#include <cmath>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "menshov/blocks.hpp"
#include "menshov/errors.hpp"
#include "oracle.hpp"

using namespace menshov;

namespace {

using Set = std::set<std::int64_t>;

using oracle::ipow;
const auto& o_B2 = oracle::block_B2;
const auto& o_B = oracle::block_B;
const auto& o_D = oracle::block_D;

Set as_set(const SpectrumSet& L) { return Set(L.elements().begin(), L.elements().end()); }

}  // namespace

TEST(Blocks, B1Example) {
  EXPECT_EQ(as_set(block_B1(2, 3)), (Set{-6, -3, 3, 6}));
  EXPECT_EQ(as_set(block_B1_plus(2, 3)), (Set{3, 6}));
}

TEST(Blocks, B2Example) { EXPECT_EQ(as_set(block_B2(1, 1)), (Set{0, 2, 5})); }

TEST(Blocks, BExample) {
  EXPECT_EQ(as_set(block_B(1, 1)), (Set{-21, -18, -16, -14, -11, 11, 14, 16, 18, 21}));
}

TEST(Blocks, DExamples) {
  EXPECT_EQ(as_set(block_D(1, 1)), (Set{16, 18, 21}));
  EXPECT_EQ(as_set(block_D_nu(1, 1, 100)), (Set{116, 118, 121}));
}

TEST(Blocks, BNuSymmetric) {
  const auto L = block_B_nu(1, 1, 100);
  EXPECT_TRUE(L.is_symmetric());
  EXPECT_EQ(L.size(), 20u);
  EXPECT_TRUE(L.contains(79));
  EXPECT_TRUE(L.contains(-121));
}

TEST(Blocks, NuPreconditions) {
  EXPECT_THROW(block_B_nu(1, 1, 21), ParameterError);
  EXPECT_NO_THROW(block_B_nu(1, 1, 22));
  EXPECT_THROW(block_D_nu(1, 1, 0), ParameterError);
}

TEST(Blocks, BadParameters) {
  EXPECT_THROW(block_B(0, 1), ParameterError);
  EXPECT_THROW(block_B(1, 0), ParameterError);
  EXPECT_THROW(block_B(kMaxBlockS + 1, 1), ParameterError);
}

TEST(Blocks, OverflowIsExplicit) {
  // (12)^14 a overflows once a is around 7e3.
  EXPECT_NO_THROW(block_B(6, 1));
  EXPECT_THROW(block_B(6, 1'000'000), OverflowError);
  EXPECT_THROW(block_B1(2, std::int64_t{1} << 62), OverflowError);
}

TEST(Blocks, MatchesDefinitionsOnLattice) {
  for (int s = 1; s <= 3; ++s) {
    for (std::int64_t a = 1; a <= 50; ++a) {
      ASSERT_EQ(as_set(block_B(s, a)), o_B(s, a)) << "s=" << s << " a=" << a;
      ASSERT_EQ(as_set(block_D(s, a)), o_D(s, a)) << "s=" << s << " a=" << a;
      ASSERT_EQ(as_set(block_B2(s, a)), o_B2(s, a));
    }
  }
}

TEST(Blocks, LatticeGeometry) {
  for (int s = 1; s <= 3; ++s) {
    for (std::int64_t a = 1; a <= 50; ++a) {
      const auto B = block_B(s, a);
      ASSERT_TRUE(B.is_symmetric());
      const std::int64_t hole = ipow(2 * s, 2 * s + 1) * a;
      for (auto b : B.elements()) ASSERT_GT(std::abs(b), hole) << "s=" << s << " a=" << a;
      const auto cert = linearize(s, a);
      ASSERT_EQ(cert.entries.size(), B.size());
      const auto& e = B.elements();
      for (std::size_t i = 1; i < e.size(); ++i) {
        ASSERT_GT(e[i] - e[i - 1], a - 2 * cert.C_s);
      }
      Set ls;
      for (const auto& entry : cert.entries) {
        ASSERT_TRUE(ls.insert(entry.l).second) << "s=" << s << " a=" << a;
        ASSERT_GT(std::abs(entry.l), 0);
        ASSERT_LT(std::abs(entry.l), cert.C_s);
        ASSERT_LT(entry.residual, cert.C_s);
        ASSERT_EQ(std::abs(entry.b - entry.l * a), entry.residual);
      }
    }
  }
}

TEST(Blocks, LinearizeExample) {
  const auto cert = linearize(1, 10);
  const std::vector<std::int64_t> bs{119, 140, 151, 169, 180, 201};
  const std::vector<std::int64_t> ls{12, 14, 15, 17, 18, 20};
  EXPECT_EQ(block_B(1, 10).positive_part().elements(), bs);
  for (std::size_t i = 0; i < bs.size(); ++i) {
    EXPECT_EQ(cert.at(bs[i]).l, ls[i]);
    EXPECT_LE(cert.at(bs[i]).residual, 1);
  }
  EXPECT_EQ(cert.C_s, 21);
}

TEST(Blocks, LinearizeAgreesWithRoundingForLargeA) {
  for (int s = 1; s <= 3; ++s) {
    for (std::int64_t a = 2 * s + 1; a <= 60; ++a) {
      for (const auto& e : linearize(s, a).entries) {
        const auto rounded = static_cast<std::int64_t>(
            std::llround(static_cast<long double>(e.b) / static_cast<long double>(a)));
        ASSERT_EQ(e.l, rounded) << "s=" << s << " a=" << a << " b=" << e.b;
      }
    }
  }
}

TEST(Blocks, RoundingCollidesForSmallA) {
  // Nearest-integer rounding is not injective on B(2, 3); the certificate is.
  const auto B = block_B(2, 3);
  Set rounded;
  bool collision = false;
  for (auto b : B.elements()) {
    const auto l = static_cast<std::int64_t>(std::llround(static_cast<double>(b) / 3.0));
    collision |= !rounded.insert(l).second;
  }
  EXPECT_TRUE(collision);
  EXPECT_NO_THROW(linearize(2, 3));
}

TEST(Blocks, LinearizeLargeBlockInjective) {
  const auto cert = linearize(2, 10'000);
  Set ls;
  for (const auto& e : cert.entries) EXPECT_TRUE(ls.insert(e.l).second);
  EXPECT_EQ(ls.size(), block_B(2, 10'000).size());
}

TEST(Blocks, ConstantIndependentOfA) {
  for (int s = 1; s <= 3; ++s) {
    for (std::int64_t a : {2 * s + 1, 100, 12345}) {
      EXPECT_EQ(linearize(s, a).C_s, block_constant(s));
    }
  }
  EXPECT_EQ(block_constant(1), 21);
}

TEST(Blocks, LinearizeDPositive) {
  const auto cert = linearize_D(2, 50);
  for (const auto& e : cert.entries) EXPECT_GT(e.l, 0);
}

TEST(Blocks, ShiftDivide) {
  EXPECT_EQ(shift_spectrum(SpectrumSet({1, 5}), 1), SpectrumSet({0, 4}));
  EXPECT_EQ(divide_spectrum(SpectrumSet({2, 3, 4, 8}), 2), SpectrumSet({1, 2, 4}));
  const SpectrumSet L({-7, -2, 0, 3, 11});
  EXPECT_EQ(divide_spectrum(shift_spectrum(L, 0), 1), L);
  EXPECT_EQ(shift_spectrum(shift_spectrum(L, 4), -9), shift_spectrum(L, -5));
  EXPECT_EQ(divide_spectrum(divide_spectrum(SpectrumSet({6, 12, 18, 20}), 2), 3),
            divide_spectrum(SpectrumSet({6, 12, 18, 20}), 6));
  EXPECT_THROW(divide_spectrum(L, 0), ParameterError);
}

TEST(Blocks, SpectrumSetInvariant) {
  EXPECT_THROW(SpectrumSet({1, 1}), InvariantViolation);
  EXPECT_THROW(SpectrumSet({2, 1}), InvariantViolation);
  EXPECT_EQ(SpectrumSet::from_unsorted({3, 1, 3}).elements(), (std::vector<std::int64_t>{1, 3}));
}

TEST(Blocks, SpectrumRoundTrip) {
  const auto L = block_B(2, 7);
  std::stringstream ss;
  write_spectrum(ss, L);
  EXPECT_EQ(read_spectrum(ss), L);
  std::stringstream dup("1\n1\n");
  EXPECT_THROW(read_spectrum(dup), ParameterError);
  std::stringstream junk("1\nx\n");
  EXPECT_THROW(read_spectrum(junk), ParameterError);
}

TEST(Blocks, ManifestRoundTrip) {
  std::vector<BlockRecord> m{{"B", 1, 10, std::nullopt}, {"D_nu", 2, 6, 9}};
  const auto j = manifest_to_json(m);
  EXPECT_EQ(j[0]["nu"], nullptr);
  EXPECT_EQ(j[1]["kind"], "D_nu");
  EXPECT_EQ(manifest_from_json(j), m);
  EXPECT_EQ(m[1].materialize(), block_D_nu(2, 6, 9));
}

namespace {

double inv_log(std::int64_t n) { return 1.0 / std::log(static_cast<double>(n) + 2.0); }

void expect_ratios(const SpectrumSet& pos, const RealSequence& eps) {
  const auto& e = pos.elements();
  for (std::size_t n = 1; n < e.size(); ++n) {
    const long double lhs = static_cast<long double>(e[n]);
    const long double rhs =
        static_cast<long double>(e[n - 1]) * (1.0L + eps(static_cast<std::int64_t>(n)));
    ASSERT_GT(lhs, rhs) << "n=" << n;
  }
}

}  // namespace

TEST(Hadamard, SlowEpsilonRatiosHold) {
  const auto built = build_hadamard_spectrum(inv_log, 200);
  EXPECT_TRUE(built.spectrum.is_symmetric());
  const auto pos = built.spectrum.positive_part();
  EXPECT_GE(pos.size(), 200u);
  expect_ratios(pos, inv_log);
}

TEST(Hadamard, SlowEpsilonAdmitsNoBlock) {
  // 1/log(n+2) stays above 1/(2 C_1) = 1/42 until n ~ e^42, and every gap
  // ratio inside B(1, a) is below 1.2 < 1 + eps(200).
  const auto built = build_hadamard_spectrum(inv_log, 200);
  EXPECT_TRUE(built.manifest.empty());
  const auto pos = block_B(1, 1000).positive_part().elements();
  double min_ratio = 10.0;
  for (std::size_t i = 1; i < pos.size(); ++i) {
    min_ratio = std::min(min_ratio, static_cast<double>(pos[i]) / static_cast<double>(pos[i - 1]));
  }
  EXPECT_LT(min_ratio, 1.0 + inv_log(200));
}

TEST(Hadamard, RatiosHoldForTheUnroundedEpsilon) {
  // eps reaches the builder as a double; near 1e18 one ulp of eps is worth
  // tens of units, so the check uses 1/log(n+2) in long double.
  const auto pos = build_hadamard_spectrum(inv_log, 200).spectrum.positive_part().elements();
  for (std::size_t n = 1; n < pos.size(); ++n) {
    const long double e = 1.0L / std::log(static_cast<long double>(n) + 2.0L);
    const long double gap = static_cast<long double>(pos[n] - pos[n - 1]);
    ASSERT_GT(gap, static_cast<long double>(pos[n - 1]) * e) << n;
  }
}

TEST(Hadamard, FastEpsilonEmbedsBlocks) {
  auto eps = [](std::int64_t n) { return 0.5 * std::pow(static_cast<double>(n), -4.0); };
  const auto built = build_hadamard_spectrum(eps, 600);
  ASSERT_FALSE(built.manifest.empty());
  int last = 0;
  for (const auto& rec : built.manifest) {
    EXPECT_GT(rec.s, last);
    last = rec.s;
    EXPECT_TRUE(built.spectrum.includes(rec.materialize()));
  }
  expect_ratios(built.spectrum.positive_part(), eps);
}

TEST(Hadamard, ZeroEpsilonConcatenates) {
  auto eps = [](std::int64_t) { return 0.0; };
  const auto built = build_hadamard_spectrum(eps, 500);
  ASSERT_FALSE(built.manifest.empty());
  const auto pos = built.spectrum.positive_part();
  EXPECT_GE(pos.size(), 500u);
  expect_ratios(pos, eps);
  for (const auto& rec : built.manifest) EXPECT_TRUE(built.spectrum.includes(rec.materialize()));
}

TEST(Hadamard, RejectsIncreasingEps) {
  auto eps = [](std::int64_t n) { return n == 3 ? 0.9 : 0.1; };
  EXPECT_THROW(build_hadamard_spectrum(eps, 50), ParameterError);
}

TEST(Hadamard, StallsWhenEpsTooLarge) {
  auto eps = [](std::int64_t) { return 1.0; };
  EXPECT_THROW(build_hadamard_spectrum(eps, 100), ConstructionError);
}

TEST(Hadamard, AnalyticVariantPositive) {
  auto eps = [](std::int64_t n) { return 0.5 * std::pow(static_cast<double>(n), -4.0); };
  const auto built = build_analytic_hadamard_spectrum(eps, 600);
  EXPECT_TRUE(built.spectrum.is_positive());
  expect_ratios(built.spectrum, eps);
  ASSERT_FALSE(built.manifest.empty());
  std::int64_t last_nu = 0;
  int last_s = 0;
  for (const auto& rec : built.manifest) {
    EXPECT_EQ(rec.kind, "D_nu");
    EXPECT_GT(*rec.nu, last_nu);
    EXPECT_GT(rec.s, last_s);
    last_nu = *rec.nu;
    last_s = rec.s;
    EXPECT_TRUE(built.spectrum.includes(rec.materialize()));
  }
  const auto slow = build_analytic_hadamard_spectrum(inv_log, 200);
  EXPECT_TRUE(slow.spectrum.is_positive());
  expect_ratios(slow.spectrum, inv_log);
}

namespace {

double identity_w(std::int64_t k) { return static_cast<double>(k); }

}  // namespace

TEST(Squares, FirstBlockPerturbation) {
  const auto built = build_squares_spectrum(identity_w, 1);
  EXPECT_TRUE(built.spectrum.is_symmetric());
  ASSERT_EQ(built.manifest.size(), 1u);
  const auto& rec = built.manifest[0];
  const std::int64_t half = rec.a / 2;
  EXPECT_EQ(*rec.nu, half * half);
  const auto cert = linearize(1, rec.a);
  const std::int64_t tau_bound = square_tau_constant(1, false);
  double worst = 0.0;
  const auto pos = built.spectrum.positive_part();
  for (auto b : pos.elements()) {
    const auto& e = cert.at(b - *rec.nu);
    const std::int64_t k = half + e.l;
    const std::int64_t tau = b - k * k;
    // (a + l)^2 = a^2 + 2 l a + l^2, so tau = r - l^2.
    EXPECT_EQ(tau, (b - *rec.nu - e.l * rec.a) - e.l * e.l);
    EXPECT_LT(std::abs(tau), tau_bound);
    worst = std::max(worst, std::abs(static_cast<double>(tau)) / std::sqrt(identity_w(k)));
  }
  EXPECT_LT(worst, 1.0);
}

TEST(Squares, SmallestA) {
  const auto built = build_squares_spectrum(identity_w, 1);
  const std::int64_t a = built.manifest[0].a / 2;
  const std::int64_t C = block_constant(1);
  const double need = static_cast<double>(square_tau_constant(1, false));
  EXPECT_GT(std::sqrt(identity_w(a - C)), need);
  EXPECT_LE(std::sqrt(identity_w(a - 1 - C)), need);
}

TEST(Squares, SecondBlockLeavesInt64) {
  // tau reaches l^2 ~ 8704^2 at s = 2, so a ~ 5.7e15 and a^2 ~ 3e31.
  EXPECT_THROW(build_squares_spectrum(identity_w, 2), OverflowError);
}

TEST(Squares, FastWeightFitsTwoBlocks) {
  auto w = [](std::int64_t k) { return std::pow(static_cast<double>(k), 3.0); };
  const auto built = build_squares_spectrum(w, 2);
  ASSERT_EQ(built.manifest.size(), 2u);
  for (const auto& rec : built.manifest) {
    for (const auto& p : square_perturbations(rec)) {
      EXPECT_LT(std::abs(static_cast<double>(p.tau)), std::sqrt(w(p.k)));
    }
  }
  EXPECT_LT(built.manifest[0].materialize().max(), built.manifest[1].materialize().positive_part().min());
}

TEST(Squares, AnalyticVariantPositive) {
  const auto built = build_analytic_squares_spectrum(identity_w, 1);
  EXPECT_TRUE(built.spectrum.is_positive());
  for (const auto& p : square_perturbations(built.manifest[0])) {
    EXPECT_LT(std::abs(static_cast<double>(p.tau)), std::sqrt(identity_w(p.k)));
  }
}
