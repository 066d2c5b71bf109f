#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "menshov/circle.hpp"
#include "menshov/errors.hpp"
#include "oracle.hpp"

using namespace menshov;

namespace {
constexpr double kPi = std::numbers::pi;
}

TEST(CircleGrid, RejectsSmallOrOdd) {
  EXPECT_THROW(CircleGrid(6), ParameterError);
  EXPECT_THROW(CircleGrid(9), ParameterError);
  EXPECT_NO_THROW(CircleGrid(8));
}

TEST(CircleGrid, UniformPoints) {
  CircleGrid g(64);
  EXPECT_DOUBLE_EQ(g.point(0), -kPi);
  for (std::size_t j = 0; j + 1 < g.size(); ++j) {
    EXPECT_NEAR(g.point(j + 1) - g.point(j), 2 * kPi / 64, 1e-15);
  }
}

TEST(CircleGrid, UnitMatchesDirectExponential) {
  CircleGrid g(128);
  for (std::int64_t k : {-1000000007LL, -33LL, -1LL, 0LL, 1LL, 7LL, 64LL, 129LL, 4000000001LL}) {
    for (std::size_t j : {0u, 1u, 17u, 64u, 127u}) {
      const auto ref = oracle::eval({{k, 1.0}}, oracle::grid_point(j, 128));
      EXPECT_NEAR(std::abs(g.unit(k, j) - ref), 0.0, 1e-9) << k << " " << j;
    }
  }
}

TEST(CircleGrid, AliasingGuard) {
  CircleGrid g(64);
  EXPECT_NO_THROW(g.require_degree(15));
  EXPECT_THROW(g.require_degree(16), AliasingError);
}

TEST(EstimateMeasure, TrivialPredicates) {
  SampledFunction f(CircleGrid(256));
  EXPECT_EQ(estimate_measure(f, [](const SamplePoint&) { return false; }).fraction, 0.0);
  EXPECT_EQ(estimate_measure(f, [](const SamplePoint&) { return true; }).fraction, 1.0);
}

TEST(EstimateMeasure, HalfCircleIndicator) {
  CircleGrid g(1024);
  auto f = SampledFunction::from_real(g, [](double t) { return (t >= 0 && t < kPi) ? 1.0 : 0.0; });
  const auto est = estimate_measure(f, [](const SamplePoint& p) { return std::abs(p.value) > 0.5; });
  EXPECT_NEAR(est.fraction, 0.5, 1.0 / 1024);
  EXPECT_EQ(est.grid_size, 1024u);
  EXPECT_DOUBLE_EQ(est.fraction, static_cast<double>(est.count) / 1024.0);
}

TEST(EstimateMeasure, Monotone) {
  CircleGrid g(512);
  auto f = SampledFunction::from_real(g, [](double t) { return std::sin(3 * t); });
  double prev = 1.0;
  for (double th = -1.0; th <= 1.0; th += 0.1) {
    const double frac =
        estimate_measure(f, [th](const SamplePoint& p) { return p.value.real() > th; }).fraction;
    EXPECT_LE(frac, prev);
    prev = frac;
  }
}

TEST(L0Norm, Zero) { EXPECT_EQ(l0_norm(SampledFunction(CircleGrid(64))), 0.0); }

TEST(L0Norm, Constant) {
  auto f = SampledFunction::from_real(CircleGrid(256), [](double) { return 0.4; });
  EXPECT_NEAR(l0_norm(f), 0.4, 1e-6);
}

TEST(L0Norm, ScaledIndicator) {
  CircleGrid g(1000);
  SampledFunction f(g);
  for (std::size_t j = 0; j < 300; ++j) f.values[j] = 5.0;
  EXPECT_NEAR(l0_norm(f), 0.3, 1e-5);
}

// Huge values on a small set: the answer is the set's measure, not sup-scaled.
TEST(L0Norm, LargeSpikes) {
  CircleGrid g(1000);
  SampledFunction f(g);
  for (std::size_t j = 0; j < 100; ++j) f.values[j] = 1e6;
  EXPECT_NEAR(l0_norm(f), 0.1, 1e-6);
}

TEST(L0Norm, AgreesWithExactScan) {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> n(0.0, 0.4);
  for (int trial = 0; trial < 20; ++trial) {
    CircleGrid g(512);
    SampledFunction f(g);
    std::vector<double> mags;
    for (auto& v : f.values) {
      v = {n(rng), n(rng)};
      mags.push_back(std::abs(v));
    }
    EXPECT_NEAR(l0_norm(f), oracle::l0_exact(mags), 2e-6 + 2.0 / 512);
  }
}

TEST(L0Norm, RejectsExtendedPoints) {
  SampledFunction f(CircleGrid(64));
  f.extended.assign(64, 0);
  f.extended[3] = 1;
  try {
    l0_norm(f);
    FAIL();
  } catch (const ParameterError& e) {
    EXPECT_STREQ(e.what(), "L0 undefined for infinite values");
  }
}

TEST(L0Norm, SubAdditive) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-1, 1);
  CircleGrid g(1024);
  for (int trial = 0; trial < 20; ++trial) {
    SampledFunction f(g), h(g);
    const double sf = std::abs(u(rng)), sh = std::abs(u(rng));
    for (std::size_t j = 0; j < g.size(); ++j) {
      f.values[j] = sf * u(rng) * (u(rng) > 0.5 ? 3.0 : 0.1);
      h.values[j] = sh * u(rng);
    }
    EXPECT_LE(l0_norm(f + h), l0_norm(f) + l0_norm(h) + 4.0 / 1024);
  }
}

TEST(Triangle, PeakAndSupport) {
  CircleGrid g(64);
  auto tau = triangle_function(kPi, g);
  EXPECT_DOUBLE_EQ(tau.values[32].real(), 1.0);  // t = 0
  EXPECT_DOUBLE_EQ(triangle_value(kPi / 4, kPi / 2), 0.0);
  EXPECT_THROW(triangle_function(0.0, g), ParameterError);
  EXPECT_THROW(triangle_coeff(4.0, 1), ParameterError);
}

TEST(Triangle, CoefficientMatchesQuadrature) {
  EXPECT_NEAR(triangle_coeff(kPi, 0), 0.5, 1e-15);
  for (double eps : {kPi, kPi / 4, 2 * kPi / 64, 0.3}) {
    for (std::int64_t n : {0, 1, 2, 3, 5, 8, 13, 64, 100}) {
      EXPECT_NEAR(triangle_coeff(eps, n), oracle::triangle_coeff_quadrature(eps, n), 1e-9)
          << eps << " " << n;
    }
  }
}

TEST(Triangle, EvenAndNonNegative) {
  for (double eps : {kPi, kPi / 4, 2 * kPi / 64}) {
    for (std::int64_t n = 0; n <= 10000; ++n) {
      EXPECT_EQ(triangle_coeff(eps, n), triangle_coeff(eps, -n));
      EXPECT_GE(triangle_coeff(eps, n), 0.0);
    }
  }
}

TEST(Triangle, ExactZerosAtPeriodMultiples) {
  // n eps / 2pi integer: sin(n eps / 2) = 0 and the quadrature agrees.
  EXPECT_EQ(triangle_coeff(kPi, 2), 0.0);
  EXPECT_EQ(triangle_coeff(kPi / 4, 8), 0.0);
  EXPECT_EQ(triangle_coeff(2 * kPi / 64, 64), 0.0);
  EXPECT_NEAR(oracle::triangle_coeff_quadrature(kPi, 2), 0.0, 1e-12);
  EXPECT_GT(triangle_coeff(kPi, 3), 0.0);
}

TEST(Triangle, SumClosesWithTailEnclosure) {
  for (double eps : {kPi, kPi / 4, 2 * kPi / 64, 1.0}) {
    const std::int64_t N = 20000;
    long double sum = 0;
    for (std::int64_t n = -N; n <= N; ++n) sum += triangle_coeff(eps, n);
    const auto tail = triangle_tail_interval(eps, N);
    EXPECT_LE(tail.lo, tail.hi);
    EXPECT_LE(static_cast<double>(sum) + tail.lo, 1.0 + 1e-9);
    EXPECT_GE(static_cast<double>(sum) + tail.hi, 1.0 - 1e-9);
    EXPECT_LE(tail.hi, triangle_tail_bound(eps, N));
  }
}

TEST(SampledCsv, RoundTrip) {
  CircleGrid g(16);
  auto f = SampledFunction::from_complex(g, [](double t) { return Complex(std::cos(t), t / 3); });
  f.extended.assign(16, 0);
  f.extended[2] = 1;
  f.extended[5] = -1;
  std::stringstream ss;
  write_csv(ss, f);
  auto back = read_sampled_csv(ss);
  ASSERT_EQ(back.size(), 16u);
  for (std::size_t j = 0; j < 16; ++j) EXPECT_EQ(back.values[j], f.values[j]);
  EXPECT_EQ(back.extended, f.extended);
}
