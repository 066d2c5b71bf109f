#include <gtest/gtest.h>

#include <random>
#include <set>

#include <nlohmann/json.hpp>

#include "menshov/errors.hpp"
#include "menshov/numbertheory.hpp"

using namespace menshov;

namespace {

// Independent oracle: the set of squares mod p by enumeration.
std::set<std::int64_t> squares_mod(std::int64_t p) {
  std::set<std::int64_t> s;
  for (std::int64_t n = 0; n < p; ++n) s.insert(n * n % p);
  return s;
}

int symbol_by_enumeration(std::int64_t a, std::int64_t p) {
  const std::int64_t r = ((a % p) + p) % p;
  if (r == 0) return 0;
  return squares_mod(p).count(r) ? 1 : -1;
}

}  // namespace

TEST(Primes, TrialDivision) {
  const std::vector<std::int64_t> primes{2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47};
  for (std::int64_t n = -3; n < 50; ++n) {
    const bool want = std::find(primes.begin(), primes.end(), n) != primes.end();
    EXPECT_EQ(is_prime(n), want) << n;
  }
  EXPECT_TRUE(is_prime(999983));
  EXPECT_FALSE(is_prime(999983LL * 999979LL));
}

TEST(Legendre, SmallCases) {
  EXPECT_EQ(legendre(3, 7), -1);
  EXPECT_EQ(legendre(2, 7), 1);
  EXPECT_EQ(legendre(14, 7), 0);
  EXPECT_EQ(legendre(-1, 13), 1);
  EXPECT_EQ(legendre(-1, 7), -1);
  for (std::int64_t p : {3, 5, 7, 11, 101, 7919}) EXPECT_EQ(legendre(1, p), 1);
}

TEST(Legendre, MatchesEnumeration) {
  for (std::int64_t p : {3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 101}) {
    for (std::int64_t a = -40; a <= 40; ++a) ASSERT_EQ(legendre(a, p), symbol_by_enumeration(a, p)) << a << " " << p;
  }
}

TEST(Legendre, CompletelyMultiplicative) {
  std::mt19937_64 rng(5);
  for (std::int64_t p : {7, 13, 101, 7919, 999983}) {
    for (int i = 0; i < 200; ++i) {
      const auto a = static_cast<std::int64_t>(rng() % 1'000'000'000);
      const auto b = static_cast<std::int64_t>(rng() % 1'000'000'000);
      EXPECT_EQ(legendre(a % p * (b % p), p), legendre(a, p) * legendre(b, p));
    }
  }
}

TEST(Legendre, RejectsNonOddPrimes) {
  EXPECT_THROW(legendre(1, 2), ParameterError);
  EXPECT_THROW(legendre(1, 9), ParameterError);
  EXPECT_THROW(legendre(1, 1), ParameterError);
  EXPECT_THROW(legendre(1, -7), ParameterError);
}

TEST(NonresidueRun, PairAtFive) {
  const auto run = find_nonresidue_run(2);
  EXPECT_EQ(run.p, 5);
  EXPECT_EQ(run.x, 1);
}

TEST(NonresidueRun, RunsVerifyByLegendre) {
  for (int r = 2; r <= 8; ++r) {
    const auto run = find_nonresidue_run(r);
    for (int i = 1; i <= r; ++i) EXPECT_EQ(legendre(run.x + i, run.p), -1) << r;
    if (r == 4) EXPECT_LE(run.p, 10'000);
  }
}

TEST(NonresidueRun, SmallestPrimeAndOffset) {
  // brute force over smaller primes for r = 3, 4
  for (int r : {3, 4}) {
    const auto run = find_nonresidue_run(r);
    for (std::int64_t p = 3; p <= run.p; ++p) {
      if (!is_prime(p)) continue;
      const std::int64_t x_limit = p == run.p ? run.x : p;
      for (std::int64_t x = 0; x < x_limit; ++x) {
        bool all = true;
        for (int i = 1; i <= r; ++i) all = all && symbol_by_enumeration(x + i, p) == -1;
        EXPECT_FALSE(all) << "earlier run at p = " << p << ", x = " << x;
      }
    }
  }
}

TEST(NonresidueRun, DifficultyIsMonotone) {
  std::int64_t prev = 0;
  for (int r = 2; r <= 6; ++r) {
    const auto run = find_nonresidue_run(r, 3);
    EXPECT_GE(run.p, prev);
    prev = run.p;
  }
}

TEST(NonresidueRun, CapAndArguments) {
  EXPECT_THROW(find_nonresidue_run(1), ParameterError);
  EXPECT_THROW(find_nonresidue_run(8, 3, 50), ConstructionError);
}

TEST(GapCertificate, UnitPerturbation) {
  const auto cert = squares_gap_certificate(1);
  EXPECT_LE(cert.p, 13);
  EXPECT_EQ(cert.p % 4, 1);
  EXPECT_EQ(cert.checked_range, 10'000);
  // independent re-enumeration of +-n^2 mod p
  std::set<std::int64_t> values;
  for (std::int64_t n = -10'000; n <= 10'000; ++n) {
    const std::int64_t v = (n < 0 ? -1 : 1) * n * n;
    values.insert(((v % cert.p) + cert.p) % cert.p);
  }
  EXPECT_EQ(values.count(cert.m), 0u);
  EXPECT_TRUE(verify_gap_certificate(cert));
}

TEST(GapCertificate, ThirteenSixIsValid) {
  // +-n^2 mod 13 = {0, 1, 3, 4, 9, 10, 12}
  EXPECT_TRUE(verify_gap_certificate({13, 6, 1, 10'000}));
  EXPECT_FALSE(verify_gap_certificate({13, 4, 1, 10'000}));
  EXPECT_FALSE(verify_gap_certificate({7, 3, 1, 100}));  // 7 = 3 mod 4
}

TEST(GapCertificate, WiderPerturbationsRevalidate) {
  for (std::int64_t A = 1; A <= 4; ++A) {
    const auto cert = squares_gap_certificate(A, 2000);
    // every lambda = sign(n) n^2 + tau misses m + pZ
    for (std::int64_t n = -2000; n <= 2000; ++n) {
      for (std::int64_t tau = -(A - 1); tau <= A - 1; ++tau) {
        const std::int64_t lam = (n < 0 ? -1 : 1) * n * n + tau;
        ASSERT_NE(((lam - cert.m) % cert.p + cert.p) % cert.p, 0) << A;
      }
    }
  }
}

TEST(GapCertificate, JsonRoundTrip) {
  const auto cert = squares_gap_certificate(2);
  const auto j = cert.to_json();
  EXPECT_EQ(j.at("p"), cert.p);
  const auto back = GapCertificate::from_json(j);
  EXPECT_EQ(back.p, cert.p);
  EXPECT_EQ(back.m, cert.m);
  EXPECT_EQ(back.A, cert.A);
  EXPECT_EQ(back.checked_range, cert.checked_range);
}

TEST(GapCertificate, RejectsBadArguments) {
  EXPECT_THROW(squares_gap_certificate(0), ParameterError);
  EXPECT_THROW(squares_gap_certificate(200, 10, 300), ConstructionError);
}
