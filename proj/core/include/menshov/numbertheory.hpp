#pragma once

#include <cstdint>

#include <nlohmann/json_fwd.hpp>

namespace menshov {

inline constexpr std::int64_t kPrimeCap = 1'000'000;

// Deterministic trial division; n < 2^62.
bool is_prime(std::int64_t n);

// Euler criterion a^{(p-1)/2} mod p as -1, 0 or 1. Throws ParameterError
// unless p is an odd prime.
int legendre(std::int64_t a, std::int64_t p);

struct NonresidueRun {
  std::int64_t p = 0;
  std::int64_t x = 0;  // x + 1, ..., x + r are all non-residues mod p
};

// Smallest prime p >= p_start with such an x in [0, p), smallest x for that
// p. Throws ConstructionError past the cap.
NonresidueRun find_nonresidue_run(int r, std::int64_t p_start = 3, std::int64_t cap = kPrimeCap);

// No lambda = sign(n) n^2 + tau with |tau| < A, |n| <= checked_range, is
// congruent to m mod p; p = 1 mod 4 so -1 is a square and +-n^2 share residues.
struct GapCertificate {
  std::int64_t p = 0;
  std::int64_t m = 0;
  std::int64_t A = 0;
  std::int64_t checked_range = 0;

  nlohmann::json to_json() const;
  static GapCertificate from_json(const nlohmann::json& j);
};

// Smallest such p (then smallest m), verified over |n| <= checked_range.
GapCertificate squares_gap_certificate(std::int64_t A, std::int64_t checked_range = 10'000,
                                       std::int64_t cap = kPrimeCap);

// Re-enumerates every n and tau; true iff the certificate holds.
bool verify_gap_certificate(const GapCertificate& cert);

}  // namespace menshov
