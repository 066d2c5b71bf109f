#include "menshov/numbertheory.hpp"

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "menshov/errors.hpp"

namespace menshov {

namespace {

std::int64_t mod(std::int64_t a, std::int64_t p) {
  const std::int64_t r = a % p;
  return r < 0 ? r + p : r;
}

std::int64_t pow_mod(std::int64_t b, std::int64_t e, std::int64_t p) {
  using u128 = unsigned __int128;
  std::uint64_t result = 1, base = static_cast<std::uint64_t>(mod(b, p));
  const auto P = static_cast<std::uint64_t>(p);
  while (e > 0) {
    if (e & 1) result = static_cast<std::uint64_t>(static_cast<u128>(result) * base % P);
    base = static_cast<std::uint64_t>(static_cast<u128>(base) * base % P);
    e >>= 1;
  }
  return static_cast<std::int64_t>(result);
}

// Legendre symbols of 0..p-1, p an odd prime.
std::vector<int> symbol_table(std::int64_t p) {
  std::vector<int> chi(static_cast<std::size_t>(p), -1);
  chi[0] = 0;
  for (std::int64_t n = 1; n <= p / 2; ++n) chi[static_cast<std::size_t>(n * n % p)] = 1;
  return chi;
}

}  // namespace

bool is_prime(std::int64_t n) {
  if (n < 2) return false;
  if (n % 2 == 0) return n == 2;
  for (std::int64_t d = 3; d <= n / d; d += 2) {
    if (n % d == 0) return false;
  }
  return true;
}

int legendre(std::int64_t a, std::int64_t p) {
  if (p < 3 || !is_prime(p)) throw ParameterError("legendre: p = " + std::to_string(p) + " is not an odd prime");
  const std::int64_t e = pow_mod(a, (p - 1) / 2, p);
  if (e == 0) return 0;
  return e == 1 ? 1 : -1;
}

NonresidueRun find_nonresidue_run(int r, std::int64_t p_start, std::int64_t cap) {
  if (r < 2) throw ParameterError("find_nonresidue_run: r must be >= 2");
  for (std::int64_t p = std::max<std::int64_t>(p_start, 3); p < cap; ++p) {
    if (!is_prime(p)) continue;
    const auto chi = symbol_table(p);
    // run[x] = length of the non-residue streak starting at x + 1 (indices mod p)
    int streak = 0;
    // scan 0..2p so streaks that wrap are seen
    for (std::int64_t y = 1; y <= 2 * p; ++y) {
      streak = chi[static_cast<std::size_t>(y % p)] == -1 ? streak + 1 : 0;
      if (streak >= r) {
        // smallest x: first completed streak ends at y, so x = y - r (mod p);
        // earlier x values were rejected by the scan order.
        return {p, mod(y - r, p)};
      }
    }
  }
  throw ConstructionError("find_nonresidue_run: no prime below " + std::to_string(cap) +
                          " has " + std::to_string(r) + " consecutive non-residues");
}

nlohmann::json GapCertificate::to_json() const {
  return {{"p", p}, {"m", m}, {"A", A}, {"checked_range", checked_range}};
}

GapCertificate GapCertificate::from_json(const nlohmann::json& j) {
  GapCertificate c;
  c.p = j.at("p").get<std::int64_t>();
  c.m = j.at("m").get<std::int64_t>();
  c.A = j.at("A").get<std::int64_t>();
  c.checked_range = j.at("checked_range").get<std::int64_t>();
  return c;
}

bool verify_gap_certificate(const GapCertificate& c) {
  if (c.p < 3 || !is_prime(c.p) || c.p % 4 != 1 || c.A < 1 || c.checked_range < 0) return false;
  for (std::int64_t n = -c.checked_range; n <= c.checked_range; ++n) {
    const std::int64_t sq = mod(n, c.p) * mod(n, c.p) % c.p;
    const std::int64_t v = n < 0 ? mod(-sq, c.p) : sq;
    for (std::int64_t tau = -(c.A - 1); tau <= c.A - 1; ++tau) {
      if (mod(v + tau - c.m, c.p) == 0) return false;
    }
  }
  return true;
}

GapCertificate squares_gap_certificate(std::int64_t A, std::int64_t checked_range,
                                       std::int64_t cap) {
  if (A < 1) throw ParameterError("squares_gap_certificate: A must be >= 1");
  if (checked_range < 0) throw ParameterError("squares_gap_certificate: checked_range must be >= 0");
  for (std::int64_t p = 5; p < cap; p += 4) {
    if (!is_prime(p) || 2 * A - 1 >= p) continue;
    // +-n^2 mod p is the set of squares: -1 is a square when p = 1 mod 4
    std::vector<bool> hit(static_cast<std::size_t>(p), false);
    for (std::int64_t n = 0; n <= p / 2; ++n) {
      for (std::int64_t tau = -(A - 1); tau <= A - 1; ++tau) {
        hit[static_cast<std::size_t>(mod(n * n + tau, p))] = true;
      }
    }
    for (std::int64_t m = 0; m < p; ++m) {
      if (hit[static_cast<std::size_t>(m)]) continue;
      GapCertificate cert{p, m, A, checked_range};
      if (!verify_gap_certificate(cert)) {
        throw InvariantViolation("gap certificate failed re-enumeration at p = " + std::to_string(p));
      }
      return cert;
    }
  }
  throw ConstructionError("squares_gap_certificate: no p = 1 mod 4 below " + std::to_string(cap) +
                          " leaves a gap of width " + std::to_string(A));
}

}  // namespace menshov
