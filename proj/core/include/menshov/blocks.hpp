#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace menshov {

// (2s)^{2s+2} explodes: s = 6 already costs a factor 1.3e15.
inline constexpr int kMaxBlockS = 6;

// Strictly increasing list of distinct integers.
class SpectrumSet {
 public:
  SpectrumSet() = default;
  // Throws InvariantViolation unless strictly increasing.
  explicit SpectrumSet(std::vector<std::int64_t> sorted_elements);
  static SpectrumSet from_unsorted(std::vector<std::int64_t> elements);

  const std::vector<std::int64_t>& elements() const { return elements_; }
  std::size_t size() const { return elements_.size(); }
  bool empty() const { return elements_.empty(); }
  bool contains(std::int64_t x) const;
  bool includes(const SpectrumSet& other) const;
  bool is_symmetric() const;
  bool is_positive() const;
  std::int64_t min() const;
  std::int64_t max() const;
  SpectrumSet positive_part() const;

  bool operator==(const SpectrumSet& other) const { return elements_ == other.elements_; }

 private:
  std::vector<std::int64_t> elements_;
};

SpectrumSet set_union(const SpectrumSet& a, const SpectrumSet& b);

struct BlockParams {
  int s = 1;
  std::int64_t a = 1;
  std::optional<std::int64_t> nu;
};

SpectrumSet block_B1(int s, std::int64_t a);
SpectrumSet block_B1_plus(int s, std::int64_t a);
SpectrumSet block_B2(int s, std::int64_t a);
SpectrumSet block_B(int s, std::int64_t a);
// (-nu + B) u (nu + B); needs nu > max B(s, a).
SpectrumSet block_B_nu(int s, std::int64_t a, std::int64_t nu);
SpectrumSet block_D(int s, std::int64_t a);
// nu + D(s, a); needs nu >= 1.
SpectrumSet block_D_nu(int s, std::int64_t a, std::int64_t nu);

struct LinearEntry {
  std::int64_t b;
  std::int64_t l;
  std::int64_t residual;  // |b - l a|
};

// b = l(b) a + r(b) with l injective, 0 < |l| < C_s and |r| < C_s.
struct LinearizationCertificate {
  int s = 0;
  std::int64_t a = 0;
  std::vector<LinearEntry> entries;  // sorted by b
  std::int64_t C_s = 0;              // max over the block of max(|l|, residual), plus 1

  const LinearEntry& at(std::int64_t b) const;
};

// l(b) is the multiplier read off the sumset construction; it coincides with
// the nearest integer to b/a whenever a > 2s. For a <= 2s rounding can merge
// two elements, the construction never does.
LinearizationCertificate linearize(int s, std::int64_t a);
// Same for D(s, a): every l is positive.
LinearizationCertificate linearize_D(int s, std::int64_t a);

// C_s does not depend on a: l and r come from the base-2s digits alone.
std::int64_t block_constant(int s);

SpectrumSet shift_spectrum(const SpectrumSet& L, std::int64_t n);
// Multiples of m, divided by m.
SpectrumSet divide_spectrum(const SpectrumSet& L, std::int64_t m);

struct BlockRecord {
  std::string kind;  // "B", "B_nu", "D", "D_nu"
  int s = 0;
  std::int64_t a = 0;
  std::optional<std::int64_t> nu;

  SpectrumSet materialize() const;
  bool operator==(const BlockRecord& other) const = default;
};

struct SpectrumBuild {
  SpectrumSet spectrum;
  std::vector<BlockRecord> manifest;
};

using RealSequence = std::function<double(std::int64_t)>;

struct HadamardOptions {
  int max_s = kMaxBlockS;
  // Give up when lambda would leave int64 before N elements exist.
  std::int64_t max_steps = 10'000'000;
};

// Symmetric set whose positive part lambda(1) < lambda(2) < ... satisfies
// lambda(n+1) > lambda(n) (1 + eps(n)) for every n, alternating whole
// B(s, a) blocks (s strictly increasing) with greedy single steps.
SpectrumBuild build_hadamard_spectrum(const RealSequence& eps, std::int64_t N,
                                      const HadamardOptions& options = {});
// Positive-only variant built from D(s, a, nu) blocks, nu = a.
SpectrumBuild build_analytic_hadamard_spectrum(const RealSequence& eps, std::int64_t N,
                                               const HadamardOptions& options = {});

// Union over s = 1..count of B(s, 2a(s), a(s)^2). Each positive b is
// (a + l)^2 + tau with tau = r - l^2, so a(s) is the smallest a with
// max|tau| + 1 < sqrt(w(a - C_s)).
SpectrumBuild build_squares_spectrum(const RealSequence& w, int count);
// Positive-only variant with D(s, 2a(s), a(s)^2).
SpectrumBuild build_analytic_squares_spectrum(const RealSequence& w, int count);

struct SquarePerturbation {
  std::int64_t b;
  std::int64_t k;
  std::int64_t tau;  // b - k^2
};
// Decomposition of the positive elements of one squares block.
std::vector<SquarePerturbation> square_perturbations(const BlockRecord& block);
// max |tau| + 1 over B(s, 2a) or D(s, 2a) for any a; a-independent.
std::int64_t square_tau_constant(int s, bool analytic);

void write_spectrum(std::ostream& out, const SpectrumSet& L);
SpectrumSet read_spectrum(std::istream& in);
nlohmann::json manifest_to_json(const std::vector<BlockRecord>& manifest);
std::vector<BlockRecord> manifest_from_json(const nlohmann::json& j);

}  // namespace menshov
