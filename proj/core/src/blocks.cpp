#include "menshov/blocks.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <map>
#include <ostream>
#include <set>
#include <string>

#include <nlohmann/json.hpp>

#include "checked.hpp"
#include "csv_util.hpp"
#include "menshov/errors.hpp"

namespace menshov {

SpectrumSet::SpectrumSet(std::vector<std::int64_t> sorted_elements)
    : elements_(std::move(sorted_elements)) {
  for (std::size_t i = 1; i < elements_.size(); ++i) {
    if (elements_[i - 1] >= elements_[i]) {
      throw InvariantViolation("spectrum elements must be strictly increasing at position " +
                               std::to_string(i));
    }
  }
}

SpectrumSet SpectrumSet::from_unsorted(std::vector<std::int64_t> elements) {
  std::sort(elements.begin(), elements.end());
  elements.erase(std::unique(elements.begin(), elements.end()), elements.end());
  return SpectrumSet(std::move(elements));
}

bool SpectrumSet::contains(std::int64_t x) const {
  return std::binary_search(elements_.begin(), elements_.end(), x);
}

bool SpectrumSet::includes(const SpectrumSet& other) const {
  return std::includes(elements_.begin(), elements_.end(), other.elements_.begin(),
                       other.elements_.end());
}

bool SpectrumSet::is_symmetric() const {
  const std::size_t n = elements_.size();
  for (std::size_t i = 0; i < n; ++i) {
    if (elements_[i] != -elements_[n - 1 - i]) return false;
  }
  return true;
}

bool SpectrumSet::is_positive() const { return elements_.empty() || elements_.front() > 0; }

std::int64_t SpectrumSet::min() const {
  if (elements_.empty()) throw ParameterError("empty spectrum has no minimum");
  return elements_.front();
}

std::int64_t SpectrumSet::max() const {
  if (elements_.empty()) throw ParameterError("empty spectrum has no maximum");
  return elements_.back();
}

SpectrumSet SpectrumSet::positive_part() const {
  auto it = std::upper_bound(elements_.begin(), elements_.end(), std::int64_t{0});
  return SpectrumSet(std::vector<std::int64_t>(it, elements_.end()));
}

SpectrumSet set_union(const SpectrumSet& a, const SpectrumSet& b) {
  std::vector<std::int64_t> out;
  out.reserve(a.size() + b.size());
  std::set_union(a.elements().begin(), a.elements().end(), b.elements().begin(),
                 b.elements().end(), std::back_inserter(out));
  return SpectrumSet(std::move(out));
}

namespace {

void require_params(int s, std::int64_t a) {
  if (s < 1) throw ParameterError("block parameter s must be >= 1");
  if (s > kMaxBlockS) {
    throw ParameterError("block parameter s = " + std::to_string(s) + " exceeds the cap " +
                         std::to_string(kMaxBlockS));
  }
  if (a < 1) throw ParameterError("block parameter a must be >= 1");
}

// b = L a + r, with L and r read off the construction.
struct Tagged {
  std::int64_t b;
  std::int64_t L;
  std::int64_t r;
};

// B2(s, a) = U_{|k|<=s} k + B1+(s, (2s)^{k+s} a): element k + i (2s)^{k+s} a.
std::vector<Tagged> tagged_B2(int s, std::int64_t a) {
  std::vector<Tagged> out;
  const std::int64_t base = 2 * s;
  for (int k = -s; k <= s; ++k) {
    const std::int64_t step = checked::pow(base, k + s);
    for (int i = 1; i <= s; ++i) {
      const std::int64_t L = checked::mul(i, step);
      out.push_back({checked::add(checked::mul(L, a), k), L, k});
    }
  }
  return out;
}

// positive_only gives D(s, a); otherwise B(s, a).
std::vector<Tagged> tagged_block(int s, std::int64_t a, bool positive_only) {
  const std::int64_t big = checked::pow(2 * s, 2 * s + 2);
  const auto b2 = tagged_B2(s, a);
  std::vector<Tagged> out;
  for (int j = positive_only ? 1 : -s; j <= s; ++j) {
    if (j == 0) continue;
    const std::int64_t Lj = checked::mul(j, big);
    const std::int64_t base = checked::mul(Lj, a);
    for (int sigma : {1, -1}) {
      if (positive_only && sigma < 0) continue;
      for (const auto& t : b2) {
        const std::int64_t b = checked::add(base, sigma * t.b);
        out.push_back({b, Lj + sigma * t.L, sigma * t.r});
      }
    }
  }
  // Small a can realize one b twice; keep the smallest residual, then smallest L.
  std::sort(out.begin(), out.end(), [](const Tagged& x, const Tagged& y) {
    if (x.b != y.b) return x.b < y.b;
    if (std::abs(x.r) != std::abs(y.r)) return std::abs(x.r) < std::abs(y.r);
    return x.L < y.L;
  });
  out.erase(std::unique(out.begin(), out.end(),
                        [](const Tagged& x, const Tagged& y) { return x.b == y.b; }),
            out.end());
  return out;
}

SpectrumSet values_of(const std::vector<Tagged>& tagged) {
  std::vector<std::int64_t> v;
  v.reserve(tagged.size());
  for (const auto& t : tagged) v.push_back(t.b);
  return SpectrumSet(std::move(v));
}

LinearizationCertificate certify(int s, std::int64_t a, const std::vector<Tagged>& tagged) {
  LinearizationCertificate cert;
  cert.s = s;
  cert.a = a;
  std::set<std::int64_t> seen;
  std::int64_t top = 0;
  for (const auto& t : tagged) {
    if (t.L == 0) throw InvariantViolation("zero multiplier at b = " + std::to_string(t.b));
    if (!seen.insert(t.L).second) {
      throw InvariantViolation("multiplier l = " + std::to_string(t.L) +
                               " repeats; linearization not injective");
    }
    const std::int64_t res = std::abs(t.r);
    cert.entries.push_back({t.b, t.L, res});
    top = std::max({top, std::abs(t.L), res});
  }
  cert.C_s = top + 1;
  return cert;
}

}  // namespace

const LinearEntry& LinearizationCertificate::at(std::int64_t b) const {
  auto it = std::lower_bound(entries.begin(), entries.end(), b,
                             [](const LinearEntry& e, std::int64_t x) { return e.b < x; });
  if (it == entries.end() || it->b != b) {
    throw ParameterError(std::to_string(b) + " is not in the certified block");
  }
  return *it;
}

SpectrumSet block_B1(int s, std::int64_t a) {
  require_params(s, a);
  std::vector<std::int64_t> v;
  for (int j = -s; j <= s; ++j) {
    if (j != 0) v.push_back(checked::mul(j, a));
  }
  return SpectrumSet(std::move(v));
}

SpectrumSet block_B1_plus(int s, std::int64_t a) { return block_B1(s, a).positive_part(); }

SpectrumSet block_B2(int s, std::int64_t a) {
  require_params(s, a);
  std::vector<std::int64_t> v;
  for (const auto& t : tagged_B2(s, a)) v.push_back(t.b);
  return SpectrumSet::from_unsorted(std::move(v));
}

SpectrumSet block_B(int s, std::int64_t a) {
  require_params(s, a);
  return values_of(tagged_block(s, a, false));
}

SpectrumSet block_B_nu(int s, std::int64_t a, std::int64_t nu) {
  const SpectrumSet B = block_B(s, a);
  if (nu <= B.max()) {
    throw ParameterError("B(s, a, nu) needs nu > max B(s, a) = " + std::to_string(B.max()));
  }
  std::vector<std::int64_t> v;
  v.reserve(2 * B.size());
  for (auto b : B.elements()) v.push_back(checked::sub(b, nu));
  for (auto b : B.elements()) v.push_back(checked::add(b, nu));
  return SpectrumSet(std::move(v));
}

SpectrumSet block_D(int s, std::int64_t a) {
  require_params(s, a);
  return values_of(tagged_block(s, a, true));
}

SpectrumSet block_D_nu(int s, std::int64_t a, std::int64_t nu) {
  if (nu < 1) throw ParameterError("D(s, a, nu) needs nu >= 1");
  return shift_spectrum(block_D(s, a), -nu);
}

LinearizationCertificate linearize(int s, std::int64_t a) {
  require_params(s, a);
  return certify(s, a, tagged_block(s, a, false));
}

LinearizationCertificate linearize_D(int s, std::int64_t a) {
  require_params(s, a);
  return certify(s, a, tagged_block(s, a, true));
}

std::int64_t block_constant(int s) { return linearize(s, 2 * s + 1).C_s; }

SpectrumSet shift_spectrum(const SpectrumSet& L, std::int64_t n) {
  std::vector<std::int64_t> v;
  v.reserve(L.size());
  for (auto x : L.elements()) v.push_back(checked::sub(x, n));
  return SpectrumSet(std::move(v));
}

SpectrumSet divide_spectrum(const SpectrumSet& L, std::int64_t m) {
  if (m < 1) throw ParameterError("divisor must be a positive integer");
  std::vector<std::int64_t> v;
  for (auto x : L.elements()) {
    if (x % m == 0) v.push_back(x / m);
  }
  return SpectrumSet(std::move(v));
}

SpectrumSet BlockRecord::materialize() const {
  if (kind == "B") return block_B(s, a);
  if (kind == "D") return block_D(s, a);
  if (!nu) throw ParameterError("block kind " + kind + " needs nu");
  if (kind == "B_nu") return block_B_nu(s, a, *nu);
  if (kind == "D_nu") return block_D_nu(s, a, *nu);
  throw ParameterError("unknown block kind '" + kind + "'");
}

namespace {

constexpr std::int64_t kInt64Max = std::numeric_limits<std::int64_t>::max();

struct HadamardFlavor {
  bool analytic;
  // Positive elements of the candidate block; throws OverflowError.
  std::vector<std::int64_t> positive(int s, std::int64_t a) const {
    if (!analytic) return block_B(s, a).positive_part().elements();
    return block_D_nu(s, a, a).elements();
  }
  // Linearization constant of the inserted block (nu = a shifts l by one).
  std::int64_t constant(int s) const {
    return analytic ? linearize_D(s, 2 * s + 1).C_s + 1 : block_constant(s);
  }
  BlockRecord record(int s, std::int64_t a) const {
    if (!analytic) return {"B", s, a, std::nullopt};
    return {"D_nu", s, a, a};
  }
};

bool ratio_holds(std::int64_t lo, std::int64_t hi, double e) {
  return static_cast<long double>(hi) >
         static_cast<long double>(lo) * (1.0L + static_cast<long double>(e));
}

SpectrumBuild build_hadamard(const RealSequence& eps, std::int64_t N,
                             const HadamardOptions& options, const HadamardFlavor& flavor) {
  if (N < 1) throw ParameterError("target length N must be >= 1");
  const int max_s = std::clamp(options.max_s, 0, kMaxBlockS);

  std::vector<double> e_cache;
  auto e_at = [&](std::int64_t n) {
    while (static_cast<std::int64_t>(e_cache.size()) < n) {
      const auto idx = static_cast<std::int64_t>(e_cache.size()) + 1;
      const double v = eps(idx);
      if (!(v >= 0.0) || !std::isfinite(v)) {
        throw ParameterError("eps(" + std::to_string(idx) + ") must be finite and >= 0");
      }
      if (!e_cache.empty() && v > e_cache.back()) {
        throw ParameterError("eps must be nonincreasing (eps(" + std::to_string(idx) +
                             ") > eps(" + std::to_string(idx - 1) +
                             ")); pass n -> sup_{k>=n} eps(k) instead");
      }
      e_cache.push_back(v);
    }
    return e_cache[static_cast<std::size_t>(n - 1)];
  };

  std::map<int, std::int64_t> constants;
  std::set<int> dead;  // sizes whose required a has left int64 for good
  for (int s = 1; s <= max_s; ++s) {
    try {
      constants[s] = flavor.constant(s);
    } catch (const OverflowError&) {
      dead.insert(s);
    }
  }

  SpectrumBuild out;
  std::vector<std::int64_t> lambda{1};
  int last_s = 0;
  std::int64_t steps = 0;
  while (static_cast<std::int64_t>(lambda.size()) < N) {
    const auto m = static_cast<std::int64_t>(lambda.size());
    const double e = e_at(m);
    const std::int64_t top = lambda.back();
    bool inserted = false;
    for (int s = max_s; s > last_s && !inserted; --s) {
      if (dead.count(s)) continue;
      const std::int64_t C = constants.at(s);
      if (!(e < 1.0 / (2.0 * static_cast<double>(C)))) continue;
      try {
        // smallest power of two with a > 4C and min block > lambda(m)(1 + eps(m))
        std::int64_t a = 1;
        while (a <= 4 * C) a = checked::mul(a, 2);
        std::vector<std::int64_t> blk = flavor.positive(s, a);
        while (!ratio_holds(top, blk.front(), e)) {
          a = checked::mul(a, 2);
          blk = flavor.positive(s, a);
        }
        lambda.insert(lambda.end(), blk.begin(), blk.end());
        out.manifest.push_back(flavor.record(s, a));
        last_s = s;
        inserted = true;
      } catch (const OverflowError&) {
        dead.insert(s);
      }
    }
    if (inserted) continue;
    if (++steps > options.max_steps) {
      throw ConstructionError("construction stalls: no block fits after " +
                              std::to_string(options.max_steps) + " single steps");
    }
    // eps(m) arrives rounded to double; the slack of 2^-48 lambda eps keeps
    // the ratio condition for the exact value as well.
    const long double grow = static_cast<long double>(top) * static_cast<long double>(e);
    const long double next =
        std::floor(static_cast<long double>(top) + grow + std::ldexp(grow, -48)) + 1.0L;
    if (next >= static_cast<long double>(kInt64Max)) {
      throw ConstructionError("construction stalls: lambda(" + std::to_string(m + 1) +
                              ") leaves int64 before " + std::to_string(N) + " elements");
    }
    lambda.push_back(static_cast<std::int64_t>(next));
  }

  for (std::size_t n = 1; n < lambda.size(); ++n) {
    if (!ratio_holds(lambda[n - 1], lambda[n], e_at(static_cast<std::int64_t>(n)))) {
      throw InvariantViolation("ratio condition fails at n = " + std::to_string(n));
    }
  }
  std::vector<std::int64_t> all = lambda;
  if (!flavor.analytic) {
    for (auto x : lambda) all.push_back(-x);
  }
  out.spectrum = SpectrumSet::from_unsorted(std::move(all));
  return out;
}

struct SquaresFlavor {
  bool analytic;
  std::int64_t constant(int s) const {
    return analytic ? linearize_D(s, 2 * s + 1).C_s : block_constant(s);
  }
  // Largest element of the unshifted block B(s, 2a) or D(s, 2a).
  std::int64_t block_max(int s, std::int64_t a) const {
    const std::int64_t two_a = checked::mul(2, a);
    return analytic ? block_D(s, two_a).max() : block_B(s, two_a).max();
  }
  std::int64_t block_min_positive(int s, std::int64_t a) const {
    const std::int64_t two_a = checked::mul(2, a);
    return analytic ? block_D(s, two_a).min() : -block_B(s, two_a).max();
  }
};

// Smallest a >= 1 with pred(a); pred monotone. Throws OverflowError.
std::int64_t smallest_true(const std::function<bool(std::int64_t)>& pred) {
  std::int64_t hi = 1;
  while (!pred(hi)) hi = checked::mul(hi, 2);
  std::int64_t lo = hi / 2;  // pred(lo) false unless hi == 1
  if (hi == 1) return 1;
  while (hi - lo > 1) {
    const std::int64_t mid = lo + (hi - lo) / 2;
    if (pred(mid)) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return hi;
}

SpectrumBuild build_squares(const RealSequence& w, int count, const SquaresFlavor& flavor) {
  if (count < 1) throw ParameterError("block count must be >= 1");
  if (count > kMaxBlockS) {
    throw ParameterError("block count " + std::to_string(count) + " exceeds the cap " +
                         std::to_string(kMaxBlockS));
  }
  SpectrumBuild out;
  SpectrumSet acc;
  std::int64_t prev_max = 0;
  for (int s = 1; s <= count; ++s) {
    const std::int64_t C = flavor.constant(s);
    const std::int64_t Ctau = square_tau_constant(s, flavor.analytic);
    const double need = static_cast<double>(Ctau);
    auto pred = [&](std::int64_t a) {
      if (a - C < 1) return false;
      if (!(std::sqrt(w(a - C)) > need)) return false;
      // nu = a^2 must clear the unshifted block and the previous blocks.
      const auto a2 = static_cast<long double>(a) * static_cast<long double>(a);
      const auto lowest = a2 - static_cast<long double>(flavor.block_max(s, a));
      if (!flavor.analytic && lowest <= 0.0L) return false;
      const auto first = flavor.analytic
                             ? a2 + static_cast<long double>(flavor.block_min_positive(s, a))
                             : lowest;
      return first > static_cast<long double>(prev_max);
    };
    std::int64_t a = 0;
    std::int64_t nu = 0;
    try {
      a = smallest_true(pred);
      nu = checked::mul(a, a);
    } catch (const OverflowError& ex) {
      throw OverflowError("squares block s = " + std::to_string(s) + " needs max|tau| + 1 = " +
                          std::to_string(Ctau) + " < sqrt(w(a - C_s)); a^2 leaves int64 (" +
                          ex.what() + ")");
    }
    const std::int64_t two_a = checked::mul(2, a);
    BlockRecord rec{flavor.analytic ? "D_nu" : "B_nu", s, two_a, nu};
    const SpectrumSet blk = rec.materialize();
    for (const auto& p : square_perturbations(rec)) {
      if (!(static_cast<double>(std::abs(p.tau)) < std::sqrt(w(p.k)))) {
        throw InvariantViolation("perturbation " + std::to_string(p.tau) + " at b = " +
                                 std::to_string(p.b) + " is not below sqrt(w(k))");
      }
    }
    prev_max = blk.max();
    acc = set_union(acc, blk);
    out.manifest.push_back(rec);
  }
  out.spectrum = acc;
  return out;
}

}  // namespace

SpectrumBuild build_hadamard_spectrum(const RealSequence& eps, std::int64_t N,
                                      const HadamardOptions& options) {
  return build_hadamard(eps, N, options, HadamardFlavor{false});
}

SpectrumBuild build_analytic_hadamard_spectrum(const RealSequence& eps, std::int64_t N,
                                               const HadamardOptions& options) {
  return build_hadamard(eps, N, options, HadamardFlavor{true});
}

SpectrumBuild build_squares_spectrum(const RealSequence& w, int count) {
  return build_squares(w, count, SquaresFlavor{false});
}

SpectrumBuild build_analytic_squares_spectrum(const RealSequence& w, int count) {
  return build_squares(w, count, SquaresFlavor{true});
}

std::int64_t square_tau_constant(int s, bool analytic) {
  const std::int64_t a = 2 * s + 1;
  const auto cert = analytic ? linearize_D(s, a) : linearize(s, a);
  std::int64_t top = 0;
  for (const auto& e : cert.entries) {
    const std::int64_t r = e.b - e.l * a;
    top = std::max(top, std::abs(checked::sub(r, checked::mul(e.l, e.l))));
  }
  return top + 1;
}

std::vector<SquarePerturbation> square_perturbations(const BlockRecord& block) {
  if ((block.kind != "B_nu" && block.kind != "D_nu") || !block.nu || block.a % 2 != 0) {
    throw ParameterError("squares block must be B_nu or D_nu with even a and nu = (a/2)^2");
  }
  const std::int64_t half = block.a / 2;
  if (checked::mul(half, half) != *block.nu) {
    throw ParameterError("squares block must have nu = (a/2)^2");
  }
  const bool analytic = block.kind == "D_nu";
  const auto cert = analytic ? linearize_D(block.s, block.a) : linearize(block.s, block.a);
  std::vector<SquarePerturbation> out;
  const SpectrumSet blk = block.materialize();
  for (auto b : blk.elements()) {
    if (b <= 0) continue;
    const auto& e = cert.at(checked::sub(b, *block.nu));
    const std::int64_t k = checked::add(half, e.l);
    out.push_back({b, k, checked::sub(b, checked::mul(k, k))});
  }
  return out;
}

void write_spectrum(std::ostream& out, const SpectrumSet& L) {
  for (auto x : L.elements()) out << x << '\n';
}

SpectrumSet read_spectrum(std::istream& in) {
  std::vector<std::int64_t> v;
  std::string line;
  while (std::getline(in, line)) {
    const std::string t = csv::trim(line);
    if (t.empty()) continue;
    std::size_t used = 0;
    long long x = 0;
    try {
      x = std::stoll(t, &used);
    } catch (const std::exception&) {
      throw ParameterError("spectrum line is not an integer: " + t);
    }
    if (used != t.size()) throw ParameterError("spectrum line is not an integer: " + t);
    v.push_back(x);
  }
  std::vector<std::int64_t> sorted = v;
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
    throw ParameterError("spectrum file contains duplicates");
  }
  return SpectrumSet(std::move(sorted));
}

nlohmann::json manifest_to_json(const std::vector<BlockRecord>& manifest) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& r : manifest) {
    nlohmann::json j;
    j["kind"] = r.kind;
    j["s"] = r.s;
    j["a"] = r.a;
    j["nu"] = r.nu ? nlohmann::json(*r.nu) : nlohmann::json(nullptr);
    arr.push_back(j);
  }
  return arr;
}

std::vector<BlockRecord> manifest_from_json(const nlohmann::json& j) {
  if (!j.is_array()) throw ParameterError("manifest must be a JSON array");
  std::vector<BlockRecord> out;
  for (const auto& e : j) {
    BlockRecord r;
    try {
      r.kind = e.at("kind").get<std::string>();
      r.s = e.at("s").get<int>();
      r.a = e.at("a").get<std::int64_t>();
      if (e.contains("nu") && !e.at("nu").is_null()) r.nu = e.at("nu").get<std::int64_t>();
    } catch (const nlohmann::json::exception& ex) {
      throw ParameterError(std::string("bad manifest record: ") + ex.what());
    }
    out.push_back(r);
  }
  return out;
}

}  // namespace menshov
