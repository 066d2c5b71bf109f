#include "menshov/riesz.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <numbers>
#include <ostream>
#include <random>

#include <nlohmann/json.hpp>

#include "menshov/errors.hpp"
#include "csv_util.hpp"

namespace menshov {

namespace {
constexpr double kPi = std::numbers::pi;
constexpr double kLog2 = std::numbers::ln2;
using u128 = unsigned __int128;
}  // namespace

// ---------------------------------------------------------------- Natural

Natural::Natural(std::uint64_t v) {
  if (v != 0) limbs_.push_back(v);
}

Natural Natural::pow2(std::size_t e) {
  Natural out;
  out.limbs_.assign(e / 64 + 1, 0);
  out.limbs_.back() = std::uint64_t{1} << (e % 64);
  return out;
}

void Natural::trim() {
  while (!limbs_.empty() && limbs_.back() == 0) limbs_.pop_back();
}

std::size_t Natural::bit_length() const {
  if (limbs_.empty()) return 0;
  return 64 * (limbs_.size() - 1) + (64 - static_cast<std::size_t>(std::countl_zero(limbs_.back())));
}

std::size_t Natural::trailing_zeros() const {
  for (std::size_t i = 0; i < limbs_.size(); ++i) {
    if (limbs_[i] != 0) return 64 * i + static_cast<std::size_t>(std::countr_zero(limbs_[i]));
  }
  return 0;
}

std::uint64_t Natural::to_u64() const {
  if (limbs_.size() > 1) throw OverflowError("natural number exceeds 64 bits");
  return limbs_.empty() ? 0 : limbs_[0];
}

double Natural::log2() const {
  if (limbs_.empty()) return -std::numeric_limits<double>::infinity();
  const std::size_t bl = bit_length();
  if (bl <= 64) return std::log2(static_cast<double>(limbs_[0]));
  // top 64 bits as a double, then the exponent
  Natural top = *this;
  top >>= bl - 64;
  return std::log2(static_cast<double>(top.limbs_[0])) + static_cast<double>(bl - 64);
}

std::string Natural::to_string() const {
  if (limbs_.empty()) return "0";
  constexpr std::uint64_t kChunk = 10'000'000'000'000'000'000ULL;  // 10^19
  std::vector<std::uint64_t> work = limbs_;
  std::vector<std::uint64_t> chunks;
  while (!work.empty()) {
    u128 rem = 0;
    for (std::size_t i = work.size(); i-- > 0;) {
      const u128 cur = (rem << 64) | work[i];
      work[i] = static_cast<std::uint64_t>(cur / kChunk);
      rem = cur % kChunk;
    }
    chunks.push_back(static_cast<std::uint64_t>(rem));
    while (!work.empty() && work.back() == 0) work.pop_back();
  }
  std::string out = std::to_string(chunks.back());
  for (std::size_t i = chunks.size() - 1; i-- > 0;) {
    std::string part = std::to_string(chunks[i]);
    out += std::string(19 - part.size(), '0') + part;
  }
  return out;
}

Natural& Natural::operator*=(const Natural& o) {
  if (limbs_.empty() || o.limbs_.empty()) {
    limbs_.clear();
    return *this;
  }
  std::vector<std::uint64_t> out(limbs_.size() + o.limbs_.size(), 0);
  for (std::size_t i = 0; i < limbs_.size(); ++i) {
    u128 carry = 0;
    for (std::size_t j = 0; j < o.limbs_.size(); ++j) {
      const u128 cur = static_cast<u128>(limbs_[i]) * o.limbs_[j] + out[i + j] + carry;
      out[i + j] = static_cast<std::uint64_t>(cur);
      carry = cur >> 64;
    }
    out[i + o.limbs_.size()] = static_cast<std::uint64_t>(carry);
  }
  limbs_ = std::move(out);
  trim();
  return *this;
}

Natural& Natural::operator<<=(std::size_t bits) {
  if (limbs_.empty() || bits == 0) return *this;
  const std::size_t whole = bits / 64, part = bits % 64;
  std::vector<std::uint64_t> out(limbs_.size() + whole + 1, 0);
  for (std::size_t i = 0; i < limbs_.size(); ++i) {
    out[i + whole] |= limbs_[i] << part;
    if (part != 0) out[i + whole + 1] |= limbs_[i] >> (64 - part);
  }
  limbs_ = std::move(out);
  trim();
  return *this;
}

Natural& Natural::operator>>=(std::size_t bits) {
  const std::size_t whole = bits / 64, part = bits % 64;
  if (whole >= limbs_.size()) {
    limbs_.clear();
    return *this;
  }
  std::vector<std::uint64_t> out(limbs_.size() - whole, 0);
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = limbs_[i + whole] >> part;
    if (part != 0 && i + whole + 1 < limbs_.size()) out[i] |= limbs_[i + whole + 1] << (64 - part);
  }
  limbs_ = std::move(out);
  trim();
  return *this;
}

Natural& Natural::operator-=(const Natural& o) {
  if (*this < o) throw ParameterError("natural subtraction would go negative");
  std::uint64_t borrow = 0;
  for (std::size_t i = 0; i < limbs_.size(); ++i) {
    const std::uint64_t rhs = i < o.limbs_.size() ? o.limbs_[i] : 0;
    const u128 need = static_cast<u128>(rhs) + borrow;
    if (static_cast<u128>(limbs_[i]) >= need) {
      limbs_[i] = static_cast<std::uint64_t>(limbs_[i] - need);
      borrow = 0;
    } else {
      limbs_[i] = static_cast<std::uint64_t>((static_cast<u128>(1) << 64) + limbs_[i] - need);
      borrow = 1;
    }
  }
  trim();
  return *this;
}

std::strong_ordering operator<=>(const Natural& a, const Natural& b) {
  if (a.limbs_.size() != b.limbs_.size()) return a.limbs_.size() <=> b.limbs_.size();
  for (std::size_t i = a.limbs_.size(); i-- > 0;) {
    if (a.limbs_[i] != b.limbs_[i]) return a.limbs_[i] <=> b.limbs_[i];
  }
  return std::strong_ordering::equal;
}

// Binary gcd; immediate for powers of two.
Natural gcd(Natural a, Natural b) {
  if (a.is_zero()) return b;
  if (b.is_zero()) return a;
  const std::size_t za = a.trailing_zeros(), zb = b.trailing_zeros();
  const std::size_t common = std::min(za, zb);
  a >>= za;
  b >>= zb;
  while (true) {
    if (a > b) std::swap(a, b);
    b -= a;
    if (b.is_zero()) break;
    b >>= b.trailing_zeros();
  }
  a <<= common;
  return a;
}

// ---------------------------------------------------------------- schedules

void RieszSchedule::validate() const {
  if (ratio_floor.size() != frequencies.size() || exact_ratio.size() != frequencies.size()) {
    throw InvariantViolation("schedule arrays differ in length");
  }
  for (std::size_t k = 0; k < frequencies.size(); ++k) {
    if (frequencies[k].is_zero()) throw InvariantViolation("schedule frequency must be positive");
    if (k == 0) continue;
    // The growth rule sets nu_{k+1} = nu_k L_k exactly, so the ratio meets
    // its floor with equality.
    if (frequencies[k] < frequencies[k - 1] * ratio_floor[k] ||
        !(frequencies[k] > frequencies[k - 1])) {
      throw InvariantViolation("schedule ratio below its floor at index " + std::to_string(k + 1));
    }
    if (!exact_ratio[k].is_zero() && frequencies[k - 1] * exact_ratio[k] != frequencies[k]) {
      throw InvariantViolation("recorded exact ratio is wrong at index " + std::to_string(k + 1));
    }
  }
}

std::optional<std::int64_t> RieszSchedule::frequency_i64(std::size_t k) const {
  if (k == 0 || k > frequencies.size()) throw ParameterError("schedule index out of range");
  const Natural& v = frequencies[k - 1];
  if (!v.fits_u64() || v.to_u64() > static_cast<std::uint64_t>(INT64_MAX)) return std::nullopt;
  return static_cast<std::int64_t>(v.to_u64());
}

nlohmann::json RieszSchedule::to_json() const {
  nlohmann::json freq = nlohmann::json::array(), floors = nlohmann::json::array();
  for (std::size_t k = 0; k < frequencies.size(); ++k) {
    freq.push_back(frequencies[k].to_string());
    floors.push_back(ratio_floor[k].to_string());
  }
  return {{"frequencies", freq}, {"ratio_floor", floors}};
}

RieszSchedule make_schedule(std::size_t n, const RieszGrowth& growth) {
  if (n == 0) throw ParameterError("schedule length must be positive");
  if (growth.first == 0) throw ParameterError("nu_1 must be positive");
  if (growth.base == 0 || growth.ratio == 0) throw ParameterError("growth factors must be positive");
  RieszSchedule out;
  out.frequencies.push_back(Natural(growth.first));
  out.ratio_floor.push_back(Natural(1));
  out.exact_ratio.push_back(Natural(1));
  Natural ratio_pow(growth.ratio);  // ratio^k for k = 1
  for (std::size_t k = 1; k < n; ++k) {
    const Natural L = Natural(growth.base) * ratio_pow;
    if (!(L > Natural(1))) throw ParameterError("growth rule must give L_k > 1");
    out.frequencies.push_back(out.frequencies.back() * L);
    out.ratio_floor.push_back(L);
    out.exact_ratio.push_back(L);
    ratio_pow *= Natural(growth.ratio);
  }
  return out;
}

RieszSchedule schedule_from_frequencies(const std::vector<std::uint64_t>& nu) {
  if (nu.empty()) throw ParameterError("schedule must be nonempty");
  RieszSchedule out;
  for (std::size_t k = 0; k < nu.size(); ++k) {
    out.frequencies.push_back(Natural(nu[k]));
    if (k == 0) {
      out.ratio_floor.push_back(Natural(1));
      out.exact_ratio.push_back(Natural(1));
      continue;
    }
    if (nu[k] <= nu[k - 1]) throw InvariantViolation("frequencies must increase");
    out.ratio_floor.push_back(Natural(nu[k] / nu[k - 1]));
    out.exact_ratio.push_back(nu[k] % nu[k - 1] == 0 ? Natural(nu[k] / nu[k - 1]) : Natural());
  }
  out.validate();
  return out;
}

// ---------------------------------------------------------------- phases

double one_minus_cos(double s) {
  const double v = std::sin(kPi * s);
  return 2.0 * v * v;
}

double log_one_minus_cos(double s) { return kLog2 + 2.0 * std::log(std::abs(std::sin(kPi * s))); }

namespace {

// Fixed-width residue mod 2^B, B = 64 * limbs.
using Residue = std::vector<std::uint64_t>;

// Bits [pos, pos + 64) of y; positions below zero read as zero.
std::uint64_t window64(const Residue& y, std::int64_t pos) {
  auto limb = [&](std::int64_t i) -> std::uint64_t {
    return (i < 0 || i >= static_cast<std::int64_t>(y.size())) ? 0 : y[static_cast<std::size_t>(i)];
  };
  const std::int64_t i = pos >= 0 ? pos / 64 : -((-pos + 63) / 64);
  const int off = static_cast<int>(pos - 64 * i);
  if (off == 0) return limb(i);
  return (limb(i) >> off) | (limb(i + 1) << (64 - off));
}

// y * m mod 2^B.
void mul_mod(Residue& y, const std::vector<std::uint64_t>& m) {
  Residue out(y.size(), 0);
  for (std::size_t j = 0; j < m.size() && j < y.size(); ++j) {
    u128 carry = 0;
    for (std::size_t i = 0; i + j < y.size(); ++i) {
      const u128 cur = static_cast<u128>(y[i]) * m[j] + out[i + j] + carry;
      out[i + j] = static_cast<std::uint64_t>(cur);
      carry = cur >> 64;
    }
  }
  y = std::move(out);
}

// Signed fraction from the top 128 bits of (y << shift) mod 2^B.
double signed_phase(const Residue& y, std::size_t shift) {
  const auto B = static_cast<std::int64_t>(64 * y.size());
  const std::int64_t top = B - static_cast<std::int64_t>(shift);
  const std::uint64_t hi = window64(y, top - 64);
  const std::uint64_t lo = window64(y, top - 128);
  if ((hi >> 63) == 0) return std::ldexp(static_cast<double>(hi), -64) + std::ldexp(static_cast<double>(lo), -128);
  // 1 - u, to 2^-128
  return -(std::ldexp(static_cast<double>(~hi), -64) + std::ldexp(static_cast<double>(~lo) + 1.0, -128));
}

bool is_pow2(const Natural& v) {
  return !v.is_zero() && v.bit_length() == v.trailing_zeros() + 1;
}

PhaseTable grid_phases(const RieszSchedule& sched, std::size_t n_max, const CircleGrid& grid) {
  const std::uint64_t M = grid.size();
  const Natural& top = sched.frequencies[n_max - 1];
  if (!top.fits_u64() || !(Natural(M) > top * Natural(2))) {
    throw AliasingError("grid size " + std::to_string(M) + " must exceed 2 nu_max, nu_max has " +
                        std::to_string(top.bit_length()) + " bits; use Monte Carlo sampling");
  }
  PhaseTable out;
  out.points = M;
  out.n = n_max;
  out.t = grid.points();
  out.phase.resize(M * n_max);
  for (std::size_t k = 1; k <= n_max; ++k) {
    const std::uint64_t nu = sched.frequencies[k - 1].to_u64();
    // nu t_j / 2 pi = nu j / M - nu / 2
    const std::uint64_t offset = (nu % 2 == 0) ? 0 : M / 2;
    for (std::size_t j = 0; j < M; ++j) {
      const auto r = static_cast<std::uint64_t>((static_cast<u128>(nu % M) * j + M - offset) % M);
      const double u = static_cast<double>(r) / static_cast<double>(M);
      out.phase[j * n_max + (k - 1)] = (2 * r < M) ? u : u - 1.0;
    }
  }
  return out;
}

PhaseTable monte_carlo_phases(const RieszSchedule& sched, std::size_t n_max,
                              std::size_t points, std::uint64_t seed) {
  if (points == 0) throw ParameterError("Monte Carlo sampling needs at least one point");
  const std::size_t bits = sched.frequencies[n_max - 1].bit_length() + 64;
  const std::size_t limbs = std::max<std::size_t>(2, (bits + 63) / 64);
  PhaseTable out;
  out.points = points;
  out.n = n_max;
  out.t.resize(points);
  out.phase.resize(points * n_max);
  std::mt19937_64 rng(seed);
  Residue X(limbs), y;
  for (std::size_t p = 0; p < points; ++p) {
    for (auto& l : X) l = rng();
    const double x = std::ldexp(static_cast<double>(X.back() >> 11), -53);
    out.t[p] = x < 0.5 ? 2.0 * kPi * x : 2.0 * kPi * (x - 1.0);
    // y holds nu_k X / 2^shift mod 2^B; power-of-two ratios only move shift.
    y = X;
    mul_mod(y, sched.frequencies[0].limbs());
    std::size_t shift = 0;
    for (std::size_t k = 1; k <= n_max; ++k) {
      if (k > 1) {
        const Natural& r = sched.exact_ratio[k - 1];
        if (is_pow2(r)) {
          shift += r.trailing_zeros();
        } else {
          if (shift != 0) {
            Residue z(limbs, 0);
            for (std::size_t i = 0; i < limbs; ++i) {
              z[i] = window64(y, static_cast<std::int64_t>(64 * i) - static_cast<std::int64_t>(shift));
            }
            y = std::move(z);
            shift = 0;
          }
          if (r.is_zero()) {
            y = X;
            mul_mod(y, sched.frequencies[k - 1].limbs());
          } else {
            mul_mod(y, r.limbs());
          }
        }
      }
      out.phase[p * n_max + (k - 1)] = signed_phase(y, shift);
    }
  }
  return out;
}

void require_n(const PhaseTable& phases, std::size_t n_max) {
  if (n_max == 0 || n_max > phases.n) {
    throw ParameterError("n_max must lie in [1, " + std::to_string(phases.n) + "]");
  }
}

double safe_fraction(std::size_t count, std::size_t total) {
  return total == 0 ? 0.0 : static_cast<double>(count) / static_cast<double>(total);
}

}  // namespace

PhaseTable riesz_phases(const RieszSchedule& sched, std::size_t n_max,
                        const RieszSampling& sampling) {
  sched.validate();
  if (n_max == 0 || n_max > sched.size()) {
    throw ParameterError("n_max must lie in [1, " + std::to_string(sched.size()) + "]");
  }
  if (sampling.mode == RieszSampling::Mode::Grid) return grid_phases(sched, n_max, sampling.grid);
  return monte_carlo_phases(sched, n_max, sampling.points, sampling.seed);
}

// ---------------------------------------------------------------- cosine products

CosineProductReport cosine_product_bounds(const RieszSchedule& sched,
                                          const RieszSampling& sampling,
                                          const CosineProductOptions& options) {
  return cosine_product_bounds(riesz_phases(sched, options.n_max, sampling), options);
}

CosineProductReport cosine_product_bounds(const PhaseTable& phases,
                                          const CosineProductOptions& options) {
  const std::size_t n = options.n_max;
  require_n(phases, n);
  if (options.window_lo < 1 || options.window_lo > options.window_hi || options.window_hi > n) {
    throw ParameterError("bound window must satisfy 1 <= lo <= hi <= n_max");
  }
  if (!(options.c > 0.0 && options.c < 1.0)) throw ParameterError("c must lie in (0, 1)");
  const double log3 = std::log(3.0), logc = std::log(options.c);
  const double log_mask = std::log(options.mask_below);

  CosineProductReport rep;
  rep.points = phases.points;
  rep.n_max = n;
  rep.c = options.c;
  rep.window_lo = options.window_lo;
  rep.window_hi = options.window_hi;
  rep.t = phases.t;
  rep.mask.assign(phases.points, false);
  rep.lower_from.assign(phases.points, n + 1);
  rep.upper_from.assign(phases.points, n + 1);
  rep.mean_log.assign(phases.points, 0.0);
  if (options.keep_trace) rep.log_trace.assign(phases.points * n, 0.0);

  std::size_t lower = 0, upper = 0, both = 0;
  double sum_mean = 0.0;
  for (std::size_t p = 0; p < phases.points; ++p) {
    double L = 0.0;
    std::size_t lower_from = 1, upper_from = 1;
    bool masked = false;
    for (std::size_t k = 1; k <= n; ++k) {
      const double term = log_one_minus_cos(phases.at(p, k));
      if (!(term >= log_mask)) masked = true;
      L += term;
      if (options.keep_trace) rep.log_trace[p * n + k - 1] = L;
      const double kd = static_cast<double>(k);
      if (!(L > -kd * log3)) lower_from = k + 1;
      if (!(L < kd * logc)) upper_from = k + 1;
    }
    rep.mask[p] = masked;
    rep.lower_from[p] = lower_from;
    rep.upper_from[p] = upper_from;
    rep.mean_log[p] = L / static_cast<double>(n);
    if (masked) {
      ++rep.masked;
      continue;
    }
    // "holds on the window" also needs the bound at window points before
    // the last failure, so judge the window directly from the trace flags.
    bool lo_ok = true, up_ok = true;
    double Lw = 0.0;
    for (std::size_t k = 1; k <= options.window_hi; ++k) {
      Lw += log_one_minus_cos(phases.at(p, k));
      if (k < options.window_lo) continue;
      const double kd = static_cast<double>(k);
      lo_ok = lo_ok && Lw > -kd * log3;
      up_ok = up_ok && Lw < kd * logc;
    }
    lower += lo_ok;
    upper += up_ok;
    both += lo_ok && up_ok;
    sum_mean += rep.mean_log[p];
  }
  const std::size_t used = phases.points - rep.masked;
  rep.fraction_lower = safe_fraction(lower, used);
  rep.fraction_upper = safe_fraction(upper, used);
  rep.fraction_both = safe_fraction(both, used);
  rep.empirical_A = used == 0 ? 0.0 : sum_mean / static_cast<double>(used);
  return rep;
}

nlohmann::json CosineProductReport::summary_json() const {
  return {{"points", points},
          {"masked", masked},
          {"n_max", n_max},
          {"window", {window_lo, window_hi}},
          {"c", c},
          {"fraction_lower", fraction_lower},
          {"fraction_upper", fraction_upper},
          {"fraction_both", fraction_both},
          {"empirical_A", empirical_A},
          {"A", -kLog2}};
}

void write_cosine_trace_csv(std::ostream& out, const CosineProductReport& report) {
  if (report.log_trace.size() != report.points * report.n_max) {
    throw ParameterError("cosine report holds no trace; set keep_trace");
  }
  const double log3 = std::log(3.0), logc = std::log(report.c);
  out << "t,n,product,bound_lo,bound_hi,pass\n";
  for (std::size_t p = 0; p < report.points; ++p) {
    for (std::size_t k = 1; k <= report.n_max; ++k) {
      const double L = report.log_trace[p * report.n_max + k - 1];
      const double kd = static_cast<double>(k);
      const bool pass = !report.mask[p] && L > -kd * log3 && L < kd * logc;
      out << csv::fmt(report.t[p]) << ',' << k << ',' << csv::fmt(std::exp(L)) << ','
          << csv::fmt(std::exp(-kd * log3)) << ',' << csv::fmt(std::exp(kd * logc)) << ','
          << (pass ? 1 : 0) << '\n';
    }
  }
}

// ---------------------------------------------------------------- almost orthogonality

double AlmostOrthogonality::entry(std::size_t k, std::size_t kp) const {
  return std::exp2(log2_entry[(k - 1) * n + kp - 1]);
}

nlohmann::json AlmostOrthogonality::to_json() const {
  nlohmann::json pairs = nlohmann::json::array();
  for (std::size_t k = 1; k <= n; ++k) {
    for (std::size_t kp = k + 1; kp <= n; ++kp) {
      pairs.push_back({{"k", k},
                       {"k_prime", kp},
                       {"log2_integral", log2_entry[(k - 1) * n + kp - 1]},
                       {"log2_bound", -static_cast<double>(k + kp)},
                       {"pass", static_cast<bool>(pass[(k - 1) * n + kp - 1])}});
    }
  }
  return {{"n", n}, {"all_pass", all_pass}, {"pairs", pairs}};
}

AlmostOrthogonality almost_orthogonality(const RieszSchedule& sched, std::size_t n) {
  sched.validate();
  if (n == 0) n = sched.size();
  if (n > sched.size()) throw ParameterError("almost_orthogonality: n exceeds schedule length");
  AlmostOrthogonality out;
  out.n = n;
  out.log2_entry.assign(n * n, 0.0);
  out.pass.assign(n * n, true);
  const double log2_norm = std::log2(kPi * kPi / 3.0);
  for (std::size_t k = 1; k <= n; ++k) {
    out.log2_entry[(k - 1) * n + k - 1] = log2_norm;
    for (std::size_t kp = k + 1; kp <= n; ++kp) {
      const Natural& a = sched.frequencies[k - 1];
      const Natural& b = sched.frequencies[kp - 1];
      const double log2_ab = a.log2() + b.log2() - 2.0 * gcd(a, b).log2();
      const double v = log2_norm - log2_ab;
      const bool ok = v < -static_cast<double>(k + kp);
      for (auto [i, j] : {std::pair{k, kp}, std::pair{kp, k}}) {
        out.log2_entry[(i - 1) * n + j - 1] = v;
        out.pass[(i - 1) * n + j - 1] = ok;
      }
      if (!ok && out.all_pass) {
        out.all_pass = false;
        out.first_fail_k = k;
        out.first_fail_kp = kp;
      }
    }
  }
  return out;
}

SampledInnerProduct sampled_inner_product(const PhaseTable& phases, std::size_t k,
                                          std::size_t kp, double mask_below) {
  require_n(phases, std::max(k, kp));
  if (k == 0 || kp == 0) throw ParameterError("indices are 1-based");
  const double log_mask = std::log(mask_below);
  double sum = 0.0, sum2 = 0.0;
  std::size_t used = 0;
  for (std::size_t p = 0; p < phases.points; ++p) {
    const double a = log_one_minus_cos(phases.at(p, k));
    const double b = log_one_minus_cos(phases.at(p, kp));
    if (!(a >= log_mask) || !(b >= log_mask)) continue;
    const double v = (a + kLog2) * (b + kLog2);
    sum += v;
    sum2 += v * v;
    ++used;
  }
  SampledInnerProduct out;
  out.used = used;
  if (used == 0) return out;
  const double m = sum / static_cast<double>(used);
  out.value = m;
  if (used > 1) {
    const double var = std::max(0.0, (sum2 - used * m * m) / static_cast<double>(used - 1));
    out.std_error = std::sqrt(var / static_cast<double>(used));
  }
  return out;
}

// ---------------------------------------------------------------- analytic products

AnalyticProductReport analytic_product_diagnostics(const RieszSchedule& sched,
                                                   const RieszSampling& sampling,
                                                   const AnalyticProductOptions& options) {
  return analytic_product_diagnostics(riesz_phases(sched, options.n_max, sampling), options);
}

AnalyticProductReport analytic_product_diagnostics(const PhaseTable& phases,
                                                   const AnalyticProductOptions& options) {
  const std::size_t n = options.n_max;
  require_n(phases, n);
  if (options.window_lo < 1 || options.window_lo > n) {
    throw ParameterError("window_lo must lie in [1, n_max]");
  }
  if (!(options.threshold > 0.0)) throw ParameterError("threshold must be positive");
  if (!(options.lower_base > 0.0)) throw ParameterError("lower_base must be positive");
  const double log_thr = std::log(options.threshold);
  const double log_base = std::log(options.lower_base);
  const double log_mask = std::log(options.mask_below);

  AnalyticProductReport rep;
  rep.points = phases.points;
  rep.n_max = n;
  rep.threshold = options.threshold;
  rep.lower_base = options.lower_base;
  rep.t = phases.t;
  rep.mask.assign(phases.points, false);
  rep.min_log_abs.assign(phases.points, 0.0);
  rep.K1.assign(phases.points, n + 1);

  std::size_t liminf = 0, lower = 0;
  for (std::size_t p = 0; p < phases.points; ++p) {
    // q = mant * 2^expo, renormalized each step so no underflow at large n
    Complex mant(1.0, 0.0);
    long expo = 0;
    double cosine_log = 0.0;
    double min_log = std::numeric_limits<double>::infinity();
    std::size_t k1 = 1;
    bool masked = false;
    for (std::size_t k = 1; k <= n; ++k) {
      const double s = phases.at(p, k);
      const double term = log_one_minus_cos(s);
      if (!(term >= log_mask)) {
        masked = true;
        break;
      }
      cosine_log += term;
      // 1 - e^{2 pi i s} = 2 sin(pi s) (sin(pi s) - i cos(pi s))
      const double sn = std::sin(kPi * s), cs = std::cos(kPi * s);
      mant *= Complex(2.0 * sn * sn, -2.0 * sn * cs);
      int e = 0;
      std::frexp(std::abs(mant), &e);
      mant = Complex(std::ldexp(mant.real(), -e), std::ldexp(mant.imag(), -e));
      expo += e;
      const double log_abs = std::log(std::abs(mant)) + static_cast<double>(expo) * kLog2;
      min_log = std::min(min_log, log_abs);
      const double kd = static_cast<double>(k);
      if (!(log_abs > kd * log_base)) k1 = k + 1;
      const double diff = std::abs(cosine_log - (2.0 * log_abs - kd * kLog2));
      const double scale = std::max(1.0, std::abs(cosine_log));
      rep.cross_identity_error = std::max(rep.cross_identity_error, diff / scale);
    }
    rep.mask[p] = masked;
    if (masked) {
      ++rep.masked;
      rep.min_log_abs[p] = -std::numeric_limits<double>::infinity();
      continue;
    }
    rep.min_log_abs[p] = min_log;
    rep.K1[p] = k1;
    liminf += min_log < log_thr;
    lower += k1 <= options.window_lo;
  }
  const std::size_t used = phases.points - rep.masked;
  rep.fraction_liminf = safe_fraction(liminf, used);
  rep.fraction_lower = safe_fraction(lower, used);
  return rep;
}

nlohmann::json AnalyticProductReport::summary_json() const {
  return {{"points", points},
          {"masked", masked},
          {"n_max", n_max},
          {"threshold", threshold},
          {"lower_base", lower_base},
          {"fraction_liminf", fraction_liminf},
          {"fraction_lower", fraction_lower},
          {"cross_identity_error", cross_identity_error}};
}

// ---------------------------------------------------------------- CLT

double clt_phi(double s) {
  static const double norm = std::sqrt(kPi * kPi / 12.0);
  return std::log(2.0 * std::abs(std::sin(kPi * s))) / norm;
}

double ks_distance_normal(std::vector<double> sample) {
  if (sample.empty()) throw ParameterError("KS distance of an empty sample");
  std::sort(sample.begin(), sample.end());
  const double n = static_cast<double>(sample.size());
  double d = 0.0;
  for (std::size_t i = 0; i < sample.size(); ++i) {
    const double F = 0.5 * std::erfc(-sample[i] / std::numbers::sqrt2);
    d = std::max({d, static_cast<double>(i + 1) / n - F, F - static_cast<double>(i) / n});
  }
  return d;
}

nlohmann::json CltReport::to_json() const {
  return {{"N", N}, {"used", used}, {"ks_distance", ks_distance}, {"mean", mean}, {"stddev", stddev}};
}

CltReport clt_check(const RieszSchedule& sched, const RieszSampling& sampling, std::size_t N) {
  return clt_check(riesz_phases(sched, N, sampling), N);
}

CltReport clt_check(const PhaseTable& phases, std::size_t N, double mask_below) {
  require_n(phases, N);
  const double log_mask = std::log(mask_below);
  std::vector<double> Z;
  Z.reserve(phases.points);
  for (std::size_t p = 0; p < phases.points; ++p) {
    double sum = 0.0;
    bool masked = false;
    for (std::size_t k = 1; k <= N; ++k) {
      const double s = phases.at(p, k);
      if (!(log_one_minus_cos(s) >= log_mask)) {
        masked = true;
        break;
      }
      sum += clt_phi(s);
    }
    if (!masked) Z.push_back(sum / std::sqrt(static_cast<double>(N)));
  }
  CltReport rep;
  rep.N = N;
  rep.used = Z.size();
  if (Z.empty()) throw ConstructionError("every sample point is masked");
  double m = 0.0;
  for (double z : Z) m += z;
  m /= static_cast<double>(Z.size());
  double v = 0.0;
  for (double z : Z) v += (z - m) * (z - m);
  rep.mean = m;
  rep.stddev = std::sqrt(v / static_cast<double>(Z.size()));
  rep.ks_distance = ks_distance_normal(std::move(Z));
  return rep;
}

}  // namespace menshov
