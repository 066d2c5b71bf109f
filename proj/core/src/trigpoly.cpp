#include "menshov/trigpoly.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <numbers>
#include <ostream>
#include <string>
#include <unordered_map>

#include "checked.hpp"
#include "csv_util.hpp"
#include "fft.hpp"
#include "menshov/errors.hpp"

namespace menshov {

namespace {

// Direct accumulation costs one pass over the grid per term; past this many
// terms a single transform is cheaper.
constexpr std::size_t kDenseThreshold = 4;

}  // namespace

TrigPoly::TrigPoly(std::initializer_list<std::pair<const std::int64_t, Complex>> init) {
  for (const auto& [k, c] : init) add(k, c);
}

TrigPoly::TrigPoly(Map coeffs) {
  for (const auto& [k, c] : coeffs) {
    if (c != Complex{}) coeffs_.emplace(k, c);
  }
}

Complex TrigPoly::coeff(std::int64_t k) const {
  auto it = coeffs_.find(k);
  return it == coeffs_.end() ? Complex{} : it->second;
}

void TrigPoly::set(std::int64_t k, Complex c) {
  if (c == Complex{}) {
    coeffs_.erase(k);
  } else {
    coeffs_[k] = c;
  }
}

void TrigPoly::add(std::int64_t k, Complex c) {
  if (c == Complex{}) return;
  auto [it, inserted] = coeffs_.try_emplace(k, c);
  if (!inserted) {
    it->second += c;
    if (it->second == Complex{}) coeffs_.erase(it);
  }
}

std::int64_t TrigPoly::degree() const {
  if (coeffs_.empty()) return 0;
  return std::max(std::abs(coeffs_.begin()->first), std::abs(coeffs_.rbegin()->first));
}

std::int64_t TrigPoly::min_frequency() const {
  return coeffs_.empty() ? 0 : coeffs_.begin()->first;
}

std::int64_t TrigPoly::max_frequency() const {
  return coeffs_.empty() ? 0 : coeffs_.rbegin()->first;
}

std::vector<std::int64_t> TrigPoly::spectrum() const {
  std::vector<std::int64_t> out;
  out.reserve(coeffs_.size());
  for (const auto& kv : coeffs_) out.push_back(kv.first);
  return out;
}

bool TrigPoly::is_analytic() const { return coeffs_.empty() || coeffs_.begin()->first >= 1; }

TrigPoly TrigPoly::pruned(double tol) const {
  TrigPoly out;
  for (const auto& [k, c] : coeffs_) {
    if (std::abs(c) > tol) out.coeffs_.emplace(k, c);
  }
  return out;
}

TrigPoly& TrigPoly::operator+=(const TrigPoly& other) {
  for (const auto& [k, c] : other.coeffs_) add(k, c);
  return *this;
}

TrigPoly& TrigPoly::operator-=(const TrigPoly& other) {
  for (const auto& [k, c] : other.coeffs_) add(k, -c);
  return *this;
}

TrigPoly& TrigPoly::operator*=(Complex c) {
  if (c == Complex{}) {
    coeffs_.clear();
    return *this;
  }
  for (auto it = coeffs_.begin(); it != coeffs_.end();) {
    it->second *= c;
    if (it->second == Complex{}) {
      it = coeffs_.erase(it);
    } else {
      ++it;
    }
  }
  return *this;
}

TrigPoly operator+(TrigPoly a, const TrigPoly& b) { return a += b; }
TrigPoly operator-(TrigPoly a, const TrigPoly& b) { return a -= b; }
TrigPoly operator*(Complex c, TrigPoly a) { return a *= c; }

double max_coeff_diff(const TrigPoly& a, const TrigPoly& b) {
  double worst = 0.0;
  for (const auto& [k, c] : a.coeffs()) worst = std::max(worst, std::abs(c - b.coeff(k)));
  for (const auto& [k, c] : b.coeffs()) {
    if (a.coeffs().count(k) == 0) worst = std::max(worst, std::abs(c));
  }
  return worst;
}

SampledFunction evaluate(const TrigPoly& P, const CircleGrid& grid) {
  grid.require_degree(P.degree());
  return sample(P, grid);
}

SampledFunction sample(const TrigPoly& P, const CircleGrid& grid) {
  SampledFunction out(grid);
  if (P.support_size() > kDenseThreshold) {
    std::vector<std::pair<std::int64_t, Complex>> terms(P.coeffs().begin(), P.coeffs().end());
    out.values = fft::synthesize(terms, grid.size());
    return out;
  }
  for (const auto& [k, c] : P.coeffs()) grid.accumulate(k, c, out.values);
  return out;
}

Complex evaluate_at(const TrigPoly& P, double t) {
  Complex acc{};
  for (const auto& [k, c] : P.coeffs()) {
    const double angle = std::fmod(static_cast<double>(k) * t, 2.0 * std::numbers::pi);
    acc += c * Complex(std::cos(angle), std::sin(angle));
  }
  return acc;
}

TrigPoly partial_sum(const TrigPoly& P, std::int64_t n) {
  if (n < 0) throw ParameterError("partial_sum order must be >= 0");
  return partial_sum_rect(P, -n, n);
}

TrigPoly partial_sum_rect(const TrigPoly& P, std::int64_t m, std::int64_t n) {
  if (m > n) {
    throw ParameterError("partial_sum_rect needs m <= n, got m = " + std::to_string(m) +
                         ", n = " + std::to_string(n));
  }
  TrigPoly::Map out(P.coeffs().lower_bound(m), P.coeffs().upper_bound(n));
  return TrigPoly(std::move(out));
}

void for_each_partial_sum(
    const TrigPoly& P, const CircleGrid& grid,
    const std::function<void(std::int64_t n, const std::vector<Complex>& values)>& visit) {
  grid.require_degree(P.degree());
  for_each_sampled_partial_sum(P, grid, visit);
}

void for_each_sampled_partial_sum(
    const TrigPoly& P, const CircleGrid& grid,
    const std::function<void(std::int64_t n, const std::vector<Complex>& values)>& visit) {
  // Group support by |k|; S_n changes only when n hits one of these.
  std::map<std::int64_t, std::vector<std::pair<std::int64_t, Complex>>> by_abs;
  for (const auto& [k, c] : P.coeffs()) by_abs[std::abs(k)].emplace_back(k, c);
  std::vector<Complex> running(grid.size(), Complex{});
  for (const auto& [n, terms] : by_abs) {
    for (const auto& [k, c] : terms) grid.accumulate(k, c, running);
    visit(n, running);
  }
}

SampledFunction s_star(const TrigPoly& P, const CircleGrid& grid) {
  SampledFunction out(grid);
  for_each_partial_sum(P, grid, [&](std::int64_t, const std::vector<Complex>& v) {
    for (std::size_t j = 0; j < v.size(); ++j) {
      const double a = std::abs(v[j]);
      if (a > out.values[j].real()) out.values[j] = a;
    }
  });
  return out;
}

namespace {

double cross(const Complex& o, const Complex& a, const Complex& b) {
  return (a.real() - o.real()) * (b.imag() - o.imag()) -
         (a.imag() - o.imag()) * (b.real() - o.real());
}

// Diameter of a planar point set: brute force when small, convex hull otherwise.
double diameter(std::vector<Complex>& pts) {
  const std::size_t n = pts.size();
  if (n < 2) return 0.0;
  auto brute = [](const std::vector<Complex>& p) {
    double best = 0.0;
    for (std::size_t a = 0; a < p.size(); ++a) {
      for (std::size_t b = a + 1; b < p.size(); ++b) best = std::max(best, std::norm(p[a] - p[b]));
    }
    return std::sqrt(best);
  };
  if (n <= 48) return brute(pts);
  std::sort(pts.begin(), pts.end(), [](const Complex& a, const Complex& b) {
    return a.real() < b.real() || (a.real() == b.real() && a.imag() < b.imag());
  });
  std::vector<Complex> hull(2 * n);
  std::size_t h = 0;
  for (std::size_t i = 0; i < n; ++i) {
    while (h >= 2 && cross(hull[h - 2], hull[h - 1], pts[i]) <= 0) --h;
    hull[h++] = pts[i];
  }
  for (std::size_t i = n - 1, lower = h + 1; i-- > 0;) {
    while (h >= lower && cross(hull[h - 2], hull[h - 1], pts[i]) <= 0) --h;
    hull[h++] = pts[i];
  }
  hull.resize(h > 1 ? h - 1 : h);
  return brute(hull);
}

}  // namespace

SampledFunction s_star_star(const TrigPoly& P, const CircleGrid& grid) {
  grid.require_degree(P.degree());
  return sample_s_star_star(P, grid);
}

SampledFunction sample_s_star_star(const TrigPoly& P, const CircleGrid& grid) {
  // Window sums S_{m,n} are differences of prefix sums over the support in
  // increasing k, so S** is the diameter of the prefix-sum point cloud.
  SampledFunction out(grid);
  std::vector<Complex> prefix(P.support_size() + 1);
  for (std::size_t j = 0; j < grid.size(); ++j) {
    prefix[0] = Complex{};
    std::size_t i = 1;
    for (const auto& [k, c] : P.coeffs()) {
      prefix[i] = prefix[i - 1] + c * grid.unit(k, j);
      ++i;
    }
    out.values[j] = diameter(prefix);  // reorders prefix; it is rebuilt next pass
  }
  return out;
}

TrigPoly contract(const TrigPoly& P, std::int64_t r) {
  if (r < 1) throw ParameterError("contraction factor must be >= 1");
  TrigPoly::Map out;
  for (const auto& [k, c] : P.coeffs()) out.emplace(checked::mul(k, r), c);
  return TrigPoly(std::move(out));
}

TrigPoly translate(const TrigPoly& P, double shift) {
  TrigPoly::Map out;
  for (const auto& [k, c] : P.coeffs()) {
    const double angle = std::fmod(static_cast<double>(k) * shift, 2.0 * std::numbers::pi);
    out.emplace(k, c * Complex(std::cos(angle), std::sin(angle)));
  }
  return TrigPoly(std::move(out));
}

TrigPoly multiply(const TrigPoly& P, const TrigPoly& Q) {
  std::unordered_map<std::int64_t, Complex> acc;
  acc.reserve(P.support_size() * Q.support_size());
  for (const auto& [k, c] : P.coeffs()) {
    for (const auto& [l, d] : Q.coeffs()) acc[checked::add(k, l)] += c * d;
  }
  TrigPoly::Map out(acc.begin(), acc.end());
  return TrigPoly(std::move(out));
}

namespace {

void check_special(const TrigPoly& P, const TrigPoly& Q, std::int64_t r) {
  if (r <= 2 * P.degree()) {
    throw ParameterError("special product needs r > 2 deg P (r = " + std::to_string(r) +
                         ", deg P = " + std::to_string(P.degree()) + ")");
  }
  if (Q.coeff(0) != Complex{}) throw ParameterError("special product needs Q(0) = 0");
}

}  // namespace

TrigPoly special_product(const TrigPoly& P, const TrigPoly& Q, std::int64_t r) {
  check_special(P, Q, r);
  return multiply(contract(Q, r), P);
}

TrigPoly one_sided_partial_sum(const TrigPoly& P, std::int64_t n) {
  return n >= 0 ? partial_sum_rect(P, 0, n) : partial_sum_rect(P, n, 0);
}

TrigPoly special_product_partial(const TrigPoly& P, const TrigPoly& Q, std::int64_t r,
                                 std::int64_t n) {
  check_special(P, Q, r);
  const std::int64_t d = P.degree();
  // n >= 0: n = s r + l with -r/2 <= l < r/2. n < 0 mirrors it.
  const std::int64_t an = std::abs(n);
  const std::int64_t s = (2 * an + r) / (2 * r);
  const std::int64_t l = an - s * r;
  TrigPoly full_blocks;
  if (n >= 0) {
    for (const auto& [k, c] : Q.coeffs()) {
      if (k >= 1 && k <= s - 1) full_blocks.add(checked::mul(k, r), c);
    }
  } else {
    for (const auto& [k, c] : Q.coeffs()) {
      if (k <= -1 && k >= -(s - 1)) full_blocks.add(checked::mul(k, r), c);
    }
  }
  TrigPoly out = multiply(P, full_blocks);
  if (s >= 1) {
    const std::int64_t ks = n >= 0 ? s : -s;
    const Complex qs = Q.coeff(ks);
    if (qs != Complex{}) {
      const std::int64_t lo = n >= 0 ? -d : -l;
      const std::int64_t hi = n >= 0 ? l : d;
      const TrigPoly window = lo <= hi ? partial_sum_rect(P, lo, hi) : TrigPoly();
      TrigPoly shifted;
      for (const auto& [k, c] : window.coeffs()) shifted.add(checked::add(checked::mul(ks, r), k), qs * c);
      out += shifted;
    }
  }
  return out;
}

double CoeffNorms::at(double p) const {
  for (const auto& [q, v] : lp) {
    if (q == p) return v;
  }
  throw ParameterError("coefficient norm for p = " + std::to_string(p) + " was not requested");
}

CoeffNorms coeff_norms(const TrigPoly& P, const std::vector<double>& ps) {
  CoeffNorms out;
  for (double p : ps) {
    if (!(p >= 1.0)) throw ParameterError("coefficient norm needs p >= 1");
  }
  std::vector<double> sums(ps.size(), 0.0);
  for (const auto& [k, c] : P.coeffs()) {
    const double a = std::abs(c);
    out.linf = std::max(out.linf, a);
    out.l1 += a;
    for (std::size_t i = 0; i < ps.size(); ++i) sums[i] += std::pow(a, ps[i]);
  }
  for (std::size_t i = 0; i < ps.size(); ++i) {
    out.lp.emplace_back(ps[i], std::pow(sums[i], 1.0 / ps[i]));
  }
  return out;
}

bool follows(const TrigPoly& P, const TrigPoly& Q) {
  if (P.empty() || Q.empty()) return true;
  std::int64_t min_p = std::numeric_limits<std::int64_t>::max();
  for (const auto& kv : P.coeffs()) min_p = std::min(min_p, std::abs(kv.first));
  return min_p > Q.degree();
}

void write_csv(std::ostream& out, const TrigPoly& P) {
  out << "k,re,im\n";
  for (const auto& [k, c] : P.coeffs()) {
    out << k << ',' << csv::fmt(c.real()) << ',' << csv::fmt(c.imag()) << '\n';
  }
}

TrigPoly read_trigpoly_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || csv::trim(line) != "k,re,im") {
    throw ParameterError("polynomial CSV header must be k,re,im");
  }
  TrigPoly P;
  while (std::getline(in, line)) {
    if (csv::trim(line).empty()) continue;
    const auto cells = csv::split(line);
    if (cells.size() != 3) throw ParameterError("polynomial CSV row needs 3 columns: " + line);
    P.add(std::stoll(cells[0]), Complex(std::stod(cells[1]), std::stod(cells[2])));
  }
  return P;
}

}  // namespace menshov
