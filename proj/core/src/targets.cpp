#include "menshov/targets.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <memory>
#include <numbers>
#include <optional>
#include <set>

#include "menshov/errors.hpp"

namespace menshov {

namespace {

using nlohmann::json;
constexpr double kPi = std::numbers::pi;

void check_keys(const std::string& name, const json& params, const std::set<std::string>& allowed) {
  if (params.is_null()) return;
  if (!params.is_object()) throw ParameterError("target " + name + ": parameters must be an object");
  for (const auto& [key, _] : params.items()) {
    if (!allowed.count(key)) throw ParameterError("target " + name + ": unknown parameter '" + key + "'");
  }
}

double number(const std::string& name, const json& params, const std::string& key,
              std::optional<double> fallback = std::nullopt) {
  if (params.is_object() && params.contains(key)) {
    const auto& v = params.at(key);
    if (!v.is_number()) throw ParameterError("target " + name + ": '" + key + "' must be a number");
    return v.get<double>();
  }
  if (fallback) return *fallback;
  throw ParameterError("target " + name + ": missing parameter '" + key + "'");
}

struct Arc {
  double a, b;
  bool contains(double t) const { return a <= t && t < b; }
};

Arc arc(const std::string& name, const json& params, const std::string& key) {
  if (!params.is_object() || !params.contains(key)) return {0.0, 0.0};
  const auto& v = params.at(key);
  if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number()) {
    throw ParameterError("target " + name + ": '" + key + "' must be [a, b]");
  }
  const Arc r{v[0].get<double>(), v[1].get<double>()};
  if (!(r.a <= r.b) || r.a < -kPi || r.b > kPi) {
    throw ParameterError("target " + name + ": '" + key + "' must satisfy -pi <= a <= b <= pi");
  }
  return r;
}

SampledFunction load_csv(const json& params) {
  if (!params.is_object() || !params.contains("path") || !params.at("path").is_string()) {
    throw ParameterError("target csv: missing string parameter 'path'");
  }
  const auto path = params.at("path").get<std::string>();
  std::ifstream in(path);
  if (!in) throw ParameterError("target csv: cannot open '" + path + "'");
  return read_sampled_csv(in);
}

std::function<Complex(double)> finite_function(const std::string& name, const json& params) {
  if (name == "zero") {
    check_keys(name, params, {});
    return [](double) { return Complex(0.0); };
  }
  if (name == "const") {
    check_keys(name, params, {"value"});
    const double c = number(name, params, "value");
    return [c](double) { return Complex(c); };
  }
  if (name == "step") {
    check_keys(name, params, {});
    return [](double t) { return Complex(t >= 0.0 ? 1.0 : 0.0); };
  }
  if (name == "sign") {
    check_keys(name, params, {});
    return [](double t) { return Complex(t >= 0.0 ? 1.0 : -1.0); };
  }
  if (name == "sawtooth") {
    check_keys(name, params, {});
    return [](double t) { return Complex(t / kPi); };
  }
  if (name == "indicator") {
    check_keys(name, params, {"a", "b"});
    json ab = json::object();
    ab["arc"] = {number(name, params, "a"), number(name, params, "b")};
    const Arc r = arc(name, ab, "arc");
    return [r](double t) { return Complex(r.contains(t) ? 1.0 : 0.0); };
  }
  if (name == "cosk") {
    check_keys(name, params, {"k"});
    if (!params.is_object() || !params.contains("k") || !params.at("k").is_number_integer()) {
      throw ParameterError("target cosk: 'k' must be an integer");
    }
    const double k = static_cast<double>(params.at("k").get<std::int64_t>());
    return [k](double t) { return Complex(std::cos(k * t)); };
  }
  if (name == "infinity") {
    check_keys(name, params, {"plus", "minus", "finite"});
    arc(name, params, "plus");
    arc(name, params, "minus");
    const double c = number(name, params, "finite", 0.0);
    return [c](double) { return Complex(c); };
  }
  throw ParameterError("unknown target '" + name + "'");
}

}  // namespace

const std::vector<std::string>& target_names() {
  static const std::vector<std::string> names{"zero", "const", "step", "sign", "sawtooth",
                                              "indicator", "cosk", "csv", "infinity"};
  return names;
}

std::vector<bool> interval_mask(const CircleGrid& grid, double a, double b) {
  std::vector<bool> mask(grid.size());
  for (std::size_t j = 0; j < grid.size(); ++j) {
    const double t = grid.point(j);
    mask[j] = a <= t && t < b;
  }
  return mask;
}

SampledFunction make_target(const std::string& name, const json& params, const CircleGrid& grid) {
  if (name == "csv") {
    check_keys(name, params, {"path"});
    auto f = load_csv(params);
    if (f.grid.size() != grid.size()) {
      throw ParameterError("target csv: file has " + std::to_string(f.grid.size()) +
                           " samples, grid has " + std::to_string(grid.size()));
    }
    return f;
  }
  auto f = SampledFunction::from_complex(grid, finite_function(name, params));
  if (name == "infinity") {
    const Arc plus = arc(name, params, "plus");
    const Arc minus = arc(name, params, "minus");
    if (std::max(plus.a, minus.a) < std::min(plus.b, minus.b)) {
      throw ParameterError("target infinity: 'plus' and 'minus' overlap");
    }
    f.extended.assign(grid.size(), 0);
    for (std::size_t j = 0; j < grid.size(); ++j) {
      const double t = grid.point(j);
      if (plus.contains(t)) f.extended[j] = 1;
      if (minus.contains(t)) f.extended[j] = -1;
    }
  }
  return f;
}

std::function<Complex(double)> target_function(const std::string& name, const json& params) {
  if (name != "csv") return finite_function(name, params);
  check_keys(name, params, {"path"});
  auto f = std::make_shared<SampledFunction>(load_csv(params));
  return [f](double t) { return f->values[f->grid.nearest_index(t)]; };
}

}  // namespace menshov
