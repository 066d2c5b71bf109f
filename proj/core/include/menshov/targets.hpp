#pragma once

#include <functional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "menshov/circle.hpp"

namespace menshov {

// Named target functions on [-pi, pi):
//   zero, const{value}, step (1 on [0, pi)), sign (1 for t >= 0, else -1),
//   sawtooth (t / pi), indicator{a, b} (1 on [a, b)), cosk{k} (cos k t),
//   csv{path} (samples, grid size must match), infinity{plus, minus, finite}
//   (+inf on the arc plus = [a, b), -inf on minus, finite elsewhere).
// Parameters are strict: an unknown key is a ParameterError naming it.
const std::vector<std::string>& target_names();

SampledFunction make_target(const std::string& name, const nlohmann::json& params,
                            const CircleGrid& grid);
// Same function off the grid; csv targets use the nearest sample and
// infinity targets return their finite part.
std::function<Complex(double)> target_function(const std::string& name,
                                               const nlohmann::json& params);

// true on grid points with a <= t < b.
std::vector<bool> interval_mask(const CircleGrid& grid, double a, double b);

}  // namespace menshov
