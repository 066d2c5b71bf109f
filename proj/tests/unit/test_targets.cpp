#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>

#include "menshov/errors.hpp"
#include "menshov/targets.hpp"

using namespace menshov;
using nlohmann::json;

namespace {
constexpr double kPi = std::numbers::pi;
}

TEST(Targets, StepAndSignOnGrid) {
  const CircleGrid grid(64);
  const auto step = make_target("step", json::object(), grid);
  const auto sign = make_target("sign", nullptr, grid);
  for (std::size_t j = 0; j < grid.size(); ++j) {
    // t_j = -pi + 2 pi j / 64: j >= 32 is t >= 0
    EXPECT_EQ(step.values[j].real(), j >= 32 ? 1.0 : 0.0) << j;
    EXPECT_EQ(sign.values[j].real(), j >= 32 ? 1.0 : -1.0) << j;
  }
}

TEST(Targets, IndicatorCountsItsArc) {
  const CircleGrid grid(1024);
  const auto f = make_target("indicator", {{"a", 0.0}, {"b", kPi / 2}}, grid);
  double ones = 0;
  for (const auto& v : f.values) ones += v.real();
  EXPECT_EQ(ones, 256.0);
  const auto mask = interval_mask(grid, 0.0, kPi / 2);
  for (std::size_t j = 0; j < grid.size(); ++j) EXPECT_EQ(mask[j], f.values[j].real() == 1.0);
}

TEST(Targets, CoskSawtoothConst) {
  const CircleGrid grid(128);
  const auto c = make_target("cosk", {{"k", 3}}, grid);
  const auto s = make_target("sawtooth", json::object(), grid);
  const auto k = make_target("const", {{"value", 2.5}}, grid);
  for (std::size_t j = 0; j < grid.size(); ++j) {
    const double t = -kPi + 2 * kPi * static_cast<double>(j) / 128;
    EXPECT_NEAR(c.values[j].real(), std::cos(3 * t), 1e-12);
    EXPECT_NEAR(s.values[j].real(), t / kPi, 1e-12);
    EXPECT_EQ(k.values[j], Complex(2.5));
  }
  EXPECT_EQ(make_target("zero", json::object(), grid).sup_abs(), 0.0);
}

TEST(Targets, InfinityMarksArcs) {
  const CircleGrid grid(256);
  const auto f = make_target("infinity", {{"plus", {0.0, 1.0}}, {"minus", {-2.0, -1.0}}}, grid);
  ASSERT_TRUE(f.has_extended());
  for (std::size_t j = 0; j < grid.size(); ++j) {
    const double t = grid.point(j);
    const int want = (t >= 0 && t < 1) ? 1 : (t >= -2 && t < -1) ? -1 : 0;
    EXPECT_EQ(f.extended[j], want);
  }
  EXPECT_THROW(make_target("infinity", {{"plus", {0.0, 1.0}}, {"minus", {0.5, 2.0}}}, grid),
               ParameterError);
}

TEST(Targets, UnknownKeyIsNamed) {
  const CircleGrid grid(64);
  try {
    make_target("step", {{"hieght", 1}}, grid);
    FAIL();
  } catch (const ParameterError& e) {
    EXPECT_NE(std::string(e.what()).find("hieght"), std::string::npos);
  }
  EXPECT_THROW(make_target("nope", json::object(), grid), ParameterError);
  EXPECT_THROW(make_target("indicator", {{"a", 1.0}}, grid), ParameterError);
  EXPECT_THROW(make_target("indicator", {{"a", 1.0}, {"b", 0.0}}, grid), ParameterError);
  EXPECT_THROW(make_target("cosk", {{"k", 1.5}}, grid), ParameterError);
}

TEST(Targets, CsvRoundTripAndGridCheck) {
  const CircleGrid grid(32);
  const auto f = make_target("sawtooth", json::object(), grid);
  const auto path = std::filesystem::temp_directory_path() / "menshov_target_test.csv";
  {
    std::ofstream out(path);
    write_csv(out, f);
  }
  const auto g = make_target("csv", {{"path", path.string()}}, grid);
  for (std::size_t j = 0; j < grid.size(); ++j) EXPECT_NEAR(g.values[j].real(), f.values[j].real(), 1e-15);
  EXPECT_THROW(make_target("csv", {{"path", path.string()}}, CircleGrid(64)), ParameterError);
  const auto fn = target_function("csv", {{"path", path.string()}});
  EXPECT_NEAR(fn(grid.point(5)).real(), f.values[5].real(), 1e-15);
  std::filesystem::remove(path);
}

TEST(Targets, FunctionMatchesSamples) {
  const CircleGrid grid(512);
  for (const std::string name : {"step", "sign", "sawtooth"}) {
    const auto f = make_target(name, json::object(), grid);
    const auto fn = target_function(name, json::object());
    for (std::size_t j = 0; j < grid.size(); j += 7) EXPECT_EQ(fn(grid.point(j)), f.values[j]);
  }
}
