#include <gtest/gtest.h>

#include <cmath>

#include "monostereo/gradcheck.hpp"

using namespace monostereo;

TEST(FiniteDifferences, QuadraticIsExact) {
  std::vector<double> x = {0.3, -1.2, 2.0};
  auto f = [&] { return x[0] * x[0] + 3.0 * x[1] * x[2]; };
  const std::vector<double> g = {0.6, 6.0, -3.6};
  const auto s = compare_with_finite_differences(f, x, g);
  EXPECT_LT(s.rel_error, 1e-9);
  EXPECT_EQ(s.checked, 3u);
  EXPECT_EQ(x[1], -1.2);
}

TEST(FiniteDifferences, DetectsWrongGradient) {
  std::vector<double> x = {0.5, 0.5};
  auto f = [&] { return std::sin(x[0]) + x[1]; };
  const auto s = compare_with_finite_differences(f, x, {std::cos(0.5), 2.0});
  EXPECT_GT(s.rel_error, 0.1);
}

TEST(FiniteDifferences, SkipsKinksAndHonorsCoordinateList) {
  std::vector<double> x = {0.0, 2.0};
  auto f = [&] { return std::abs(x[0]) + x[1] * x[1]; };
  const auto s = compare_with_finite_differences(f, x, {0.0, 4.0});
  EXPECT_EQ(s.skipped, 1u);
  EXPECT_LT(s.rel_error, 1e-9);
  const auto only = compare_with_finite_differences(f, x, {123.0, 4.0}, {1});
  EXPECT_EQ(only.checked, 1u);
  EXPECT_LT(only.rel_error, 1e-9);
}

TEST(RunGradcheck, EverySuitePasses) {
  const auto results = run_gradcheck(7, 2, true);
  ASSERT_FALSE(results.empty());
  bool saw_network = false;
  for (const auto& r : results) {
    EXPECT_TRUE(r.pass()) << r.name << " " << r.max_rel_error;
    EXPECT_GT(r.checked, 0u) << r.name;
    saw_network |= r.name.find("network") != std::string::npos;
  }
  EXPECT_TRUE(saw_network);
}
