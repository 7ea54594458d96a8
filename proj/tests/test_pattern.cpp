#include <gtest/gtest.h>

#include <numbers>

#include "roughwall/pattern.hpp"
#include "roughwall/quadrature.hpp"

using namespace roughwall;

TEST(Pattern, SinusoidValuesAndExtremes) {
  const auto g = RoughnessPattern::sinusoid(-0.5, 0.25);
  EXPECT_NEAR(g.min_value(), -0.75, 1e-15);
  EXPECT_NEAR(g.max_value(), -0.25, 1e-15);
  EXPECT_NEAR(g.mean_value(), -0.5, 1e-15);
  EXPECT_NEAR(g.value(0.3), g.value(1.3), 1e-14);
}

TEST(Pattern, LeavingTheUnitBandIsARangeError) {
  try {
    RoughnessPattern::sinusoid(-0.5, 0.7);
    FAIL() << "expected a range error";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::range);
  }
  EXPECT_THROW(RoughnessPattern::flat(0.0), Error);
  EXPECT_THROW(RoughnessPattern::flat(1.0), Error);
  EXPECT_THROW(RoughnessPattern::fourier(-0.1, {0.2}, {0.0}), Error);
}

TEST(Pattern, DerivativesMatchFiniteDifferences) {
  const std::vector<RoughnessPattern> gs{RoughnessPattern::sinusoid(-0.5, 0.2),
                                         RoughnessPattern::fourier(-0.5, {0.1, 0.05}, {0.02, -0.04}),
                                         RoughnessPattern::polyline_smoothed({-0.2, -0.6, -0.4, -0.8, -0.3})};
  for (const auto& g : gs)
    for (double y : {0.05, 0.37, 0.81}) {
      const double h = 1e-5;
      EXPECT_NEAR(g.derivative(y), (g.value(y + h) - g.value(y - h)) / (2 * h), 1e-7) << g.describe();
      EXPECT_NEAR(g.second_derivative(y), (g.derivative(y + h) - g.derivative(y - h)) / (2 * h), 1e-5) << g.describe();
    }
}

TEST(Pattern, SplineInterpolatesItsNodesAndIsPeriodic) {
  const std::vector<double> v{-0.2, -0.6, -0.4, -0.8, -0.3};
  const auto g = RoughnessPattern::polyline_smoothed(v);
  for (std::size_t i = 0; i < v.size(); ++i) EXPECT_NEAR(g.value(static_cast<double>(i) / v.size()), v[i], 1e-13);
  EXPECT_NEAR(g.derivative(0.0), g.derivative(1.0), 1e-12);
  EXPECT_NEAR(g.second_derivative(0.0), g.second_derivative(1.0), 1e-12);
}

TEST(Pattern, MeanMatchesQuadrature) {
  const auto g = RoughnessPattern::fourier(-0.4, {0.1}, {0.15});
  EXPECT_NEAR(quad::integrate([&](double y) { return g.value(y); }, 0.0, 1.0), g.mean_value(), 1e-12);
}

TEST(Pattern, MakeFromKindAndParameters) {
  EXPECT_EQ(RoughnessPattern::make(PatternKind::sinusoid, {-0.5, 0.25}), RoughnessPattern::sinusoid(-0.5, 0.25));
  EXPECT_EQ(parse_pattern_kind("fourier"), PatternKind::fourier);
  EXPECT_THROW(parse_pattern_kind("zigzag"), Error);
  EXPECT_THROW(RoughnessPattern::make(PatternKind::sinusoid, {-0.5}), Error);
}
