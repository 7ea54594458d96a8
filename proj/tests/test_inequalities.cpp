#include <gtest/gtest.h>

#include <random>

#include "roughwall/inequalities.hpp"

using namespace roughwall;

TEST(Inequalities, RandomSweepHasNoViolations) {
  for (double p : {1.2, 1.5, 2.0, 3.0, 4.0}) {
    const auto sw = sweep_inequalities(p, 5000, 11);
    EXPECT_EQ(sw.total_violations(), 0u) << "p = " << p;
    // The integral bound covers every pair in the shear-thinning range and none above it.
    EXPECT_EQ(sw.applicable[static_cast<std::size_t>(InequalityId::integral_lower_bound)], p <= 2.0 ? 5000u : 0u);
  }
}

TEST(Inequalities, RegimeSpecificBoundsApplyOnlyInTheirRange) {
  const auto sub = sweep_inequalities(1.5, 2000, 3);
  EXPECT_EQ(sub.applicable[static_cast<std::size_t>(InequalityId::superquadratic_power)], 0u);
  EXPECT_GT(sub.applicable[static_cast<std::size_t>(InequalityId::subquadratic_lipschitz)], 0u);
  const auto sup = sweep_inequalities(3.0, 2000, 3);
  EXPECT_EQ(sup.applicable[static_cast<std::size_t>(InequalityId::subquadratic_lipschitz)], 0u);
  EXPECT_GT(sup.applicable[static_cast<std::size_t>(InequalityId::superquadratic_power)], 0u);
}

TEST(Inequalities, SweepIsDeterministic) {
  const auto a = sweep_inequalities(1.5, 1000, 42);
  const auto b = sweep_inequalities(1.5, 1000, 42);
  EXPECT_EQ(a.applicable, b.applicable);
  EXPECT_EQ(a.min_relative_slack, b.min_relative_slack);
}

TEST(Inequalities, WorksInHigherDimensions) {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> n(0.0, 2.0);
  for (double p : {1.3, 2.5}) {
    for (int k = 0; k < 500; ++k) {
      VecN<5> a, b;
      for (auto& x : a.v) x = n(rng);
      for (auto& x : b.v) x = n(rng);
      const auto rep = inequality_check(a, b, p, 2.0 * norm(a) + 1.0);
      EXPECT_TRUE(rep.all_hold()) << "p = " << p;
    }
  }
}

TEST(Inequalities, PowerMapPairingIsNonnegative) {
  std::mt19937_64 rng(6);
  std::normal_distribution<double> n(0.0, 1.0);
  for (int k = 0; k < 1000; ++k) {
    const Sym2 a{n(rng), n(rng), n(rng)}, b{n(rng), n(rng), n(rng)};
    for (double p : {1.2, 4.0}) EXPECT_GE(dot(power_map(b, p) - power_map(a, p), b - a), 0.0);
  }
}

TEST(Inequalities, NewtonianPairingIsExactlyTheSquaredDistance) {
  // For p = 2 the integral lower bound holds with equality.
  const Sym2 a{0.3, -0.2, 1.0}, b{-1.0, 0.4, 0.5};
  const auto rep = inequality_check(a, b, 2.0, 3.0);
  for (const auto& r : rep.results)
    if (r.id == InequalityId::integral_lower_bound) EXPECT_NEAR(r.slack(), 0.0, 1e-14);
}

TEST(MonotonicityBound, RejectsWrongRegime) {
  EXPECT_THROW(monotonicity_lower_bound(1.0, 1.0, 1.0, 1.0, PowerLaw(3.0)), Error);
  EXPECT_THROW(superquadratic_lower_bound(1.0, 1.0, PowerLaw(1.5)), Error);
  EXPECT_THROW(monotonicity_lower_bound(1.0, 0.0, 0.0, 1.0, PowerLaw(1.5)), Error);
}

TEST(MonotonicityBound, RatioIsAtLeastPMinusOne) {
  // For p <= 2: (P(b)-P(a)):(b-a) >= (p-1)|b-a|^2 (|a|+|b|)^{p-2}, so the ratio is at least p - 1.
  std::mt19937_64 rng(8);
  std::normal_distribution<double> n(0.0, 1.0);
  const PowerLaw law(1.5);
  double worst = 1e300;
  for (int k = 0; k < 5000; ++k) {
    const Sym2 a{n(rng), n(rng), n(rng)}, b{n(rng), n(rng), n(rng)};
    const double pair = dot(power_map(b, 1.5) - power_map(a, 1.5), b - a);
    const auto r = monotonicity_lower_bound(norm(b - a), norm(a), norm(b), pair, law);
    worst = std::min(worst, r.ratio);
  }
  EXPECT_GE(worst, 0.5 - 1e-12);
}
