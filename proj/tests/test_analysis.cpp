#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "roughwall/analysis.hpp"

using namespace roughwall;

namespace {

std::shared_ptr<const Mesh> bl_mesh(const RoughnessPattern& g, double L, double h) {
  return std::make_shared<const Mesh>(build_bl_mesh(g, L, h));
}

}  // namespace

TEST(BandIntegration, ClippedPiecesHaveTheExactArea) {
  const std::array<Vec2, 3> x{Vec2{0, 0}, Vec2{1, 0}, Vec2{0, 1}};
  // int_{1/4}^{1/2} (1 - y) dy
  double a = 0.0;
  for (const auto& s : detail::clip_band(x, 0.25, 0.5)) a += 0.5 * detail::bary_area_fraction(s);
  EXPECT_NEAR(a, 0.15625, 1e-15);
  double b = 0.0;
  for (const auto& piece : detail::clip_band(x, -1.0, 0.3))
    for (const auto& s : detail::subdivide(piece, 2)) b += 0.5 * detail::bary_area_fraction(s);
  EXPECT_NEAR(b, 0.3 - 0.045, 1e-15);
}

TEST(BandIntegration, IntegratesPolynomialsOverHorizontalBands) {
  const auto mesh = bl_mesh(RoughnessPattern::sinusoid(-0.5, 0.25), 3.0, 0.2);
  const FESpace V(mesh);
  for (auto [lo, hi] : {std::pair{0.13, 1.77}, std::pair{-0.1, 0.4}, std::pair{2.0, 3.0}}) {
    double area = 0.0, moment = 0.0;
    integrate_band(V, std::max(lo, 0.0), hi, [&](std::size_t t, const std::array<double, 3>& l, double w) {
      area += w;
      const double y = V.geometry(t).point(l).y;
      moment += w * y * y;
    });
    const double a = std::max(lo, 0.0);
    EXPECT_NEAR(area, hi - a, 1e-12);
    EXPECT_NEAR(moment, (hi * hi * hi - a * a * a) / 3.0, 1e-12);
  }
}

TEST(DecayFit, RecoversSyntheticExponentials) {
  std::vector<std::pair<double, double>> c;
  for (double t = 1.0; t <= 6.0; t += 0.1) c.emplace_back(t, 3.0 * std::exp(-2.5 * t));
  const auto f = fit_decay(c, 0.0);
  EXPECT_NEAR(f.delta, 2.5, 1e-12);
  EXPECT_NEAR(f.C, 3.0, 1e-10);
  EXPECT_NEAR(f.r2, 1.0, 1e-12);
  EXPECT_FALSE(f.degenerate);
  // Points under the noise floor are dropped; fewer than five left means degenerate.
  EXPECT_TRUE(fit_decay(c, 3.0 * std::exp(-2.5 * 1.35)).degenerate);
}

TEST(LogLogSlope, RecoversPowerLaws) {
  EXPECT_NEAR(loglog_slope({0.25, 0.125, 0.0625}, {0.5 * std::pow(0.25, 1.5), 0.5 * std::pow(0.125, 1.5), 0.5 * std::pow(0.0625, 1.5)}),
              1.5, 1e-13);
  EXPECT_THROW(loglog_slope({1.0}, {1.0}), Error);
}

TEST(TailExtrapolation, IsExactForOneExponentialMode) {
  const Vec2 T{0.3, -0.02};
  auto tail = [&](double L) { return T + std::exp(-1.7 * L) * Vec2{0.4, 0.1}; };
  const Vec2 e = extrapolate_tail(tail(6.0), 6.0, tail(8.0), 8.0, 1.7);
  EXPECT_NEAR(e.x, T.x, 1e-14);
  EXPECT_NEAR(e.y, T.y, 1e-14);
}

TEST(BoundaryLayerAnalysis, FlatWallHasTheExactTailAndNoDecay) {
  for (double p : {1.5, 3.0}) {
    const double d = 0.5;
    const auto sol = solve_bl(bl_mesh(RoughnessPattern::flat(d), 4.0, 0.2), PowerLaw(p), poiseuille_shear_tensor(p));
    const auto r = analyze_bl(sol);
    EXPECT_NEAR(r.tail.x, d * poiseuille_wall_shear(p), 1e-8);
    EXPECT_NEAR(r.tail.y, 0.0, 1e-9);
    EXPECT_TRUE(r.decay_degenerate);
    for (const auto& [t, f] : r.flux_curve) EXPECT_NEAR(f, 0.0, 1e-9);
    for (const auto& [t, s] : r.stress_avg_curve) EXPECT_NEAR(s, 0.0, 1e-7) << t;
  }
}

TEST(BoundaryLayerAnalysis, RoughWallDecaysExponentiallyAndConservesFlux) {
  const auto sol = solve_bl(bl_mesh(RoughnessPattern::sinusoid(-0.5, 0.25), 6.0, 0.2), PowerLaw(2.0), poiseuille_shear_tensor(2.0));
  const auto r = analyze_bl(sol);
  EXPECT_FALSE(r.decay_degenerate);
  EXPECT_GT(r.decay_delta, 1.0);
  EXPECT_GT(r.fit_r2, 0.99);
  EXPECT_GT(r.tail.x, 0.0);
  EXPECT_LT(std::abs(r.tail.y), 1e-4);
  const auto cc = conservation_checks(sol, {0.0, 0.5, 1.0, 2.5, 4.0});
  EXPECT_LT(cc.max_abs_flux(), 1e-3);
  EXPECT_LT(cc.max_abs_stress(), 1e-2);
  // The energy above t is non-increasing in t.
  for (std::size_t i = 1; i < r.energy_curve.size(); ++i)
    EXPECT_LE(r.energy_curve[i].second, r.energy_curve[i - 1].second + 1e-15);
}

TEST(WallLaw, IsPositivelyHomogeneousOfDegreeOne) {
  WallLawOptions o;
  o.L = 3.0;
  o.h = 0.2;
  for (double p : {1.5, 3.0}) {
    const auto F = wall_law_map(RoughnessPattern::sinusoid(-0.5, 0.25), PowerLaw(p), {0.5, 1.0, 2.0}, o);
    ASSERT_EQ(F.size(), 3u);
    EXPECT_GT(F[0].F, 0.0);
    EXPECT_NEAR(F[1].F, 2.0 * F[0].F, 1e-6 * std::abs(F[1].F)) << p;
    EXPECT_NEAR(F[2].F, 2.0 * F[1].F, 1e-6 * std::abs(F[2].F)) << p;
  }
  EXPECT_THROW(wall_law_map(RoughnessPattern::flat(0.5), PowerLaw(2.0), {-1.0}, o), Error);
}

TEST(ChannelApproximation, ZonesJoinTheRightProfiles) {
  const auto g = RoughnessPattern::sinusoid(-0.5, 0.25);
  const PowerLaw law(2.0);
  const auto bl = solve_bl(bl_mesh(g, 4.0, 0.2), law, poiseuille_shear_tensor(2.0));
  const double eps = 0.125, N = 0.25, Ui = extract_tail(bl).x;
  const ChannelApproximation app(bl, law, eps, N, Ui);
  const double X = app.sigma_n();
  EXPECT_NEAR(X, sigma_height(eps, N), 1e-15);
  // Above Sigma_N: the corrected Couette profile.
  const auto [u1, g1] = app({0.3, 0.7});
  EXPECT_NEAR(u1.x, app.couette()(0.7), 1e-15);
  EXPECT_NEAR(g1.g12, app.couette().derivative(0.7), 1e-15);
  // On the wall the approximation vanishes.
  const auto [u0, g0] = app({0.05, eps * g.value(0.05 / eps)});
  EXPECT_NEAR(u0.x, 0.0, 1e-12);
  EXPECT_NEAR(u0.y, 0.0, 1e-12);
  // The Couette profile starts at U'(0) X + eps U_inf.
  EXPECT_NEAR(app.couette()(X), X + eps * Ui, 1e-13);
}

TEST(ChannelApproximation, RejectsMismatchedPatternsAndScales) {
  const PowerLaw law(2.0);
  const auto bl = solve_bl(bl_mesh(RoughnessPattern::sinusoid(-0.5, 0.25), 3.0, 0.25), law, poiseuille_shear_tensor(2.0));
  const auto other = std::make_shared<const Mesh>(build_channel_mesh(RoughnessPattern::sinusoid(-0.4, 0.25), 0.25, 0.1));
  try {
    assemble_approximation(other, bl, law, 0.25, 0.25, 0.0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::pattern_mismatch);
  }
  const auto same = std::make_shared<const Mesh>(build_channel_mesh(RoughnessPattern::sinusoid(-0.5, 0.25), 0.25, 0.1));
  EXPECT_THROW(assemble_approximation(same, bl, law, 0.125, 0.25, 0.0), Error);
  const auto f = assemble_approximation(same, bl, law, 0.25, 0.25, 0.0);
  EXPECT_EQ(f.velocity.size(), f.space->num_velocity_dofs());
}

TEST(KornConstant, EigenEstimateBoundsEveryField) {
  const auto mesh = std::make_shared<const Mesh>(build_strip_mesh(0.0, 0.25));
  const auto est = estimate_korn_constant(mesh, 2.0);
  EXPECT_EQ(est.method, "eigen");
  EXPECT_GT(est.constant, 1.0);
  EXPECT_LT(est.constant, 3.0);
  // Any zero-mean field obeys ||grad v|| <= C ||Dv||.
  const FESpace V(mesh);
  std::mt19937_64 rng(2);
  std::normal_distribution<double> nd;
  for (int s = 0; s < 20; ++s) {
    Eigen::VectorXd v(static_cast<Eigen::Index>(V.num_velocity_dofs()));
    for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = nd(rng);
    const auto r = detail::korn_ratio(V, v, 2.0, false);
    EXPECT_LE(std::sqrt(r.G / r.D), est.constant * (1 + 1e-9));
  }
}

TEST(KornConstant, SamplingEstimateForOtherExponents) {
  const auto mesh = std::make_shared<const Mesh>(build_strip_mesh(0.0, 0.25));
  KornOptions o;
  o.samples = 20;
  o.ascent_iterations = 10;
  const auto est = estimate_korn_constant(mesh, 1.5, o);
  EXPECT_EQ(est.method, "sampling");
  EXPECT_GT(est.constant, 1.0);
  EXPECT_GE(est.after_ascent, est.best_sample - 1e-12);
}

TEST(TracePoincare, FlatLayerReproducesTheLinearProfileBounds) {
  const double d = 0.5;
  for (double p : {1.5, 2.0, 3.0}) {
    TracePoincareOptions o;
    o.samples = 10;
    const auto rows = verify_trace_poincare(RoughnessPattern::flat(d), p, {0.25, 0.125}, o);
    for (const auto& r : rows) {
      // Trace: |phi(0)| <= int |d2 phi| and Hoelder make d^{1/p'} sharp.
      EXPECT_NEAR(r.trace_ratio, std::pow(d, (p - 1.0) / p), 1e-9) << p;
      // Poincare: the linear profile gives d / (p + 1)^{1/p}; the sup is at least that
      // (up to quadrature of the non-polynomial |s|^p).
      EXPECT_GE(r.poincare_ratio, d / std::pow(p + 1.0, 1.0 / p) * (1.0 - 1e-4));
    }
  }
}

TEST(TracePoincare, RatiosAreStableUnderRefinementOfEps) {
  TracePoincareOptions o;
  o.samples = 30;
  const auto rows = verify_trace_poincare(RoughnessPattern::sinusoid(-0.5, 0.25), 2.0, {0.25, 0.125, 0.0625}, o);
  for (const auto& r : rows) {
    EXPECT_NEAR(r.trace_ratio, rows[0].trace_ratio, 0.2 * rows[0].trace_ratio);
    EXPECT_NEAR(r.poincare_ratio, rows[0].poincare_ratio, 0.2 * rows[0].poincare_ratio);
  }
}

TEST(WallLaw, HomogeneityHoldsForLargerFactors) {
  WallLawOptions o;
  o.L = 3.0;
  o.h = 0.2;
  const auto F = wall_law_map(RoughnessPattern::sinusoid(-0.5, 0.25), PowerLaw(1.5), {1.0, 5.0}, o);
  EXPECT_NEAR(F[1].F, 5.0 * F[0].F, 10 * o.solve.tol * std::abs(5.0 * F[0].F) + 1e-12);
}

TEST(WallLaw, FlatWallGivesDepthTimesShear) {
  WallLawOptions o;
  o.L = 3.0;
  o.h = 0.25;
  for (const auto& s : wall_law_map(RoughnessPattern::flat(0.25), PowerLaw(3.0), {0.5, 2.0}, o))
    EXPECT_NEAR(s.F, 0.25 * s.shear, 1e-8);
}

TEST(BoundaryLayerAnalysis, BandNormsDecayLogLinearly) {
  const auto sol = solve_bl(bl_mesh(RoughnessPattern::sinusoid(-0.5, 0.25), 6.0, 0.2), PowerLaw(1.5), poiseuille_shear_tensor(1.5));
  const Vec2 tail = extract_tail(sol);
  for (double q : {2.0, 4.0}) {
    std::vector<std::pair<double, double>> curve;
    for (double t = 0.5; t <= 3.5; t += 0.5) curve.emplace_back(t, band_norm(sol, tail, t, q));
    const auto f = fit_decay(curve, 0.0);
    EXPECT_GT(f.delta, 0.0) << q;
    EXPECT_GT(f.r2, 0.95) << q;
  }
}
