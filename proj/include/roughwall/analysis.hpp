#pragma once

// Post-processing of solved fields: energy decay above a height, tails, flux and
// stress averages, the wall-law map, the multiscale approximation and its errors,
// and empirical Korn / trace / Poincare constants.

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <future>
#include <memory>
#include <numbers>
#include <optional>
#include <random>
#include <sstream>
#include <vector>

#include "roughwall/analytic.hpp"
#include "roughwall/error.hpp"
#include "roughwall/fe_space.hpp"
#include "roughwall/mesh.hpp"
#include "roughwall/quadrature.hpp"
#include "roughwall/solver.hpp"
#include "roughwall/tensor.hpp"

namespace roughwall {

namespace detail {

/// Evaluates f(0), ..., f(n-1) concurrently and returns the results in index order.
/// Exceptions are rethrown from the lowest failing index.
template <class F>
auto parallel_map(std::size_t n, F&& f) -> std::vector<decltype(f(std::size_t{}))> {
  std::vector<std::future<decltype(f(std::size_t{}))>> jobs;
  jobs.reserve(n);
  for (std::size_t i = 0; i < n; ++i) jobs.push_back(std::async(std::launch::async, f, i));
  std::vector<decltype(f(std::size_t{}))> out;
  out.reserve(n);
  for (auto& j : jobs) out.push_back(j.get());
  return out;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Integration over parts of triangles cut by horizontal lines.

namespace detail {

/// Sub-triangles (as barycentric triples of the parent) of triangle x cut to ylo <= y <= yhi.
inline std::vector<std::array<std::array<double, 3>, 3>> clip_band(const std::array<Vec2, 3>& x, double ylo, double yhi) {
  using B = std::array<double, 3>;
  std::vector<B> poly{{1, 0, 0}, {0, 1, 0}, {0, 0, 1}};
  auto y_of = [&](const B& b) { return b[0] * x[0].y + b[1] * x[1].y + b[2] * x[2].y; };
  auto clip = [&](const std::vector<B>& in, double level, bool keep_above) {
    std::vector<B> out;
    const std::size_t n = in.size();
    for (std::size_t i = 0; i < n; ++i) {
      const B& a = in[i];
      const B& b = in[(i + 1) % n];
      const double fa = keep_above ? y_of(a) - level : level - y_of(a);
      const double fb = keep_above ? y_of(b) - level : level - y_of(b);
      if (fa >= 0) out.push_back(a);
      if ((fa >= 0) != (fb >= 0)) {
        const double s = fa / (fa - fb);
        out.push_back({a[0] + s * (b[0] - a[0]), a[1] + s * (b[1] - a[1]), a[2] + s * (b[2] - a[2])});
      }
    }
    return out;
  };
  poly = clip(poly, ylo, true);
  if (poly.size() >= 3) poly = clip(poly, yhi, false);
  std::vector<std::array<B, 3>> tris;
  for (std::size_t i = 1; i + 1 < poly.size(); ++i) tris.push_back({poly[0], poly[i], poly[i + 1]});
  return tris;
}

/// Splits a barycentric sub-triangle into 4^levels congruent pieces.
inline std::vector<std::array<std::array<double, 3>, 3>> subdivide(const std::array<std::array<double, 3>, 3>& t, int levels) {
  std::vector<std::array<std::array<double, 3>, 3>> cur{t};
  auto mid = [](const std::array<double, 3>& a, const std::array<double, 3>& b) {
    return std::array<double, 3>{0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1]), 0.5 * (a[2] + b[2])};
  };
  for (int l = 0; l < levels; ++l) {
    std::vector<std::array<std::array<double, 3>, 3>> next;
    for (const auto& s : cur) {
      const auto m01 = mid(s[0], s[1]), m12 = mid(s[1], s[2]), m20 = mid(s[2], s[0]);
      next.push_back({s[0], m01, m20});
      next.push_back({m01, s[1], m12});
      next.push_back({m20, m12, s[2]});
      next.push_back({m01, m12, m20});
    }
    cur = std::move(next);
  }
  return cur;
}

inline double bary_area_fraction(const std::array<std::array<double, 3>, 3>& s) {
  // Signed area of the sub-triangle relative to the parent (barycentrics are affine coordinates).
  const double a1 = s[1][1] - s[0][1], a2 = s[1][2] - s[0][2];
  const double b1 = s[2][1] - s[0][1], b2 = s[2][2] - s[0][2];
  return std::abs(a1 * b2 - a2 * b1);
}

}  // namespace detail

/// Calls f(triangle, barycentric point, weight) over the part of the mesh with ylo <= y <= yhi.
template <class F>
void integrate_band(const FESpace& V, double ylo, double yhi, F&& f, int subdivisions = 0) {
  const Mesh& m = V.mesh();
  const auto qp = quad::triangle_degree5();
  for (std::size_t t = 0; t < m.num_triangles(); ++t) {
    const auto g = V.geometry(t);
    const double ymin = std::min({g.x[0].y, g.x[1].y, g.x[2].y}), ymax = std::max({g.x[0].y, g.x[1].y, g.x[2].y});
    if (ymax <= ylo || ymin >= yhi) continue;
    std::vector<std::array<std::array<double, 3>, 3>> parts;
    if (ymin >= ylo && ymax <= yhi) parts.push_back({{{1, 0, 0}, {0, 1, 0}, {0, 0, 1}}});
    else parts = detail::clip_band(g.x, ylo, yhi);
    for (const auto& part : parts) {
      for (const auto& s : detail::subdivide(part, subdivisions)) {
        const double frac = detail::bary_area_fraction(s);
        if (frac <= 0.0) continue;
        for (const auto& q : qp) {
          const double l1 = 1.0 - q.xi - q.eta;
          std::array<double, 3> l{};
          for (int k = 0; k < 3; ++k) l[k] = l1 * s[0][k] + q.xi * s[1][k] + q.eta * s[2][k];
          f(t, l, 2.0 * q.w * frac * g.area);
        }
      }
    }
  }
}

// ---------------------------------------------------------------------------
// Energy above a height and exponential fits.

/// E(t) = int_{y2 > t} |grad u|^2.
inline double energy_tail(const DiscreteField& sol, double t) {
  const Mesh& m = sol.mesh();
  if (!(t >= 0.0 && t <= m.top)) fail(ErrorKind::precondition, "energy_tail: t must lie in [0, L]");
  double e = 0.0;
  integrate_band(*sol.space, t, m.top, [&](std::size_t tri, const std::array<double, 3>& l, double w) {
    e += w * sol.space->evaluate(sol.velocity, tri, l).second.norm_sq();
  });
  return e;
}

struct DecayFit {
  double C = 0.0;
  double delta = 0.0;
  double r2 = 0.0;
  std::size_t points_used = 0;
  /// True when fewer than five points lie above the noise floor (e.g. a flat wall).
  bool degenerate = false;
};

/// Least-squares line through (t, ln E) for the points with E > noise_floor.
inline DecayFit fit_decay(const std::vector<std::pair<double, double>>& curve, double noise_floor) {
  std::vector<double> ts, ls;
  for (const auto& [t, e] : curve)
    if (e > noise_floor) {
      ts.push_back(t);
      ls.push_back(std::log(e));
    }
  DecayFit fit;
  fit.points_used = ts.size();
  if (ts.size() < 5) {
    fit.degenerate = true;
    return fit;
  }
  const double n = static_cast<double>(ts.size());
  double st = 0, sl = 0;
  for (std::size_t i = 0; i < ts.size(); ++i) {
    st += ts[i];
    sl += ls[i];
  }
  const double mt = st / n, ml = sl / n;
  double stt = 0, stl = 0, sll = 0;
  for (std::size_t i = 0; i < ts.size(); ++i) {
    stt += (ts[i] - mt) * (ts[i] - mt);
    stl += (ts[i] - mt) * (ls[i] - ml);
    sll += (ls[i] - ml) * (ls[i] - ml);
  }
  const double slope = stl / stt;
  fit.delta = -slope;
  fit.C = std::exp(ml - slope * mt);
  fit.r2 = sll > 0.0 ? (stl * stl) / (stt * sll) : 1.0;
  return fit;
}

/// Least-squares slope of ln y against ln x.
inline double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  require(x.size() == y.size() && x.size() >= 2, ErrorKind::precondition, "loglog_slope needs >= 2 aligned points");
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += std::log(x[i]);
    my += std::log(y[i]);
  }
  mx /= static_cast<double>(x.size());
  my /= static_cast<double>(x.size());
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (std::log(x[i]) - mx) * (std::log(x[i]) - mx);
    sxy += (std::log(x[i]) - mx) * (std::log(y[i]) - my);
  }
  return sxy / sxx;
}

// ---------------------------------------------------------------------------
// Tail, flux and stress averages.

/// Horizontal average of the velocity over the band [L - 1, L].
inline Vec2 extract_tail(const DiscreteField& sol) {
  const Mesh& m = sol.mesh();
  const double lo = m.top - 1.0, hi = m.top;
  Vec2 s;
  double area = 0.0;
  integrate_band(*sol.space, lo, hi, [&](std::size_t tri, const std::array<double, 3>& l, double w) {
    s += w * sol.space->evaluate(sol.velocity, tri, l).first;
    area += w;
  });
  return (1.0 / area) * s;
}

/// Two-height extrapolation of tails with a known decay rate of the error, e^{-rate L}.
inline Vec2 extrapolate_tail(const Vec2& tail1, double L1, const Vec2& tail2, double L2, double rate) {
  const double q = std::exp(-rate * (L2 - L1));
  if (!(q < 1.0)) return tail2;
  return tail2 + (q / (1.0 - q)) * (tail2 - tail1);
}

namespace detail {

/// Integral over the horizontal line y2 = t of f(triangle, barycentrics); edges lying on the
/// line are averaged over the two sides (or taken from the upper side only).
template <class F>
double line_integral(const FESpace& V, double t, F&& f, bool upper_only = false) {
  const Mesh& m = V.mesh();
  double up = 0.0, dn = 0.0;
  bool has_up = false, has_dn = false;
  const double tol = 1e-12;
  for (std::size_t tri = 0; tri < m.num_triangles(); ++tri) {
    const auto g = V.geometry(tri);
    const double ymin = std::min({g.x[0].y, g.x[1].y, g.x[2].y}), ymax = std::max({g.x[0].y, g.x[1].y, g.x[2].y});
    if (ymax < t - tol || ymin > t + tol) continue;
    // Collect the intersection segment in barycentrics.
    std::vector<std::array<double, 3>> pts;
    int on = 0;
    for (int k = 0; k < 3; ++k)
      if (std::abs(g.x[k].y - t) <= tol) ++on;
    int side = 0;  // +1: triangle above the line, -1 below, 0 crossing
    if (on == 2) {
      for (int k = 0; k < 3; ++k)
        if (std::abs(g.x[k].y - t) <= tol) {
          std::array<double, 3> b{0, 0, 0};
          b[static_cast<std::size_t>(k)] = 1.0;
          pts.push_back(b);
        } else {
          side = g.x[k].y > t ? 1 : -1;
        }
    } else if (ymin < t - tol && ymax > t + tol) {
      for (int k = 0; k < 3; ++k) {
        const int j = (k + 1) % 3;
        const double fa = g.x[k].y - t, fb = g.x[j].y - t;
        if (std::abs(fa) <= tol) {
          std::array<double, 3> b{0, 0, 0};
          b[static_cast<std::size_t>(k)] = 1.0;
          pts.push_back(b);
        } else if ((fa < -tol && fb > tol) || (fa > tol && fb < -tol)) {
          const double s = fa / (fa - fb);
          std::array<double, 3> b{0, 0, 0};
          b[static_cast<std::size_t>(k)] = 1.0 - s;
          b[static_cast<std::size_t>(j)] = s;
          pts.push_back(b);
        }
      }
    } else {
      continue;
    }
    if (pts.size() != 2) continue;
    const Vec2 pa = g.point(pts[0]), pb = g.point(pts[1]);
    const double len = std::abs(pb.x - pa.x);
    double s = 0.0;
    for (const auto& lp : quad::line_gauss4()) {
      std::array<double, 3> b{};
      for (int k = 0; k < 3; ++k) b[k] = (1.0 - lp.s) * pts[0][k] + lp.s * pts[1][k];
      s += lp.w * len * f(tri, b);
    }
    if (side >= 0) {
      up += s;
      has_up = true;
    }
    if (side <= 0) {
      dn += s;
      has_dn = true;
    }
  }
  if (upper_only && has_up) return up;
  if (has_up && has_dn) return 0.5 * (up + dn);
  return has_up ? up : dn;
}

}  // namespace detail

struct ConservationCurves {
  std::vector<double> heights;
  /// int_{y2 = t} u2 dy1.
  std::vector<double> flux;
  /// int_{y2 = t} (S(A + Du) - S(A)) e2 . e1 dy1.
  std::vector<double> stress_average;

  double max_abs_flux() const {
    double m = 0;
    for (double f : flux) m = std::max(m, std::abs(f));
    return m;
  }
  double max_abs_stress() const {
    double m = 0;
    for (double f : stress_average) m = std::max(m, std::abs(f));
    return m;
  }
};

inline ConservationCurves conservation_checks(const DiscreteField& sol, const std::vector<double>& heights) {
  ConservationCurves c;
  const Sym2 sA = stress(sol.A, sol.law);
  for (double t : heights) {
    c.heights.push_back(t);
    c.flux.push_back(detail::line_integral(*sol.space, t, [&](std::size_t tri, const std::array<double, 3>& l) {
      return sol.space->evaluate(sol.velocity, tri, l).first.y;
    }));
    c.stress_average.push_back(
        detail::line_integral(*sol.space, t, [&](std::size_t tri, const std::array<double, 3>& l) {
          const Sym2 D = sol.space->evaluate(sol.velocity, tri, l).second.sym();
          const Sym2 B = t >= 0.0 ? sol.A + D : D;
          return (stress(B, sol.law) - (t >= 0.0 ? sA : Sym2{})).a12;
        }, t >= 0.0));
  }
  return c;
}

/// ( int_{t < y2 < t+1} |u - u_inf|^q + |grad u|^q )^{1/q}.
inline double band_norm(const DiscreteField& sol, const Vec2& tail, double t, double q) {
  double s = 0.0;
  integrate_band(*sol.space, t, std::min(t + 1.0, sol.mesh().top), [&](std::size_t tri, const std::array<double, 3>& l, double w) {
    const auto [u, du] = sol.space->evaluate(sol.velocity, tri, l);
    s += w * (std::pow(norm(u - tail), q) + std::pow(std::sqrt(du.norm_sq()), q));
  });
  return std::pow(s, 1.0 / q);
}

// ---------------------------------------------------------------------------
// Boundary-layer report.

struct BLReport {
  Vec2 tail;
  double decay_delta = 0.0;
  double decay_C = 0.0;
  double fit_r2 = 0.0;
  bool decay_degenerate = false;
  std::size_t fit_points = 0;
  std::vector<std::pair<double, double>> energy_curve;
  std::vector<std::pair<double, double>> flux_curve;
  std::vector<std::pair<double, double>> stress_avg_curve;
};

/// Energy curve on [0, L] (step dt), decay fit on [1, L - 2] above the noise floor 10 tol^2,
/// tail, and the flux / stress-average curves at the same heights.
inline BLReport analyze_bl(const DiscreteField& sol, double dt = 0.1) {
  BLReport r;
  const double L = sol.mesh().top;
  std::vector<double> hs;
  for (int i = 0;; ++i) {
    const double t = i * dt;
    if (t > L + 1e-12) break;
    hs.push_back(std::min(t, L));
  }
  std::vector<std::pair<double, double>> window;
  for (double t : hs) {
    const double e = energy_tail(sol, t);
    r.energy_curve.emplace_back(t, e);
    if (t >= 1.0 - 1e-12 && t <= L - 2.0 + 1e-12) window.emplace_back(t, e);
  }
  const double floor = 10.0 * sol.options.tol * sol.options.tol;
  const auto fit = fit_decay(window, floor);
  r.decay_delta = fit.delta;
  r.decay_C = fit.C;
  r.fit_r2 = fit.r2;
  r.decay_degenerate = fit.degenerate;
  r.fit_points = fit.points_used;
  r.tail = extract_tail(sol);
  const auto cc = conservation_checks(sol, hs);
  for (std::size_t i = 0; i < hs.size(); ++i) {
    r.flux_curve.emplace_back(hs[i], cc.flux[i]);
    r.stress_avg_curve.emplace_back(hs[i], cc.stress_average[i]);
  }
  return r;
}

// ---------------------------------------------------------------------------
// Wall-law map.

struct WallLawSample {
  double shear = 0.0;
  double F = 0.0;
  Vec2 tail;
  double delta_reg = 0.0;
  int iterations = 0;
};

struct WallLawOptions {
  double L = 8.0;
  double h = 0.1;
  SolveOptions solve{};
  /// Scale the regularization with the shear (delta = law.delta_reg * s), which makes the
  /// regularized map exactly positively homogeneous of degree one.
  bool co_scale_delta = true;
};

/// F(s): tail of the corrector driven by the shear matrix with off-diagonal s / 2.
inline std::vector<WallLawSample> wall_law_map(const RoughnessPattern& pattern, const PowerLaw& law,
                                               const std::vector<double>& shears, const WallLawOptions& opt = {}) {
  for (double s : shears) require(s > 0.0, ErrorKind::precondition, "wall_law_map: shears must be > 0");
  auto mesh = std::make_shared<const Mesh>(build_bl_mesh(pattern, opt.L, opt.h));
  // Independent solves on a shared read-only mesh.
  return detail::parallel_map(shears.size(), [&](std::size_t i) {
    const double s = shears[i];
    const PowerLaw ls = opt.co_scale_delta ? law.with_delta(law.delta_reg() * s) : law;
    SolveOptions so = opt.solve;
    if (opt.co_scale_delta && !so.delta_schedule.empty())
      for (auto& d : so.delta_schedule) d *= s;
    const auto sol = solve_bl(mesh, ls, Sym2::shear(0.5 * s), so);
    const Vec2 tail = extract_tail(sol);
    return WallLawSample{s, tail.x, tail, ls.delta_reg(), sol.stats.iterations};
  });
}

// ---------------------------------------------------------------------------
// Multiscale approximation of the channel flow.

/// Pointwise evaluation of eps u_bl(x / eps) and its gradient.
class ScaledCorrector {
 public:
  ScaledCorrector(const DiscreteField& bl, double eps) : bl_(bl), eps_(eps), loc_(bl.mesh()) {}

  /// Value and gradient at a channel point x.
  std::pair<Vec2, Grad2> operator()(const Vec2& x) const {
    Vec2 y{x.x / eps_, x.y / eps_};
    const double L = bl_.mesh().top;
    const bool beyond = y.y > L;
    if (beyond) y.y = L;
    const auto hit = loc_.locate(y);
    auto [u, du] = bl_.space->evaluate(bl_.velocity, static_cast<std::size_t>(hit.triangle), hit.bary);
    if (beyond) du = Grad2{};
    return {eps_ * u, du};
  }

 private:
  const DiscreteField& bl_;
  double eps_;
  PointLocator loc_;
};

/// The three-zone approximation: u^{0,eps} above Sigma_N, (U'(0) x2, 0) + eps u_bl(x/eps)
/// between Sigma_0 and Sigma_N, eps u_bl(x/eps) in the rough layer.
class ChannelApproximation {
 public:
  ChannelApproximation(const DiscreteField& bl, const PowerLaw& law, double eps, double N, double U_inf)
      : corrector_(bl, eps),
        couette_(couette_corrected_profile(law, eps, N, U_inf, CouetteVariant::sigmaN)),
        wall_shear_(poiseuille_wall_shear(law.p())),
        X_(sigma_height(eps, N)) {}

  double sigma_n() const { return X_; }
  const ShearProfile& couette() const { return couette_; }

  std::pair<Vec2, Grad2> operator()(const Vec2& x) const {
    if (x.y >= X_) {
      Grad2 g;
      g.g12 = couette_.derivative(x.y);
      return {{couette_.evaluate(x.y), 0.0}, g};
    }
    auto [u, du] = corrector_(x);
    if (x.y >= 0.0) {
      u.x += wall_shear_ * x.y;
      du.g12 += wall_shear_;
    }
    return {u, du};
  }

 private:
  ScaledCorrector corrector_;
  ShearProfile couette_;
  double wall_shear_;
  double X_;
};

/// Nodal interpolation of the approximation onto the channel's quadratic space.
inline DiscreteField assemble_approximation(std::shared_ptr<const Mesh> channel_mesh, const DiscreteField& bl,
                                            const PowerLaw& law, double eps, double N, double U_inf) {
  require(channel_mesh->kind == MeshKind::channel, ErrorKind::precondition, "assemble_approximation needs a channel mesh");
  reciprocal_integer(eps);
  if (!channel_mesh->pattern || !bl.mesh().pattern || !(*channel_mesh->pattern == *bl.mesh().pattern))
    fail(ErrorKind::pattern_mismatch, "boundary-layer and channel meshes use different roughness patterns");
  if (std::abs(channel_mesh->scale - eps) > 1e-12)
    fail(ErrorKind::pattern_mismatch, "channel mesh was built for a different eps");
  const ChannelApproximation app(bl, law, eps, N, U_inf);
  DiscreteField f;
  f.space = std::make_shared<const FESpace>(channel_mesh);
  f.velocity = f.space->interpolate([&](const Vec2& x) { return app(x).first; });
  f.pressure.assign(f.space->num_pressure_dofs(), 0.0);
  f.problem = ProblemKind::channel;
  f.law = law;
  return f;
}

// ---------------------------------------------------------------------------
// Error norms.

struct ErrorReport {
  std::vector<double> eps_list;
  /// ||u^eps - u^0||_{W^{1,p}(Omega)}.
  std::vector<double> crude_err;
  /// ||u^eps - u^0||_{W^{1,p}(Omega^eps_N)}.
  std::vector<double> crude_err_far;
  /// ||u^eps - u^eps_app||_{W^{1,p}(Omega^eps)}.
  std::vector<double> refined_err;
  /// ||u^eps - u^0_eps||_{W^{1,p}(Omega^eps_N)} (slip-corrected profile from Sigma_0).
  std::vector<double> sigma0_err;
  /// ||u^{0,eps} - u^0||_{W^{1,p}(Omega^eps_N)} from the explicit profiles.
  std::vector<double> couette_gap;
  /// Left side of the split-norm bound for w = u^eps - u^0.
  std::vector<double> split_lhs;
  std::vector<double> tails;
  std::vector<double> sigma_heights;
  double crude_rate = 0.0, crude_far_rate = 0.0, refined_rate = 0.0, split_rate = 0.0, sigma0_rate = 0.0;
  double M = 0.0;
  double p = 2.0;
  /// Exponents of the error theorem: 1 + 1/p' and 1/(p-1) + 1/p (reported only).
  double theory_rate_refined = 0.0, theory_rate_alt = 0.0;
};

struct ChannelErrors {
  double crude = 0.0, crude_far = 0.0, refined = 0.0, sigma0 = 0.0, couette_gap = 0.0, split = 0.0;
};

/// W^{1,p} differences of a channel solution against the reference fields.
inline ChannelErrors error_norms(const DiscreteField& u_eps, const ChannelApproximation& app, const PowerLaw& law,
                                 double eps, double U_inf, double M, int subdivisions = 1) {
  const double p = law.p();
  const auto poi = poiseuille(law);
  const auto sig0 = couette_corrected_profile(law, eps, 0.0, U_inf, CouetteVariant::sigma0);
  const double X = app.sigma_n();
  const FESpace& V = *u_eps.space;
  const Mesh& m = V.mesh();
  ChannelErrors e;
  double crude = 0, far = 0, refined = 0, s0 = 0, split_small = 0, split_large = 0, split_rough = 0;
  auto lp = [&](const Vec2& du, const Grad2& g) { return std::pow(norm(du), p) + std::pow(std::sqrt(g.norm_sq()), p); };
  auto profile_diff = [&](const ShearProfile& P, const Vec2& u, const Grad2& g, double y) {
    Grad2 d = g;
    d.g12 -= P.derivative(y);
    return lp(Vec2{u.x - P.evaluate(y), u.y}, d);
  };
  // Rough layer and the zone below Sigma_N use the corrector: integrate on subdivided pieces.
  integrate_band(V, m.wall(0.0) - 2.0, X, [&](std::size_t t, const std::array<double, 3>& l, double w) {
    const auto [u, g] = V.evaluate(u_eps.velocity, t, l);
    const Vec2 x = V.geometry(t).point(l);
    const auto [ua, ga] = app(x);
    Grad2 d{g.g11 - ga.g11, g.g12 - ga.g12, g.g21 - ga.g21, g.g22 - ga.g22};
    refined += w * lp(u - ua, d);
    if (x.y >= 0.0) {
      crude += w * profile_diff(poi.profile, u, g, x.y);
      Grad2 gw = g;
      gw.g12 -= poi.profile.derivative(x.y);
      const double nd = norm(gw.sym());
      if (nd <= M) split_small += w * nd * nd;
      else split_large += w * std::pow(nd, p);
    } else {
      split_rough += w * std::pow(norm(g.sym()), p);
    }
  }, subdivisions);
  integrate_band(V, X, 1.0, [&](std::size_t t, const std::array<double, 3>& l, double w) {
    const auto [u, g] = V.evaluate(u_eps.velocity, t, l);
    const double y = V.geometry(t).point(l).y;
    const double c = profile_diff(poi.profile, u, g, y);
    crude += w * c;
    far += w * c;
    refined += w * profile_diff(app.couette(), u, g, y);
    s0 += w * profile_diff(sig0, u, g, y);
    Grad2 gw = g;
    gw.g12 -= poi.profile.derivative(y);
    const double nd = norm(gw.sym());
    if (nd <= M) split_small += w * nd * nd;
    else split_large += w * std::pow(nd, p);
  });
  e.crude = std::pow(crude, 1.0 / p);
  e.crude_far = std::pow(far, 1.0 / p);
  e.refined = std::pow(refined, 1.0 / p);
  e.sigma0 = std::pow(s0, 1.0 / p);
  e.couette_gap = profile_distance(app.couette(), poi.profile, X, 1.0, p);
  e.split = split_large + split_small + split_rough;
  return e;
}

struct ErrorStudyOptions {
  double N = 1.0;
  double h_bulk = 0.05;
  double h_bl = 0.2;
  double bl_L = 8.0;
  /// M for the split norm; <= 0 selects 1 + max |D u^0|.
  double M = 0.0;
  SolveOptions solve{};
  int subdivisions = 1;
};

/// Solves the boundary layer once and the channel for each eps, and fits log-log rates.
inline ErrorReport run_error_study(const RoughnessPattern& pattern, const PowerLaw& law, const std::vector<double>& eps_list,
                                   const ErrorStudyOptions& opt = {}) {
  ErrorReport rep;
  rep.p = law.p();
  rep.M = opt.M > 0.0 ? opt.M : 1.0 + norm(poiseuille_shear_tensor(law.p()));
  rep.theory_rate_refined = 1.0 + 1.0 / law.p_conj();
  rep.theory_rate_alt = 1.0 / (law.p() - 1.0) + 1.0 / law.p();
  auto bl_mesh = std::make_shared<const Mesh>(build_bl_mesh(pattern, opt.bl_L, opt.h_bl));
  const auto bl = solve_bl(bl_mesh, law, poiseuille_shear_tensor(law.p()), opt.solve);
  const double U_inf = extract_tail(bl).x;
  // One channel solve per eps, run concurrently and collected in grid order.
  const auto results = detail::parallel_map(eps_list.size(), [&](std::size_t i) {
    const double eps = eps_list[i];
    auto cm = std::make_shared<const Mesh>(build_channel_mesh(pattern, eps, opt.h_bulk, opt.h_bl));
    const auto ue = solve_channel(cm, law, opt.solve);
    const ChannelApproximation app(bl, law, eps, opt.N, U_inf);
    return std::make_pair(error_norms(ue, app, law, eps, U_inf, rep.M, opt.subdivisions), app.sigma_n());
  });
  for (std::size_t i = 0; i < eps_list.size(); ++i) {
    const double eps = eps_list[i];
    const auto& e = results[i].first;
    rep.eps_list.push_back(eps);
    rep.crude_err.push_back(e.crude);
    rep.crude_err_far.push_back(e.crude_far);
    rep.refined_err.push_back(e.refined);
    rep.sigma0_err.push_back(e.sigma0);
    rep.couette_gap.push_back(e.couette_gap);
    rep.split_lhs.push_back(e.split);
    rep.tails.push_back(U_inf);
    rep.sigma_heights.push_back(results[i].second);
  }
  if (rep.eps_list.size() >= 2) {
    rep.crude_rate = loglog_slope(rep.eps_list, rep.crude_err);
    rep.crude_far_rate = loglog_slope(rep.eps_list, rep.crude_err_far);
    rep.refined_rate = loglog_slope(rep.eps_list, rep.refined_err);
    rep.split_rate = loglog_slope(rep.eps_list, rep.split_lhs);
    rep.sigma0_rate = loglog_slope(rep.eps_list, rep.sigma0_err);
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Korn constant.

namespace detail {

/// Sparse matrices of int grad u : grad v, int Du : Dv and the component mass vectors.
struct KornForms {
  Eigen::SparseMatrix<double> grad, sym;
  Eigen::VectorXd mass_x, mass_y;
};

inline KornForms korn_forms(const FESpace& V) {
  const Mesh& m = V.mesh();
  const auto n = static_cast<Eigen::Index>(V.num_velocity_dofs());
  std::vector<Eigen::Triplet<double>> tg, ts;
  KornForms f;
  f.mass_x = Eigen::VectorXd::Zero(n);
  f.mass_y = Eigen::VectorXd::Zero(n);
  for (std::size_t t = 0; t < m.num_triangles(); ++t) {
    const auto g = V.geometry(t);
    const auto& nodes = V.element_nodes(t);
    double kg[12][12] = {}, ks[12][12] = {};
    for (const auto& q : quad::triangle_degree4()) {
      const auto l = to_barycentric(q);
      const double w = 2.0 * g.area * q.w;
      const auto phi = P2Basis::values(l);
      const auto d = P2Basis::gradients(l, g);
      for (int i = 0; i < 6; ++i) {
        f.mass_x[2 * nodes[i]] += w * phi[i];
        f.mass_y[2 * nodes[i] + 1] += w * phi[i];
      }
      for (int i = 0; i < 12; ++i)
        for (int j = 0; j < 12; ++j) {
          const int ci = i % 2, cj = j % 2;
          const Vec2 &di = d[i / 2], &dj = d[j / 2];
          if (ci == cj) kg[i][j] += w * dot(di, dj);
          ks[i][j] += w * roughwall::dot(detail::test_strain(ci, di), detail::test_strain(cj, dj));
        }
    }
    for (int i = 0; i < 12; ++i)
      for (int j = 0; j < 12; ++j) {
        const auto gi = static_cast<Eigen::Index>(2 * nodes[i / 2] + i % 2);
        const auto gj = static_cast<Eigen::Index>(2 * nodes[j / 2] + j % 2);
        tg.emplace_back(gi, gj, kg[i][j]);
        ts.emplace_back(gi, gj, ks[i][j]);
      }
  }
  f.grad.resize(n, n);
  f.sym.resize(n, n);
  f.grad.setFromTriplets(tg.begin(), tg.end());
  f.sym.setFromTriplets(ts.begin(), ts.end());
  return f;
}

/// Indices of free velocity dofs (bottom nodes removed when the trace vanishes there).
inline std::vector<Eigen::Index> free_dofs(const FESpace& V, bool zero_trace) {
  std::vector<Eigen::Index> idx;
  for (std::size_t i = 0; i < V.num_nodes(); ++i) {
    if (zero_trace && V.has_flag(i, NodeFlag::bottom)) continue;
    idx.push_back(static_cast<Eigen::Index>(2 * i));
    idx.push_back(static_cast<Eigen::Index>(2 * i + 1));
  }
  return idx;
}

inline Eigen::MatrixXd restrict_dense(const Eigen::SparseMatrix<double>& A, const std::vector<Eigen::Index>& idx) {
  const Eigen::MatrixXd D(A);
  Eigen::MatrixXd R(static_cast<Eigen::Index>(idx.size()), static_cast<Eigen::Index>(idx.size()));
  for (std::size_t i = 0; i < idx.size(); ++i)
    for (std::size_t j = 0; j < idx.size(); ++j) R(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = D(idx[i], idx[j]);
  return R;
}

/// ||grad v||_p and ||Dv||_p with their gradients with respect to the dofs.
struct KornRatio {
  double G = 0.0, D = 0.0;
  Eigen::VectorXd dG, dD;
};

inline KornRatio korn_ratio(const FESpace& V, const Eigen::VectorXd& v, double p, bool with_gradient) {
  const Mesh& m = V.mesh();
  KornRatio r;
  double sg = 0.0, sd = 0.0;
  const double reg = 1e-24;
  if (with_gradient) {
    r.dG = Eigen::VectorXd::Zero(v.size());
    r.dD = Eigen::VectorXd::Zero(v.size());
  }
  for (std::size_t t = 0; t < m.num_triangles(); ++t) {
    const auto g = V.geometry(t);
    const auto& nodes = V.element_nodes(t);
    for (const auto& q : quad::triangle_degree5()) {
      const auto l = to_barycentric(q);
      const double w = 2.0 * g.area * q.w;
      const auto d = P2Basis::gradients(l, g);
      Grad2 gr;
      for (int k = 0; k < 6; ++k) {
        const double u1 = v[2 * nodes[k]], u2 = v[2 * nodes[k] + 1];
        gr.g11 += u1 * d[k].x;
        gr.g12 += u1 * d[k].y;
        gr.g21 += u2 * d[k].x;
        gr.g22 += u2 * d[k].y;
      }
      const Sym2 D = gr.sym();
      const double ng2 = gr.norm_sq() + reg, nd2 = roughwall::dot(D, D) + reg;
      sg += w * std::pow(ng2, 0.5 * p);
      sd += w * std::pow(nd2, 0.5 * p);
      if (with_gradient) {
        const double cg = w * p * std::pow(ng2, 0.5 * p - 1.0), cd = w * p * std::pow(nd2, 0.5 * p - 1.0);
        for (int k = 0; k < 6; ++k) {
          r.dG[2 * nodes[k]] += cg * (gr.g11 * d[k].x + gr.g12 * d[k].y);
          r.dG[2 * nodes[k] + 1] += cg * (gr.g21 * d[k].x + gr.g22 * d[k].y);
          r.dD[2 * nodes[k]] += cd * roughwall::dot(D, detail::test_strain(0, d[k]));
          r.dD[2 * nodes[k] + 1] += cd * roughwall::dot(D, detail::test_strain(1, d[k]));
        }
      }
    }
  }
  r.G = sg;  // p-th powers; converted by callers
  r.D = sd;
  return r;
}

}  // namespace detail

struct KornOptions {
  /// Fields vanish on the bottom boundary (rough layer extended by zero) instead of having zero mean.
  bool zero_trace = false;
  int samples = 200;
  std::uint64_t seed = 11;
  int ascent_iterations = 60;
};

struct KornEstimate {
  double constant = 0.0;
  /// "eigen" for p = 2, "sampling" otherwise.
  std::string method;
  double best_sample = 0.0;
  double after_ascent = 0.0;
  std::size_t dofs = 0;
};

/// p = 2 maximizer of ||grad v|| / ||Dv|| (dense generalized eigenproblem); also used as a start for p != 2.
inline std::pair<double, Eigen::VectorXd> korn_eigen(const FESpace& V, bool zero_trace) {
  const auto forms = detail::korn_forms(V);
  const auto idx = detail::free_dofs(V, zero_trace);
  const Eigen::MatrixXd Kg = detail::restrict_dense(forms.grad, idx);
  Eigen::MatrixXd Kd = detail::restrict_dense(forms.sym, idx);
  if (!zero_trace) {
    // Penalize the two constant modes through their mean functionals.
    Eigen::VectorXd gx(static_cast<Eigen::Index>(idx.size())), gy(static_cast<Eigen::Index>(idx.size()));
    for (std::size_t i = 0; i < idx.size(); ++i) {
      gx[static_cast<Eigen::Index>(i)] = forms.mass_x[idx[i]];
      gy[static_cast<Eigen::Index>(i)] = forms.mass_y[idx[i]];
    }
    Kd += gx * gx.transpose() + gy * gy.transpose();
  }
  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(Kg, Kd);
  if (es.info() != Eigen::Success) fail(ErrorKind::non_convergence, "Korn eigenproblem failed");
  const Eigen::Index top = es.eigenvalues().size() - 1;
  Eigen::VectorXd v = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(V.num_velocity_dofs()));
  for (std::size_t i = 0; i < idx.size(); ++i) v[idx[i]] = es.eigenvectors()(static_cast<Eigen::Index>(i), top);
  return {std::sqrt(es.eigenvalues()[top]), v};
}

namespace detail {

/// Smooth random field: trigonometric modes in x times powers of a vertical coordinate.
inline Eigen::VectorXd random_smooth_field(const FESpace& V, std::mt19937_64& rng, bool zero_trace) {
  std::normal_distribution<double> nd(0.0, 1.0);
  const Mesh& m = V.mesh();
  double c[2][4][4][2];
  for (auto& a : c)
    for (auto& b : a)
      for (auto& d : b)
        for (auto& e : d) e = nd(rng);
  const double ylo = m.pattern ? m.scale * m.pattern->min_value() : m.bottom;
  const double yhi = m.top;
  Eigen::VectorXd v(static_cast<Eigen::Index>(V.num_velocity_dofs()));
  for (std::size_t i = 0; i < V.num_nodes(); ++i) {
    const Vec2 x = V.node_position(i);
    const double wall = m.wall(x.x);
    double s = (x.y - wall) / std::max(1e-300, yhi - wall);
    if (!zero_trace) s = (x.y - ylo) / (yhi - ylo);
    for (int comp = 0; comp < 2; ++comp) {
      double val = 0.0;
      for (int k = 0; k < 4; ++k)
        for (int j = 0; j < 4; ++j) {
          const double ang = 2.0 * std::numbers::pi * k * x.x;
          const double pw = zero_trace ? std::pow(s, j + 1) : std::pow(2.0 * s - 1.0, j);
          val += (c[comp][k][j][0] * std::cos(ang) + c[comp][k][j][1] * std::sin(ang)) * pw / (1.0 + k + j);
        }
      v[static_cast<Eigen::Index>(2 * i + comp)] = val;
    }
  }
  return v;
}

}  // namespace detail

/// Empirical sup of ||grad v||_{L^p} / ||Dv||_{L^p}.
inline KornEstimate estimate_korn_constant(std::shared_ptr<const Mesh> mesh, double p, const KornOptions& opt = {}) {
  const FESpace V(mesh);
  KornEstimate est;
  est.dofs = V.num_velocity_dofs();
  const auto [c2, v2] = korn_eigen(V, opt.zero_trace);
  if (p == 2.0) {
    est.method = "eigen";
    est.constant = c2;
    est.best_sample = c2;
    est.after_ascent = c2;
    return est;
  }
  est.method = "sampling";
  std::vector<Eigen::Index> fixed;
  if (opt.zero_trace)
    for (std::size_t i = 0; i < V.num_nodes(); ++i)
      if (V.has_flag(i, NodeFlag::bottom)) {
        fixed.push_back(static_cast<Eigen::Index>(2 * i));
        fixed.push_back(static_cast<Eigen::Index>(2 * i + 1));
      }
  auto ratio = [&](const Eigen::VectorXd& v) {
    const auto r = detail::korn_ratio(V, v, p, false);
    return std::pow(r.G / r.D, 1.0 / p);
  };
  std::mt19937_64 rng(opt.seed);
  Eigen::VectorXd best = v2;
  double best_r = ratio(v2);
  for (int s = 0; s < opt.samples; ++s) {
    const Eigen::VectorXd v = detail::random_smooth_field(V, rng, opt.zero_trace);
    const double r = ratio(v);
    if (r > best_r) {
      best_r = r;
      best = v;
    }
  }
  est.best_sample = best_r;
  // Gradient ascent on ln ||grad v||_p - ln ||Dv||_p, preconditioned by the H1 Riesz map.
  const auto forms = detail::korn_forms(V);
  Eigen::SparseMatrix<double> H = forms.grad;
  {
    Eigen::SparseMatrix<double> I(H.rows(), H.cols());
    I.setIdentity();
    H += 1e-8 * H.diagonal().maxCoeff() * I;
    for (auto i : fixed) H.coeffRef(i, i) += 1.0;
  }
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> chol(H);
  double J = std::log(best_r);
  Eigen::VectorXd v = best;
  double step = 1.0;
  for (int it = 0; it < opt.ascent_iterations; ++it) {
    const auto r = detail::korn_ratio(V, v, p, true);
    Eigen::VectorXd grad = r.dG / (p * r.G) - r.dD / (p * r.D);
    for (auto i : fixed) grad[i] = 0.0;
    Eigen::VectorXd dir = chol.solve(grad);
    for (auto i : fixed) dir[i] = 0.0;
    const double scale = std::sqrt(std::max(1e-300, v.dot(H * v)) / std::max(1e-300, dir.dot(H * dir)));
    bool improved = false;
    for (int k = 0; k < 20; ++k) {
      const Eigen::VectorXd trial = v + step * scale * dir;
      const double Jt = std::log(ratio(trial));
      if (Jt > J) {
        v = trial;
        J = Jt;
        improved = true;
        step = std::min(1.0, 2.0 * step);
        break;
      }
      step *= 0.5;
    }
    if (!improved) break;
  }
  est.after_ascent = std::exp(J);
  est.constant = std::max(est.best_sample, est.after_ascent);
  return est;
}

// ---------------------------------------------------------------------------
// Rescaled trace and Poincare ratios in the rough layer.

struct TracePoincareRow {
  double eps = 0.0;
  /// sup ||phi||_{L^p(Sigma_0)} / (eps^{1/p'} ||grad phi||_{L^p(R^eps)}).
  double trace_ratio = 0.0;
  /// sup ||phi||_{L^p(R^eps)} / (eps ||grad phi||_{L^p(R^eps)}).
  double poincare_ratio = 0.0;
};

struct TracePoincareOptions {
  double h_cell = 0.2;
  int samples = 200;
  std::uint64_t seed = 5;
};

namespace detail {

/// (||phi||_{L^p(Sigma_0)}, ||phi||_{L^p(R)}, ||grad phi||_{L^p(R)}) for scalar nodal values.
inline std::array<double, 3> trace_poincare_norms(const FESpace& V, const std::vector<double>& phi, double p) {
  const Mesh& m = V.mesh();
  double s_tr = 0, s_l = 0, s_g = 0;
  for (std::size_t t = 0; t < m.num_triangles(); ++t) {
    const auto g = V.geometry(t);
    const auto& nodes = V.element_nodes(t);
    for (const auto& q : quad::triangle_degree5()) {
      const auto l = to_barycentric(q);
      const double w = 2.0 * g.area * q.w;
      const auto b = P2Basis::values(l);
      const auto d = P2Basis::gradients(l, g);
      double v = 0;
      Vec2 gr;
      for (int k = 0; k < 6; ++k) {
        v += phi[static_cast<std::size_t>(nodes[k])] * b[k];
        gr += phi[static_cast<std::size_t>(nodes[k])] * d[k];
      }
      s_l += w * std::pow(std::abs(v), p);
      s_g += w * std::pow(norm(gr), p);
    }
  }
  for (const auto& [t, e] : V.tagged_element_edges(BoundaryTag::interface)) {
    const auto g = V.geometry(t);
    const auto& nodes = V.element_nodes(t);
    const double len = norm(g.x[static_cast<std::size_t>(P2Basis::edges[e][1])] - g.x[static_cast<std::size_t>(P2Basis::edges[e][0])]);
    for (const auto& lp : quad::line_gauss4()) {
      const auto b = P2Basis::values(edge_barycentric(e, lp.s));
      double v = 0;
      for (int k = 0; k < 6; ++k) v += phi[static_cast<std::size_t>(nodes[k])] * b[k];
      s_tr += lp.w * len * std::pow(std::abs(v), p);
    }
  }
  return {std::pow(s_tr, 1.0 / p), std::pow(s_l, 1.0 / p), std::pow(s_g, 1.0 / p)};
}

}  // namespace detail

/// Ratios of a given scalar field (zero on the wall) in the rough layer of scale eps.
inline TracePoincareRow trace_poincare_ratios(const FESpace& V, const std::vector<double>& phi, double eps, double p) {
  const auto n = detail::trace_poincare_norms(V, phi, p);
  const double pc = p / (p - 1.0);
  return {eps, n[0] / (std::pow(eps, 1.0 / pc) * n[2]), n[1] / (eps * n[2])};
}

/// For each eps: sup over seeded random fields vanishing on the wall, built from powers of the
/// terrain-following coordinate times trigonometric modes of period 1 and of period eps.
inline std::vector<TracePoincareRow> verify_trace_poincare(const RoughnessPattern& pattern, double p,
                                                           const std::vector<double>& eps_list,
                                                           const TracePoincareOptions& opt = {}) {
  std::vector<TracePoincareRow> rows;
  for (double eps : eps_list) {
    reciprocal_integer(eps);
    auto mesh = std::make_shared<const Mesh>(build_rough_layer_mesh(pattern, eps, opt.h_cell));
    const FESpace V(mesh);
    std::mt19937_64 rng(opt.seed);
    std::normal_distribution<double> nd(0.0, 1.0);
    TracePoincareRow best{eps, 0.0, 0.0};
    std::vector<double> phi(V.num_nodes());
    for (int s = 0; s < opt.samples; ++s) {
      double c[3][3][2], f[3][3][2];
      for (auto& a : c)
        for (auto& b : a)
          for (auto& x : b) x = nd(rng);
      for (auto& a : f)
        for (auto& b : a)
          for (auto& x : b) x = nd(rng);
      if (s < 3) {
        // The first candidates are the x-independent profiles s^{j+1}.
        for (auto& a : c)
          for (auto& b : a) b[0] = b[1] = 0.0;
        for (auto& a : f)
          for (auto& b : a) b[0] = b[1] = 0.0;
        c[s][0][0] = 1.0;
      }
      for (std::size_t i = 0; i < V.num_nodes(); ++i) {
        const Vec2 x = V.node_position(i);
        const double wall = mesh->wall(x.x);
        const double sv = (x.y - wall) / (-wall);
        double v = 0.0;
        for (int j = 0; j < 3; ++j) {
          const double pw = std::pow(sv, j + 1);
          for (int k = 0; k < 3; ++k) {
            const double a1 = 2.0 * std::numbers::pi * k * x.x;
            v += pw * (c[j][k][0] * std::cos(a1) + c[j][k][1] * std::sin(a1)) / (1.0 + k);
            if (k > 0) {
              const double a2 = 2.0 * std::numbers::pi * k * x.x / eps;
              v += pw * (f[j][k][0] * std::cos(a2) + f[j][k][1] * std::sin(a2)) / (2.0 + k);
            }
          }
        }
        phi[i] = v;
      }
      const auto r = trace_poincare_ratios(V, phi, eps, p);
      best.trace_ratio = std::max(best.trace_ratio, r.trace_ratio);
      best.poincare_ratio = std::max(best.poincare_ratio, r.poincare_ratio);
    }
    rows.push_back(best);
  }
  return rows;
}

}  // namespace roughwall
