#pragma once

// Closed-form shear flows: the generalized Poiseuille profile and its
// Couette-type corrections with the implicit slip parameter alpha(eps).

#include <algorithm>
#include <cmath>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "roughwall/error.hpp"
#include "roughwall/quadrature.hpp"
#include "roughwall/tensor.hpp"

namespace roughwall {

enum class CouetteVariant { sigmaN, sigma0 };

inline const char* to_string(CouetteVariant v) { return v == CouetteVariant::sigmaN ? "sigmaN" : "sigma0"; }

struct ProfileRecord {
  std::string variant;  // "poiseuille", "sigmaN" or "sigma0"
  double p = 2.0;
  double eps = 0.0;
  double N = 0.0;
  double U_inf = 0.0;
  double alpha = 0.0;
  double beta = 0.0;
  /// Lower end of the profile's interval.
  double start = 0.0;
};

/// Horizontal velocity profile U(x2) on [start, 1] with its derivative.
class ShearProfile {
 public:
  ShearProfile(std::function<double(double)> value, std::function<double(double)> derivative, double vertex,
               ProfileRecord record)
      : value_(std::move(value)), derivative_(std::move(derivative)), vertex_(vertex), record_(std::move(record)) {}

  double evaluate(double x2) const { return value_(x2); }
  double derivative(double x2) const { return derivative_(x2); }
  double operator()(double x2) const { return value_(x2); }
  /// Height where |.|^{p'} has its vertex (the profile is only C^1 there when p' < 2).
  double vertex() const { return vertex_; }
  double start() const { return record_.start; }
  const ProfileRecord& params() const { return record_; }

 private:
  std::function<double(double)> value_;
  std::function<double(double)> derivative_;
  double vertex_;
  ProfileRecord record_;
};

namespace detail {

inline double sqrt2_pow(double e) { return std::pow(2.0, 0.5 * e); }

/// sign(x) |x|^e.
inline double signed_pow(double x, double e) { return x == 0.0 ? 0.0 : std::copysign(std::pow(std::abs(x), e), x); }

/// Profile b - c |v - x2|^{p'} with c = sqrt(2)^{p'} / p'.
inline ShearProfile vertex_profile(double pc, double b, double v, ProfileRecord rec) {
  const double c = sqrt2_pow(pc) / pc;
  const double k = sqrt2_pow(pc);
  return ShearProfile([=](double x) { return b - c * std::pow(std::abs(v - x), pc); },
                      [=](double x) { return k * signed_pow(v - x, pc - 1.0); }, v, std::move(rec));
}

}  // namespace detail

struct PoiseuilleFlow {
  ShearProfile profile;
  /// Shear matrix with off-diagonal U'(0)/2.
  Sym2 A;
  double wall_shear = 1.0;
};

/// Generalized Poiseuille flow of the channel 0 < x2 < 1 under body force e1.
inline PoiseuilleFlow poiseuille(const PowerLaw& law) {
  const double pc = law.p_conj();
  ProfileRecord rec;
  rec.variant = "poiseuille";
  rec.p = law.p();
  // U = ((p-1)/p)(sqrt2^{-p'} - sqrt2^{p'} |x2 - 1/2|^{p'}) = c ((1/2)^{p'} - |x2 - 1/2|^{p'}).
  const double c = detail::sqrt2_pow(pc) / pc;
  const double b = c * std::pow(0.5, pc);
  rec.beta = b;
  return {detail::vertex_profile(pc, b, 0.5, rec), poiseuille_shear_tensor(law.p()), poiseuille_wall_shear(law.p())};
}

/// Height of the auxiliary interface: N eps |ln eps|.
inline double sigma_height(double eps, double N) { return N * eps * std::abs(std::log(eps)); }

/// Leading-order slip parameter -sqrt2^{p'-4} eps U_inf.
inline double alpha_taylor(const PowerLaw& law, double eps, double U_inf) {
  return -detail::sqrt2_pow(law.p_conj() - 4.0) * eps * U_inf;
}

/// p = 2 roots: sigma0 gives -eps U_inf / 2, sigmaN gives [X - (X + eps U_inf)/(1 - X)] / 2.
inline double alpha_newtonian(double eps, double N, double U_inf, CouetteVariant v) {
  if (v == CouetteVariant::sigma0) return -0.5 * eps * U_inf;
  const double X = sigma_height(eps, N);
  return 0.5 * (X - (X + eps * U_inf) / (1.0 - X));
}

struct AlphaSolution {
  double alpha = 0.0;
  double beta = 0.0;
  double residual = 0.0;
  int bisection_steps = 0;
  int newton_steps = 0;
};

namespace detail {

inline void check_alpha_inputs(double eps, double N) {
  if (!(eps > 0.0 && eps <= 0.25)) {
    std::ostringstream os;
    os << "eps must lie in (0, 1/4] (got " << eps << ")";
    fail(ErrorKind::precondition, os.str());
  }
  if (!(N >= 0.0)) fail(ErrorKind::precondition, "N must be >= 0");
}

}  // namespace detail

/// Solves -c(|1/2 + a - X|^{p'} - |1/2 - a|^{p'}) = U'(0) X + eps U_inf for a in (-1/4, 1/4),
/// with X = N eps |ln eps| (sigmaN) or X = 0 (sigma0); c = sqrt2^{p'}/p'.
inline AlphaSolution solve_alpha(const PowerLaw& law, double eps, double N, double U_inf, CouetteVariant variant) {
  detail::check_alpha_inputs(eps, N);
  const double pc = law.p_conj();
  const double c = detail::sqrt2_pow(pc) / pc;
  const double k = detail::sqrt2_pow(pc);
  const double X = variant == CouetteVariant::sigmaN ? sigma_height(eps, N) : 0.0;
  const double rhs = poiseuille_wall_shear(law.p()) * X + eps * U_inf;
  auto F = [&](double a) { return -c * (std::pow(std::abs(0.5 + a - X), pc) - std::pow(std::abs(0.5 - a), pc)) - rhs; };
  auto dF = [&](double a) { return -k * (detail::signed_pow(0.5 + a - X, pc - 1.0) + detail::signed_pow(0.5 - a, pc - 1.0)); };

  AlphaSolution s;
  double lo = -0.25, hi = 0.25;
  double flo = F(lo), fhi = F(hi);
  if (!(flo * fhi <= 0.0)) {
    std::ostringstream os;
    os << "solve_alpha: no sign change on (-1/4, 1/4) for p = " << law.p() << ", eps = " << eps << ", N = " << N
       << ", U_inf = " << U_inf << " (F = " << flo << ", " << fhi << ")";
    fail(ErrorKind::bracket, os.str());
  }
  // F is decreasing in a; bisect to a small bracket, then polish with Newton.
  while (hi - lo > 1e-6) {
    const double mid = 0.5 * (lo + hi);
    const double fm = F(mid);
    ++s.bisection_steps;
    if (fm == 0.0) {
      lo = hi = mid;
      break;
    }
    if ((fm > 0.0) == (flo > 0.0)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
  }
  double a = 0.5 * (lo + hi);
  for (int it = 0; it < 50; ++it) {
    const double f = F(a);
    if (std::abs(f) <= 1e-15) break;
    const double d = dF(a);
    double next = a - f / d;
    if (!(next > lo - 1e-6 && next < hi + 1e-6)) next = 0.5 * (lo + hi);
    ++s.newton_steps;
    if (next == a) break;
    a = next;
  }
  s.alpha = a;
  s.residual = std::abs(F(a));
  if (!(s.residual <= 1e-13)) {
    std::ostringstream os;
    os << "solve_alpha: residual " << s.residual << " above 1e-13";
    fail(ErrorKind::non_convergence, os.str());
  }
  s.beta = c * std::pow(std::abs(0.5 - a), pc);
  return s;
}

/// U(x2) = beta - c |1/2 + alpha - x2|^{p'} on [X, 1]; equals U'(0) X + eps U_inf at X and 0 at 1.
inline ShearProfile couette_corrected_profile(const PowerLaw& law, double eps, double N, double U_inf,
                                              CouetteVariant variant) {
  const auto s = solve_alpha(law, eps, N, U_inf, variant);
  ProfileRecord rec;
  rec.variant = to_string(variant);
  rec.p = law.p();
  rec.eps = eps;
  rec.N = N;
  rec.U_inf = U_inf;
  rec.alpha = s.alpha;
  rec.beta = s.beta;
  rec.start = variant == CouetteVariant::sigmaN ? sigma_height(eps, N) : 0.0;
  return detail::vertex_profile(law.p_conj(), s.beta, 0.5 + s.alpha, rec);
}

/// (int_a^b |U - V|^p + |U' - V'|^p dx2)^{1/p}, splitting at both vertices.
inline double profile_distance(const ShearProfile& U, const ShearProfile& V, double a, double b, double p,
                               double abs_tol = 1e-14) {
  std::vector<double> cuts{a, b};
  for (double v : {U.vertex(), V.vertex()})
    if (v > a && v < b) cuts.push_back(v);
  std::sort(cuts.begin(), cuts.end());
  double s = 0.0;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i)
    s += quad::integrate(
        [&](double x) {
          return std::pow(std::abs(U(x) - V(x)), p) + std::pow(std::abs(U.derivative(x) - V.derivative(x)), p);
        },
        cuts[i], cuts[i + 1], abs_tol);
  return std::pow(s, 1.0 / p);
}

}  // namespace roughwall
