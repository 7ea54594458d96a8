#pragma once

// Symmetric 2x2 tensors and the power-law stress law.

#include <cmath>
#include <limits>
#include <sstream>

#include "roughwall/error.hpp"

namespace roughwall {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  Vec2& operator+=(const Vec2& o) { x += o.x; y += o.y; return *this; }
  Vec2& operator-=(const Vec2& o) { x -= o.x; y -= o.y; return *this; }
  Vec2& operator*=(double s) { x *= s; y *= s; return *this; }
};

inline Vec2 operator+(Vec2 a, const Vec2& b) { return a += b; }
inline Vec2 operator-(Vec2 a, const Vec2& b) { return a -= b; }
inline Vec2 operator*(Vec2 a, double s) { return a *= s; }
inline Vec2 operator*(double s, Vec2 a) { return a *= s; }
inline double dot(const Vec2& a, const Vec2& b) { return a.x * b.x + a.y * b.y; }
inline double norm(const Vec2& a) { return std::hypot(a.x, a.y); }

/// Symmetric 2x2 tensor; a21 is a12.
struct Sym2 {
  double a11 = 0.0;
  double a12 = 0.0;
  double a22 = 0.0;

  Sym2& operator+=(const Sym2& o) { a11 += o.a11; a12 += o.a12; a22 += o.a22; return *this; }
  Sym2& operator-=(const Sym2& o) { a11 -= o.a11; a12 -= o.a12; a22 -= o.a22; return *this; }
  Sym2& operator*=(double s) { a11 *= s; a12 *= s; a22 *= s; return *this; }

  /// Symmetric part of a 2x2 matrix given row-wise.
  static Sym2 sym(double g11, double g12, double g21, double g22) {
    return {g11, 0.5 * (g12 + g21), g22};
  }
  /// Shear tensor with zero diagonal.
  static Sym2 shear(double off_diagonal) { return {0.0, off_diagonal, 0.0}; }
};

inline Sym2 operator+(Sym2 a, const Sym2& b) { return a += b; }
inline Sym2 operator-(Sym2 a, const Sym2& b) { return a -= b; }
inline Sym2 operator-(Sym2 a) { return a *= -1.0; }
inline Sym2 operator*(Sym2 a, double s) { return a *= s; }
inline Sym2 operator*(double s, Sym2 a) { return a *= s; }

/// Double contraction A:B.
inline double dot(const Sym2& a, const Sym2& b) {
  return a.a11 * b.a11 + 2.0 * a.a12 * b.a12 + a.a22 * b.a22;
}
/// Frobenius norm, counting the off-diagonal entry twice.
inline double norm(const Sym2& a) { return std::sqrt(dot(a, a)); }

inline Vec2 operator*(const Sym2& a, const Vec2& v) {
  return {a.a11 * v.x + a.a12 * v.y, a.a12 * v.x + a.a22 * v.y};
}

/// Power-law rheology S(A) = nu (delta^2 + |A|^2)^((p-2)/2) A with nu = 1.
class PowerLaw {
 public:
  static constexpr double kDefaultDelta = 1e-5;

  explicit PowerLaw(double p, double delta_reg = kDefaultDelta) : p_(p), delta_(delta_reg) {
    if (!(p > 1.0) || !std::isfinite(p)) {
      std::ostringstream os;
      os << "p must exceed 1 (got " << p << ")";
      fail(ErrorKind::validation, os.str());
    }
    if (!(delta_reg >= 0.0) || !std::isfinite(delta_reg))
      fail(ErrorKind::validation, "delta_reg must be a finite value >= 0");
  }

  double p() const { return p_; }
  double nu() const { return 1.0; }
  double delta_reg() const { return delta_; }
  /// Conjugate exponent p' = p / (p - 1).
  double p_conj() const { return p_ / (p_ - 1.0); }

  PowerLaw with_delta(double delta_reg) const { return PowerLaw(p_, delta_reg); }

 private:
  double p_;
  double delta_;
};

namespace detail {

inline void check_singular(double norm_sq, const PowerLaw& law) {
  if (law.delta_reg() == 0.0 && law.p() < 2.0 && norm_sq == 0.0)
    fail(ErrorKind::singular_input, "stress: |A| = 0 with p < 2 and no regularization");
}

/// (delta^2 + s)^e with the convention 0^0 = 1.
inline double reg_pow(double delta, double norm_sq, double e) {
  const double base = delta * delta + norm_sq;
  if (e == 0.0) return 1.0;
  return std::pow(base, e);
}

}  // namespace detail

/// Effective viscosity (delta^2 + |A|^2)^((p-2)/2).
inline double effective_viscosity(const Sym2& a, const PowerLaw& law) {
  const double s = dot(a, a);
  detail::check_singular(s, law);
  return detail::reg_pow(law.delta_reg(), s, 0.5 * (law.p() - 2.0));
}

inline Sym2 stress(const Sym2& a, const PowerLaw& law) {
  return effective_viscosity(a, law) * a;
}

/// Frechet derivative of `stress` at a fixed point:
/// DS(A)[H] = mu H + beta (A:H) A.
struct StressTangent {
  double mu = 1.0;
  double beta = 0.0;
  Sym2 dir{};

  Sym2 apply(const Sym2& h) const { return mu * h + (beta * dot(dir, h)) * dir; }
  /// Bilinear form G : DS(A)[H].
  double form(const Sym2& g, const Sym2& h) const {
    return mu * dot(g, h) + beta * dot(dir, g) * dot(dir, h);
  }
};

inline StressTangent stress_tangent(const Sym2& a, const PowerLaw& law) {
  const double s = dot(a, a);
  detail::check_singular(s, law);
  const double p = law.p();
  const double d = law.delta_reg();
  StressTangent t;
  t.mu = detail::reg_pow(d, s, 0.5 * (p - 2.0));
  t.dir = a;
  if (s == 0.0 || p == 2.0) {
    t.beta = 0.0;
  } else {
    t.beta = (p - 2.0) * detail::reg_pow(d, s, 0.5 * (p - 4.0));
  }
  return t;
}

/// Shear tensor of the generalized Poiseuille flow at the lower wall:
/// off-diagonal U'(0)/2 with U'(0) = sqrt(2)^((p-2)/(p-1)).
inline double poiseuille_wall_shear(double p) {
  return std::pow(std::sqrt(2.0), (p - 2.0) / (p - 1.0));
}

inline Sym2 poiseuille_shear_tensor(double p) {
  return Sym2::shear(0.5 * poiseuille_wall_shear(p));
}

}  // namespace roughwall
