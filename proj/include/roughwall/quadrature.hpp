#pragma once

#include <array>
#include <cmath>
#include <span>

namespace roughwall::quad {

/// Quadrature point on the reference triangle (0,0),(1,0),(0,1); weights sum to 1/2.
struct TriPoint {
  double xi;
  double eta;
  double w;
};

/// Dunavant degree-4 rule.
inline std::span<const TriPoint> triangle_degree4() {
  static constexpr double a1 = 0.445948490915965, b1 = 0.108103018168070;
  static constexpr double a2 = 0.091576213509771, b2 = 0.816847572980459;
  static constexpr double w1 = 0.5 * 0.223381589678011, w2 = 0.5 * 0.109951743655322;
  static const std::array<TriPoint, 6> pts{{
      {a1, a1, w1}, {a1, b1, w1}, {b1, a1, w1},
      {a2, a2, w2}, {a2, b2, w2}, {b2, a2, w2},
  }};
  return pts;
}

/// Radon degree-5 rule.
inline std::span<const TriPoint> triangle_degree5() {
  static const double s15 = std::sqrt(15.0);
  static const double a1 = (6.0 - s15) / 21.0, b1 = (9.0 + 2.0 * s15) / 21.0;
  static const double a2 = (6.0 + s15) / 21.0, b2 = (9.0 - 2.0 * s15) / 21.0;
  static const double w1 = 0.5 * (155.0 - s15) / 1200.0, w2 = 0.5 * (155.0 + s15) / 1200.0;
  static const std::array<TriPoint, 7> pts{{
      {1.0 / 3.0, 1.0 / 3.0, 0.5 * 9.0 / 40.0},
      {a1, a1, w1}, {a1, b1, w1}, {b1, a1, w1},
      {a2, a2, w2}, {a2, b2, w2}, {b2, a2, w2},
  }};
  return pts;
}

/// Gauss-Legendre point on [0, 1].
struct LinePoint {
  double s;
  double w;
};

/// Four-point Gauss-Legendre on [0,1], exact to degree 7.
inline std::span<const LinePoint> line_gauss4() {
  static const double c1 = std::sqrt(3.0 / 7.0 - 2.0 / 7.0 * std::sqrt(6.0 / 5.0));
  static const double c2 = std::sqrt(3.0 / 7.0 + 2.0 / 7.0 * std::sqrt(6.0 / 5.0));
  static const double w1 = (18.0 + std::sqrt(30.0)) / 36.0;
  static const double w2 = (18.0 - std::sqrt(30.0)) / 36.0;
  static const std::array<LinePoint, 4> pts{{
      {0.5 * (1.0 - c2), 0.5 * w2},
      {0.5 * (1.0 - c1), 0.5 * w1},
      {0.5 * (1.0 + c1), 0.5 * w1},
      {0.5 * (1.0 + c2), 0.5 * w2},
  }};
  return pts;
}

namespace detail {

// Gauss-Kronrod (7, 15) nodes and weights on [-1, 1].
inline constexpr std::array<double, 8> kXgk{
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
inline constexpr std::array<double, 8> kWgk{
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
inline constexpr std::array<double, 4> kWg{
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

template <class F>
void gk15(F&& f, double a, double b, double& result, double& err) {
  const double c = 0.5 * (a + b);
  const double h = 0.5 * (b - a);
  const double fc = f(c);
  double rk = fc * kWgk[7];
  double rg = fc * kWg[3];
  for (int j = 0; j < 7; ++j) {
    const double dx = h * kXgk[j];
    const double f1 = f(c - dx);
    const double f2 = f(c + dx);
    rk += kWgk[j] * (f1 + f2);
    if (j % 2 == 1) rg += kWg[j / 2] * (f1 + f2);
  }
  result = rk * h;
  err = std::abs((rk - rg) * h);
}

template <class F>
double adaptive(F& f, double a, double b, double tol, int depth, double whole, double whole_err) {
  if (whole_err <= tol || depth <= 0) return whole;
  const double m = 0.5 * (a + b);
  double l, le, r, re;
  gk15(f, a, m, l, le);
  gk15(f, m, b, r, re);
  return adaptive(f, a, m, 0.5 * tol, depth - 1, l, le) +
         adaptive(f, m, b, 0.5 * tol, depth - 1, r, re);
}

}  // namespace detail

/// Adaptive Gauss-Kronrod (7,15) integration to an absolute tolerance.
template <class F>
double integrate(F&& f, double a, double b, double abs_tol = 1e-12, int max_depth = 40) {
  if (a == b) return 0.0;
  double r, e;
  detail::gk15(f, a, b, r, e);
  return detail::adaptive(f, a, b, abs_tol, max_depth, r, e);
}

}  // namespace roughwall::quad
