#pragma once

// Periodic roughness profiles gamma(y1) with period 1 and values in (-1, 0).

#include <cmath>
#include <numbers>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "roughwall/error.hpp"

namespace roughwall {

enum class PatternKind { flat, sinusoid, polyline_smoothed, fourier };

inline std::string_view to_string(PatternKind k) {
  switch (k) {
    case PatternKind::flat: return "flat";
    case PatternKind::sinusoid: return "sinusoid";
    case PatternKind::polyline_smoothed: return "polyline-smoothed";
    case PatternKind::fourier: return "fourier";
  }
  return "?";
}

inline PatternKind parse_pattern_kind(std::string_view s) {
  if (s == "flat") return PatternKind::flat;
  if (s == "sinusoid") return PatternKind::sinusoid;
  if (s == "polyline-smoothed" || s == "polyline") return PatternKind::polyline_smoothed;
  if (s == "fourier") return PatternKind::fourier;
  fail(ErrorKind::validation, "unknown pattern kind '" + std::string(s) + "'");
}

class RoughnessPattern {
 public:
  /// gamma = -depth.
  static RoughnessPattern flat(double depth) {
    RoughnessPattern g(PatternKind::flat, {depth});
    g.mean_ = -depth;
    g.validate();
    return g;
  }

  /// gamma = mean + amplitude cos(2 pi y1).
  static RoughnessPattern sinusoid(double mean, double amplitude) {
    RoughnessPattern g(PatternKind::sinusoid, {mean, amplitude});
    g.mean_ = mean;
    g.cos_ = {amplitude};
    g.sin_ = {0.0};
    g.validate();
    return g;
  }

  /// gamma = mean + sum_k cos_k cos(2 pi k y1) + sin_k sin(2 pi k y1), k = 1..K.
  static RoughnessPattern fourier(double mean, std::vector<double> cos_coeffs, std::vector<double> sin_coeffs) {
    require(cos_coeffs.size() == sin_coeffs.size(), ErrorKind::validation,
            "fourier pattern: cosine and sine coefficient lists differ in length");
    std::vector<double> params{mean};
    params.insert(params.end(), cos_coeffs.begin(), cos_coeffs.end());
    params.insert(params.end(), sin_coeffs.begin(), sin_coeffs.end());
    RoughnessPattern g(PatternKind::fourier, std::move(params));
    g.mean_ = mean;
    g.cos_ = std::move(cos_coeffs);
    g.sin_ = std::move(sin_coeffs);
    g.validate();
    return g;
  }

  /// Periodic cubic spline through values sampled at y1 = i / n, i = 0..n-1.
  static RoughnessPattern polyline_smoothed(std::vector<double> values) {
    require(values.size() >= 3, ErrorKind::validation, "polyline pattern needs at least 3 points");
    RoughnessPattern g(PatternKind::polyline_smoothed, values);
    g.knots_ = std::move(values);
    g.build_spline();
    g.validate();
    return g;
  }

  /// Dispatch on kind with the flat parameter list used by configs.
  static RoughnessPattern make(PatternKind kind, const std::vector<double>& params) {
    switch (kind) {
      case PatternKind::flat:
        require(params.size() == 1, ErrorKind::validation, "flat pattern takes [depth]");
        return flat(params[0]);
      case PatternKind::sinusoid:
        require(params.size() == 2, ErrorKind::validation, "sinusoid pattern takes [mean, amplitude]");
        return sinusoid(params[0], params[1]);
      case PatternKind::fourier: {
        require(params.size() >= 1 && params.size() % 2 == 1, ErrorKind::validation,
                "fourier pattern takes [mean, c1..cK, s1..sK]");
        const std::size_t k = (params.size() - 1) / 2;
        return fourier(params[0], {params.begin() + 1, params.begin() + 1 + static_cast<long>(k)},
                       {params.begin() + 1 + static_cast<long>(k), params.end()});
      }
      case PatternKind::polyline_smoothed:
        return polyline_smoothed(params);
    }
    fail(ErrorKind::validation, "unknown pattern kind");
  }

  PatternKind kind() const { return kind_; }
  const std::vector<double>& params() const { return params_; }
  double period() const { return 1.0; }
  bool is_flat() const { return kind_ == PatternKind::flat; }

  double value(double y1) const { return eval(y1, 0); }
  double derivative(double y1) const { return eval(y1, 1); }
  double second_derivative(double y1) const { return eval(y1, 2); }

  double min_value() const { return min_; }
  double max_value() const { return max_; }
  /// Largest |gamma'| over a dense sample.
  double max_slope() const { return max_slope_; }
  /// Mean of gamma over one period.
  double mean_value() const { return mean_; }

  bool operator==(const RoughnessPattern& o) const { return kind_ == o.kind_ && params_ == o.params_; }

  std::string describe() const {
    std::ostringstream os;
    os << to_string(kind_) << "[";
    for (std::size_t i = 0; i < params_.size(); ++i) os << (i ? "," : "") << params_[i];
    os << "]";
    return os.str();
  }

 private:
  RoughnessPattern(PatternKind kind, std::vector<double> params) : kind_(kind), params_(std::move(params)) {}

  static double wrap(double y) { return y - std::floor(y); }

  double eval(double y1, int order) const {
    constexpr double tau = 2.0 * std::numbers::pi;
    switch (kind_) {
      case PatternKind::flat:
        return order == 0 ? mean_ : 0.0;
      case PatternKind::sinusoid:
      case PatternKind::fourier: {
        double s = order == 0 ? mean_ : 0.0;
        for (std::size_t k = 0; k < cos_.size(); ++k) {
          const double w = tau * static_cast<double>(k + 1);
          const double c = std::cos(w * y1), sn = std::sin(w * y1);
          if (order == 0) s += cos_[k] * c + sin_[k] * sn;
          else if (order == 1) s += w * (-cos_[k] * sn + sin_[k] * c);
          else s += -w * w * (cos_[k] * c + sin_[k] * sn);
        }
        return s;
      }
      case PatternKind::polyline_smoothed: {
        const auto n = knots_.size();
        const double hh = 1.0 / static_cast<double>(n);
        const double y = wrap(y1);
        auto i = static_cast<std::size_t>(std::floor(y / hh));
        if (i >= n) i = n - 1;
        const std::size_t j = (i + 1) % n;
        const double t = y - static_cast<double>(i) * hh;
        const double a = knots_[i], b = knots_[j], ma = moments_[i], mb = moments_[j];
        const double u = hh - t;
        if (order == 0)
          return ma * u * u * u / (6 * hh) + mb * t * t * t / (6 * hh) + (a / hh - ma * hh / 6) * u +
                 (b / hh - mb * hh / 6) * t;
        if (order == 1)
          return -ma * u * u / (2 * hh) + mb * t * t / (2 * hh) - (a / hh - ma * hh / 6) + (b / hh - mb * hh / 6);
        return ma * u / hh + mb * t / hh;
      }
    }
    return 0.0;
  }

  // Second-derivative moments of the periodic interpolating cubic (cyclic tridiagonal solve).
  void build_spline() {
    const std::size_t n = knots_.size();
    const double hh = 1.0 / static_cast<double>(n);
    std::vector<double> rhs(n);
    for (std::size_t i = 0; i < n; ++i) {
      const double prev = knots_[(i + n - 1) % n], next = knots_[(i + 1) % n];
      rhs[i] = 6.0 * (next - 2.0 * knots_[i] + prev) / (hh * hh);
    }
    // (M_{i-1} + 4 M_i + M_{i+1}) = rhs_i, solved by Sherman-Morrison on a tridiagonal core.
    const double gamma = -4.0;
    std::vector<double> diag(n, 4.0), lower(n, 1.0), upper(n, 1.0);
    diag[0] -= gamma;
    diag[n - 1] -= 1.0 / gamma;
    auto solve_tri = [&](std::vector<double> d) {
      std::vector<double> c(n), dd(diag);
      for (std::size_t i = 1; i < n; ++i) {
        const double m = lower[i] / dd[i - 1];
        dd[i] -= m * upper[i - 1];
        d[i] -= m * d[i - 1];
      }
      c[n - 1] = d[n - 1] / dd[n - 1];
      for (std::size_t i = n - 1; i-- > 0;) c[i] = (d[i] - upper[i] * c[i + 1]) / dd[i];
      return c;
    };
    std::vector<double> u(n, 0.0);
    u[0] = gamma;
    u[n - 1] = 1.0;
    const auto x = solve_tri(rhs);
    const auto z = solve_tri(u);
    const double fact = (x[0] + x[n - 1] / gamma) / (1.0 + z[0] + z[n - 1] / gamma);
    moments_.resize(n);
    for (std::size_t i = 0; i < n; ++i) moments_[i] = x[i] - fact * z[i];
  }

  void validate() {
    constexpr int samples = 8192;
    min_ = 1e300;
    max_ = -1e300;
    max_slope_ = 0.0;
    double s = 0.0;
    for (int i = 0; i < samples; ++i) {
      const double y = static_cast<double>(i) / samples;
      const double v = value(y);
      s += v;
      min_ = std::min(min_, v);
      max_ = std::max(max_, v);
      max_slope_ = std::max(max_slope_, std::abs(derivative(y)));
    }
    if (kind_ == PatternKind::sinusoid) {
      min_ = mean_ - std::abs(cos_[0]);
      max_ = mean_ + std::abs(cos_[0]);
    }
    // Uniform sampling integrates trigonometric and spline patterns to well below 1e-12.
    if (kind_ == PatternKind::polyline_smoothed) mean_ = s / samples;
    if (!(min_ > -1.0 && max_ < 0.0)) {
      std::ostringstream os;
      os << "roughness pattern " << describe() << " leaves (-1, 0): range [" << min_ << ", " << max_ << "]";
      fail(ErrorKind::range, os.str());
    }
  }

  PatternKind kind_;
  std::vector<double> params_;
  double mean_ = 0.0;
  std::vector<double> cos_, sin_;
  std::vector<double> knots_, moments_;
  double min_ = 0.0, max_ = 0.0, max_slope_ = 0.0;
};

}  // namespace roughwall
