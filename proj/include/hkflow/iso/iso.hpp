#pragma once

#include <cmath>
#include <functional>
#include <numbers>
#include <stdexcept>

namespace hkflow {

/// Model space of constant sectional curvature -kappa; kappa = 0 is flat.
struct ModelSpaceParams {
  double kappa = 0.0;

  void validate() const {
    if (!(kappa >= 0.0) || !std::isfinite(kappa)) {
      throw std::invalid_argument("model-space kappa must be finite and nonnegative");
    }
  }
};

/// Euclidean isoperimetric constant c_{n+1} = ((n+1)^{n+1} omega_{n+1})^{1/n}
/// for hypersurfaces of dimension n in R^{n+1}: 4 pi (n = 1), 6 sqrt(pi) (n = 2).
inline double iso_constant(int n) {
  double omega = 0.0;
  if (n == 1) {
    omega = std::numbers::pi;
  } else if (n == 2) {
    omega = 4.0 * std::numbers::pi / 3.0;
  } else {
    throw std::invalid_argument("isoperimetric constant is available for n = 1 and n = 2");
  }
  return std::pow(std::pow(n + 1.0, n + 1.0) * omega, 1.0 / n);
}

/// Lower bound ((n/(n+1)) c_{n+1})^n for the integral of |H|^n over a
/// closed hypersurface: 2 pi (n = 1), 16 pi (n = 2).
inline double curvature_lower_bound(int n) {
  return std::pow(n / (n + 1.0) * iso_constant(n), n);
}

/// A^{(n+1)/n} - c_{n+1} V.
inline double iso_difference(double area, double volume, int n) {
  if (area < 0.0 || volume < 0.0) {
    throw std::invalid_argument("area and volume must be nonnegative");
  }
  return std::pow(area, (n + 1.0) / n) - iso_constant(n) * volume;
}

namespace detail {

inline double simpson_step(const std::function<double(double)>& f, double a, double fa, double b,
                           double fb, double m, double fm, double whole, double tol, int depth) {
  const double lm = 0.5 * (a + m);
  const double rm = 0.5 * (m + b);
  const double flm = f(lm);
  const double frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double delta = left + right - whole;
  if (depth <= 0 || std::abs(delta) <= 15.0 * tol) return left + right + delta / 15.0;
  return simpson_step(f, a, fa, m, fm, lm, flm, left, 0.5 * tol, depth - 1) +
         simpson_step(f, m, fm, b, fb, rm, frm, right, 0.5 * tol, depth - 1);
}

}  // namespace detail

/// Adaptive Simpson quadrature of f over [a, b] to absolute tolerance `tol`.
inline double adaptive_simpson(const std::function<double(double)>& f, double a, double b,
                               double tol = 1e-10, int max_depth = 50) {
  if (a == b) return 0.0;
  const double m = 0.5 * (a + b);
  const double fa = f(a), fb = f(b), fm = f(m);
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  return detail::simpson_step(f, a, fa, b, fb, m, fm, whole, tol, max_depth);
}

/// f_kappa(A) = int_0^A sqrt(a) / sqrt(16 pi + 4 kappa a) da by quadrature,
/// after the substitution a = s^2 (smooth integrand 2 s^2 / sqrt(16 pi + 4 kappa s^2)).
inline double f_kappa_quadrature(double area, const ModelSpaceParams& params,
                                 double tol = 1e-10) {
  params.validate();
  if (area < 0.0) throw std::invalid_argument("area must be nonnegative");
  const double kappa = params.kappa;
  auto integrand = [kappa](double s) {
    return 2.0 * s * s / std::sqrt(16.0 * std::numbers::pi + 4.0 * kappa * s * s);
  };
  return adaptive_simpson(integrand, 0.0, std::sqrt(area), tol);
}

/// f_kappa(A); closed form A^{3/2} / (6 sqrt(pi)) when kappa = 0.
inline double f_kappa(double area, const ModelSpaceParams& params, double tol = 1e-10) {
  params.validate();
  if (area < 0.0) throw std::invalid_argument("area must be nonnegative");
  if (params.kappa == 0.0) return std::pow(area, 1.5) / iso_constant(2);
  return f_kappa_quadrature(area, params, tol);
}

/// f_kappa(A) - V.
inline double hyperbolic_iso_difference(double area, double volume,
                                        const ModelSpaceParams& params) {
  if (area < 0.0 || volume < 0.0) {
    throw std::invalid_argument("area and volume must be nonnegative");
  }
  return f_kappa(area, params) - volume;
}

struct SphereMeasures {
  double area = 0.0;
  double volume = 0.0;
};

/// Area and enclosed volume of the geodesic sphere of radius r in the
/// three-dimensional model space; the volume is integrated numerically.
inline SphereMeasures geodesic_sphere(const ModelSpaceParams& params, double r,
                                      double tol = 1e-12) {
  params.validate();
  if (!(r > 0.0)) throw std::invalid_argument("geodesic radius must be positive");
  if (!(params.kappa > 0.0)) throw std::invalid_argument("geodesic spheres need kappa > 0");
  const double sk = std::sqrt(params.kappa);
  auto area_at = [&](double s) {
    const double sh = std::sinh(sk * s);
    return 4.0 * std::numbers::pi * sh * sh / params.kappa;
  };
  return {area_at(r), adaptive_simpson(area_at, 0.0, r, tol)};
}

}  // namespace hkflow
