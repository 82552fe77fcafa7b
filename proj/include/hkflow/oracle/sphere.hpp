#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace hkflow {

/// Round sphere of radius R0 in R^{n+1} moving by H^k.
struct SphereState {
  double R0 = 1.0;
  int n = 1;
  double k = 1.0;

  void validate() const {
    if (!(R0 > 0.0) || !std::isfinite(R0)) throw std::invalid_argument("R0 must be positive");
    if (n < 1) throw std::invalid_argument("n must be at least 1");
    if (!(k >= 1.0) || !std::isfinite(k)) throw std::invalid_argument("k must be at least 1");
  }
};

/// T = R0^{k+1} / ((k+1) n^k).
inline double extinction_time(const SphereState& s) {
  s.validate();
  return std::pow(s.R0, s.k + 1.0) / ((s.k + 1.0) * std::pow(s.n, s.k));
}

/// R(t) = (R0^{k+1} - (k+1) n^k t)^{1/(k+1)}, the solution of dR/dt = -(n/R)^k.
inline double sphere_radius(const SphereState& s, double t) {
  const double T = extinction_time(s);
  if (!(t >= 0.0) || t > T * (1.0 + 1e-14)) {
    throw std::domain_error("time outside [0, extinction time]");
  }
  const double base = std::pow(s.R0, s.k + 1.0) - (s.k + 1.0) * std::pow(s.n, s.k) * t;
  return std::pow(std::max(base, 0.0), 1.0 / (s.k + 1.0));
}

/// Arrival time of the sphere flow at distance r from the centre (r <= R0).
inline double sphere_arrival_time(const SphereState& s, double r) {
  s.validate();
  if (!(r >= 0.0) || r > s.R0) throw std::domain_error("radius outside [0, R0]");
  return (std::pow(s.R0, s.k + 1.0) - std::pow(r, s.k + 1.0)) /
         ((s.k + 1.0) * std::pow(s.n, s.k));
}

}  // namespace hkflow
