#pragma once

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "hkflow/geometry/series.hpp"

namespace hkflow {

/// Support function of a convex plane curve sampled at M uniform angles
/// theta_i = 2 pi i / M, at time t.
struct SupportFunction {
  std::vector<double> h;
  double t = 0.0;

  std::size_t size() const { return h.size(); }

  void validate() const {
    const std::size_t m = h.size();
    if (m < 64 || (m & (m - 1)) != 0) {
      throw std::invalid_argument("support function needs a power-of-two size >= 64");
    }
    for (double x : h) {
      if (!std::isfinite(x)) throw std::invalid_argument("support function is not finite");
    }
  }
};

/// A step produced a nonpositive radius of curvature.
class ConvexityLost : public std::runtime_error {
 public:
  explicit ConvexityLost(double t) : std::runtime_error(message(t)), t_(t) {}
  double time() const { return t_; }

 private:
  static std::string message(double t) {
    std::ostringstream ss;
    ss << "convexity lost at t = " << t;
    return ss.str();
  }
  double t_;
};

inline SupportFunction circle_support(double radius, std::size_t m) {
  SupportFunction s{std::vector<double>(m, radius), 0.0};
  s.validate();
  return s;
}

/// h(theta) = sqrt(a^2 cos^2 theta + b^2 sin^2 theta).
inline SupportFunction ellipse_support(double a, double b, std::size_t m) {
  SupportFunction s;
  s.h.resize(m);
  for (std::size_t i = 0; i < m; ++i) {
    const double th = 2.0 * std::numbers::pi * i / m;
    const double c = std::cos(th), d = std::sin(th);
    s.h[i] = std::sqrt(a * a * c * c + b * b * d * d);
  }
  s.validate();
  return s;
}

/// Spectral second derivative on a periodic uniform grid, with FFTW plans
/// made once per size.
class SpectralSecondDerivative {
 public:
  explicit SpectralSecondDerivative(std::size_t m) : m_(m) {
    real_ = fftw_alloc_real(m);
    spec_ = fftw_alloc_complex(m / 2 + 1);
    const int n = static_cast<int>(m);
    forward_ = fftw_plan_dft_r2c_1d(n, real_, spec_, FFTW_ESTIMATE);
    backward_ = fftw_plan_dft_c2r_1d(n, spec_, real_, FFTW_ESTIMATE);
  }
  ~SpectralSecondDerivative() {
    fftw_destroy_plan(forward_);
    fftw_destroy_plan(backward_);
    fftw_free(real_);
    fftw_free(spec_);
  }
  SpectralSecondDerivative(const SpectralSecondDerivative&) = delete;
  SpectralSecondDerivative& operator=(const SpectralSecondDerivative&) = delete;

  void apply(const std::vector<double>& f, std::vector<double>& out) {
    std::copy(f.begin(), f.end(), real_);
    fftw_execute(forward_);
    for (std::size_t j = 0; j <= m_ / 2; ++j) {
      const double w = -static_cast<double>(j * j) / static_cast<double>(m_);
      spec_[j][0] *= w;
      spec_[j][1] *= w;
    }
    fftw_execute(backward_);
    out.assign(real_, real_ + m_);
  }

 private:
  std::size_t m_;
  double* real_ = nullptr;
  fftw_complex* spec_ = nullptr;
  fftw_plan forward_ = nullptr;
  fftw_plan backward_ = nullptr;
};

/// Radii of curvature rho = h + h''.
inline std::vector<double> radii_of_curvature(const SupportFunction& s) {
  s.validate();
  SpectralSecondDerivative d2(s.size());
  std::vector<double> rho;
  d2.apply(s.h, rho);
  for (std::size_t i = 0; i < rho.size(); ++i) rho[i] += s.h[i];
  return rho;
}

struct SupportGeometry {
  double length = 0.0;
  double area = 0.0;
  std::vector<double> rho;
  double dtheta = 0.0;

  /// Integral of kappa^p ds = integral of rho^{1-p} dtheta.
  double curvature_integral(double p) const {
    double s = 0.0;
    for (double r : rho) s += std::pow(r, 1.0 - p);
    return s * dtheta;
  }
  double iso_diff() const { return length * length - 4.0 * std::numbers::pi * area; }
  double min_rho() const { return *std::min_element(rho.begin(), rho.end()); }
};

/// L = int rho, A = (1/2) int h rho, by the trapezoid rule in theta.
inline SupportGeometry support_geometry(const SupportFunction& s) {
  SupportGeometry g;
  g.rho = radii_of_curvature(s);
  g.dtheta = 2.0 * std::numbers::pi / s.size();
  for (std::size_t i = 0; i < s.size(); ++i) {
    g.length += g.rho[i];
    g.area += 0.5 * s.h[i] * g.rho[i];
  }
  g.length *= g.dtheta;
  g.area *= g.dtheta;
  return g;
}

struct SupportRunOptions {
  /// Fraction of the explicit stability bound dtheta^2 rho_min^{k+1} / k
  /// used as the substep cap.
  double cfl = 0.25;
  double min_rho = 1e-6;
  std::int64_t max_substeps = 50'000'000;
};

struct SupportRun {
  /// States at t = 0, dt, 2 dt, ... and the final state.
  std::vector<SupportFunction> states;
  bool halted = false;
  std::string halt_reason;
  std::int64_t substeps = 0;
};

/// Evolves dh/dt = -rho^{-k}, rho = h + h'', by classical RK4 with spectral
/// differentiation in theta. States are recorded every `dt`; each interval
/// is covered by substeps below the stability cap. Stops early when the
/// smallest radius of curvature drops below options.min_rho.
inline SupportRun evolve_support(const SupportFunction& h0, double k, double t_end, double dt,
                                 const SupportRunOptions& options = {}) {
  h0.validate();
  if (!(k >= 1.0)) throw std::invalid_argument("k must be at least 1");
  if (!(dt > 0.0) || !(t_end >= h0.t)) throw std::invalid_argument("invalid time stepping");
  const std::size_t m = h0.size();
  const double dtheta = 2.0 * std::numbers::pi / m;
  SpectralSecondDerivative d2(m);
  std::vector<double> rho(m);

  double rho_min = 0.0;
  auto speed = [&](const std::vector<double>& h, std::vector<double>& out) {
    d2.apply(h, rho);
    rho_min = rho[0] + h[0];
    out.resize(m);
    for (std::size_t i = 0; i < m; ++i) {
      const double r = rho[i] + h[i];
      rho_min = std::min(rho_min, r);
      out[i] = r > 0.0 ? -std::pow(r, -k) : 0.0;
    }
  };

  SupportRun run;
  SupportFunction cur = h0;
  run.states.push_back(cur);
  std::vector<double> k1, k2, k3, k4, tmp(m);
  std::int64_t outputs = 1;
  auto output_time = [&] {
    const double t = h0.t + static_cast<double>(outputs) * dt;
    return t_end - t < 1e-9 * dt ? t_end : std::min(t, t_end);
  };
  double next_output = output_time();
  while (cur.t < t_end) {
    speed(cur.h, k1);
    if (rho_min <= 0.0) throw ConvexityLost(cur.t);
    if (rho_min < options.min_rho) {
      run.halted = true;
      run.halt_reason = "minimum radius of curvature below threshold";
      break;
    }
    if (run.substeps >= options.max_substeps) {
      run.halted = true;
      run.halt_reason = "substep limit reached";
      break;
    }
    const double cap = options.cfl * dtheta * dtheta * std::pow(rho_min, k + 1.0) / k;
    const double target = next_output;
    const double step = std::min(cap, target - cur.t);
    for (std::size_t i = 0; i < m; ++i) tmp[i] = cur.h[i] + 0.5 * step * k1[i];
    speed(tmp, k2);
    for (std::size_t i = 0; i < m; ++i) tmp[i] = cur.h[i] + 0.5 * step * k2[i];
    speed(tmp, k3);
    for (std::size_t i = 0; i < m; ++i) tmp[i] = cur.h[i] + step * k3[i];
    speed(tmp, k4);
    for (std::size_t i = 0; i < m; ++i) {
      cur.h[i] += step / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    cur.t = step == target - cur.t ? target : cur.t + step;
    ++run.substeps;
    if (cur.t >= target) {
      run.states.push_back(cur);
      ++outputs;
      next_output = output_time();
    }
  }
  if (run.halted && run.states.back().t != cur.t) run.states.push_back(cur);
  return run;
}

/// Series of a support-function run in the flow-series layout: area is the
/// length, volume the enclosed area, and the curvature integrals are
/// int kappa ds and int kappa^{k+1} ds.
inline FlowSeries support_series(const SupportRun& run, double k) {
  FlowSeries s;
  s.n = 1;
  s.k = k;
  for (const auto& state : run.states) {
    const SupportGeometry g = support_geometry(state);
    FlowLevel L;
    L.t = state.t;
    L.area = g.length;
    L.volume = g.area;
    L.hn_integral = g.curvature_integral(1.0);
    L.hk1_integral = g.curvature_integral(k + 1.0);
    L.iso_diff = g.iso_diff();
    L.closed = true;
    L.elements = state.size();
    s.levels.push_back(std::move(L));
  }
  if (!run.states.empty()) s.T = run.states.back().t;
  return s;
}

}  // namespace hkflow
