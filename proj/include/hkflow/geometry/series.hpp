#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "hkflow/geometry/curvature.hpp"
#include "hkflow/geometry/volume.hpp"
#include "hkflow/iso/iso.hpp"

namespace hkflow {

/// Measurements of one level set Gamma_t and its superlevel set.
struct FlowLevel {
  double t = 0.0;
  /// H^n of Gamma_t (length in 2D, area in 3D).
  double area = 0.0;
  /// H^{n+1} of {u >= t}.
  double volume = 0.0;
  double hn_integral = 0.0;
  double hk1_integral = 0.0;
  double iso_diff = 0.0;
  std::optional<double> iso_diff_kappa;
  /// Measure of the band {|u - t| <= h M}, M the local max of |grad u|.
  double band_measure = 0.0;
  double flagged_fraction = 0.0;
  bool closed = false;
  std::size_t elements = 0;
};

struct DroppedLevel {
  double t = 0.0;
  std::string reason;
};

/// Level-set measurements at increasing levels of an arrival-time field.
struct FlowSeries {
  int n = 1;
  double k = 1.0;
  double T = 0.0;
  double h = 0.0;
  std::optional<double> kappa;
  std::vector<FlowLevel> levels;
  std::vector<DroppedLevel> dropped;
};

struct IsoSeriesParams {
  double k = 1.0;
  /// Model-space curvature for the hyperbolic difference (n = 2 only).
  std::optional<double> kappa;
  double gradient_floor = kDefaultGradientFloor;
};

/// Levels t_j uniform on [delta, T - delta] with delta = T / (4 count).
inline std::vector<double> series_levels(double T, int count) {
  if (count < 2) throw std::invalid_argument("a series needs at least 2 levels");
  if (!(T > 0.0)) throw std::invalid_argument("field maximum must be positive");
  const double delta = T / (4.0 * count);
  std::vector<double> t(count);
  for (int j = 0; j < count; ++j) t[j] = delta + j * (T - 2.0 * delta) / (count - 1);
  return t;
}

namespace detail {

/// Local max of |grad u| over each node and its face neighbours.
inline std::vector<double> local_gradient_max(const ScalarField& grad) {
  const CartesianGrid& g = grad.grid();
  const auto& v = grad.values();
  std::vector<double> out(v.size(), std::numeric_limits<double>::quiet_NaN());
  for (std::size_t p = 0; p < v.size(); ++p) {
    if (std::isnan(v[p])) continue;
    const NodeIndex idx = g.multi(p);
    double m = v[p];
    for (int a = 0; a < g.dim(); ++a) {
      for (int side = -1; side <= 1; side += 2) {
        NodeIndex q = idx;
        q[a] += side;
        if (!g.contains(q)) continue;
        const double w = v[g.linear(q)];
        if (!std::isnan(w)) m = std::max(m, w);
      }
    }
    out[p] = m;
  }
  return out;
}

inline double band_measure(const ScalarField& u, const std::vector<double>& local_max, double t) {
  const CartesianGrid& g = u.grid();
  const DomainMask& mask = u.mask();
  const auto& v = u.values();
  const double h = g.spacing();
  double cell = 1.0;
  for (int a = 0; a < g.dim(); ++a) cell *= h;
  double total = 0.0;
  for (std::size_t p = 0; p < v.size(); ++p) {
    if (mask.is_exterior(p) || std::isnan(v[p])) continue;
    const double w = mask.volume_fraction(p);
    if (w > 0.0 && std::abs(v[p] - t) <= h * local_max[p]) total += w * cell;
  }
  return total;
}

}  // namespace detail

/// Measures the level sets of `u` at series_levels(max u, num_levels).
/// A level whose extraction fails, or whose mesh has more than 1% of its
/// vertices below the gradient floor, is dropped and recorded.
inline FlowSeries iso_series(const ScalarField& u, int num_levels, const IsoSeriesParams& params) {
  const int dim = u.grid().dim();
  const int n = dim - 1;
  if (n != 1 && n != 2) throw std::invalid_argument("series need a 2D or 3D field");
  if (params.kappa && n != 2) {
    throw std::invalid_argument("the hyperbolic difference is defined for n = 2 only");
  }
  FlowSeries s;
  s.n = n;
  s.k = params.k;
  s.T = u.max_inside();
  s.h = u.grid().spacing();
  s.kappa = params.kappa;
  const std::vector<double> ts = series_levels(s.T, num_levels);

  const CurvatureField curvature(u, params.gradient_floor);
  const std::vector<double> local_max = detail::local_gradient_max(gradient_magnitude(u));
  for (double t : ts) {
    ContourMesh mesh;
    try {
      mesh = extract_level_set(u, t);
    } catch (const EmptyLevelSet& e) {
      s.dropped.push_back({t, e.what()});
      continue;
    }
    const VertexCurvature vc = sample_vertices(curvature, mesh);
    if (vc.flagged_fraction() > 0.01) {
      s.dropped.push_back({t, DegenerateGradient(vc.flagged_fraction()).what()});
      continue;
    }
    FlowLevel L;
    L.t = t;
    L.area = mesh_measure(mesh);
    L.volume = enclosed_volume(u, t);
    L.hn_integral = curvature_integral(mesh, vc, n);
    L.hk1_integral = curvature_integral(mesh, vc, params.k + 1.0);
    L.iso_diff = iso_difference(L.area, L.volume, n);
    if (params.kappa) {
      L.iso_diff_kappa = hyperbolic_iso_difference(L.area, L.volume, {*params.kappa});
    }
    L.band_measure = detail::band_measure(u, local_max, t);
    L.flagged_fraction = vc.flagged_fraction();
    L.closed = mesh.closed;
    L.elements = mesh.elements.size();
    s.levels.push_back(std::move(L));
  }
  return s;
}

struct CoareaReport {
  /// Integral of |grad u| over the domain.
  double gradient_integral = 0.0;
  /// Trapezoid rule of the level-set measure over [0, T].
  double level_integral = 0.0;
  double relative_error = 0.0;
};

/// Compares both sides of the coarea formula using `levels` intervals.
inline CoareaReport coarea_check(const ScalarField& u, int levels = 64) {
  if (levels < 1) throw std::invalid_argument("coarea check needs at least one interval");
  const double T = u.max_inside();
  CoareaReport r;
  r.gradient_integral = integrate_interior(gradient_magnitude(u));
  const double dt = T / levels;
  double sum = 0.0;
  for (int i = 0; i <= levels; ++i) {
    // The lowest level sits just above the Dirichlet value.
    const double t = i == 0 ? 1e-9 * T : i * dt;
    double m = 0.0;
    if (i < levels) {
      try {
        m = mesh_measure(extract_level_set(u, t));
      } catch (const EmptyLevelSet&) {
        m = 0.0;
      }
    }
    sum += (i == 0 || i == levels ? 0.5 : 1.0) * m;
  }
  r.level_integral = sum * dt;
  r.relative_error = std::abs(r.level_integral - r.gradient_integral) / r.gradient_integral;
  return r;
}

/// Least-squares slope of log|V_i - V_j| against log|t_i - t_j| over all
/// pairs of levels: the observed Hoelder exponent of t -> V(t).
inline double holder_exponent(const FlowSeries& s) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int m = 0;
  for (std::size_t i = 0; i < s.levels.size(); ++i) {
    for (std::size_t j = i + 1; j < s.levels.size(); ++j) {
      const double dt = std::abs(s.levels[j].t - s.levels[i].t);
      const double dv = std::abs(s.levels[j].volume - s.levels[i].volume);
      if (!(dt > 0.0) || !(dv > 0.0)) continue;
      const double x = std::log(dt), y = std::log(dv);
      sx += x;
      sy += y;
      sxx += x * x;
      sxy += x * y;
      ++m;
    }
  }
  if (m < 2) throw std::invalid_argument("not enough level pairs for a fit");
  return (m * sxy - sx * sy) / (m * sxx - sx * sx);
}

}  // namespace hkflow
