#pragma once

#include <cassert>
#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>
#include <utility>
#include <vector>

#include "hkflow/field/discretization.hpp"

namespace hkflow {

/// Value stored at exterior nodes. Operators never read it.
inline constexpr double kExteriorSentinel = std::numeric_limits<double>::quiet_NaN();

/// Grid function on a discretized domain. Values are finite on interior and
/// boundary-band nodes; exterior nodes hold the sentinel.
class ScalarField {
 public:
  ScalarField() = default;

  ScalarField(DiscretizationPtr disc, std::vector<double> values)
      : disc_(std::move(disc)), values_(std::move(values)) {
    if (!disc_ || values_.size() != disc_->grid.size()) {
      throw std::invalid_argument("field size does not match its grid");
    }
  }

  const DiscretizationPtr& discretization() const { return disc_; }
  const CartesianGrid& grid() const { return disc_->grid; }
  const DomainMask& mask() const { return disc_->mask; }
  const std::vector<double>& values() const { return values_; }
  std::size_t size() const { return values_.size(); }

  double operator[](std::size_t node) const {
    assert(!disc_->mask.is_exterior(node));
    return values_[node];
  }

  /// Largest value over inside nodes (the arrival time T for a solution).
  double max_inside() const {
    double m = -std::numeric_limits<double>::infinity();
    for (std::size_t p : disc_->mask.unknowns()) m = std::max(m, values_[p]);
    return m;
  }

  double min_inside() const {
    double m = std::numeric_limits<double>::infinity();
    for (std::size_t p : disc_->mask.unknowns()) m = std::min(m, values_[p]);
    return m;
  }

 private:
  DiscretizationPtr disc_;
  std::vector<double> values_;
};

/// Field with `fn(x)` at every non-exterior node.
inline ScalarField sample_field(const DiscretizationPtr& disc,
                                const std::function<double(const Coord&)>& fn) {
  std::vector<double> v(disc->grid.size(), kExteriorSentinel);
  for (std::size_t p = 0; p < v.size(); ++p) {
    if (!disc->mask.is_exterior(p)) v[p] = fn(disc->grid.position(p));
  }
  return ScalarField(disc, std::move(v));
}

inline ScalarField constant_field(const DiscretizationPtr& disc, double c) {
  return sample_field(disc, [c](const Coord&) { return c; });
}

/// Writes the Dirichlet ghost values (zero on the boundary) into the
/// outside band nodes of `values`, given the inside node values.
inline void apply_dirichlet(const DomainMask& mask, std::vector<double>& values) {
  const auto& ghosts = mask.ghosts();
  for (std::size_t g = 0; g < ghosts.size(); ++g) {
    double v = 0.0;
    for (const GhostTerm& t : mask.ghost_terms(g)) v += t.weight * values[t.node];
    values[ghosts[g]] = v;
  }
}

/// Field from inside-node values with Dirichlet ghosts filled in.
inline ScalarField dirichlet_field(const DiscretizationPtr& disc,
                                   const std::function<double(const Coord&)>& fn) {
  std::vector<double> v(disc->grid.size(), kExteriorSentinel);
  for (std::size_t p = 0; p < v.size(); ++p) {
    if (disc->mask.node_class(p) == NodeClass::boundary_band) v[p] = 0.0;
  }
  for (std::size_t p : disc->mask.unknowns()) v[p] = fn(disc->grid.position(p));
  apply_dirichlet(disc->mask, v);
  return ScalarField(disc, std::move(v));
}

namespace detail {

// Derivative at 0 of the quadratic through (-a, fm), (0, f0), (b, fp).
inline double three_point_derivative(double a, double fm, double f0, double b,
                                     double fp) {
  return -b / (a * (a + b)) * fm + (b - a) / (a * b) * f0 + a / (b * (a + b)) * fp;
}

}  // namespace detail

/// Finite-difference gradient at a node. Central differences, except that
/// an edge from an inside node crossing the boundary is replaced by the
/// Dirichlet cut point (value 0) at its interpolated location.
inline Coord fd_gradient(const ScalarField& u, std::size_t node) {
  const CartesianGrid& grid = u.grid();
  const DomainMask& mask = u.mask();
  if (mask.is_exterior(node)) {
    throw std::invalid_argument("gradient requested at an exterior node");
  }
  const NodeIndex idx = grid.multi(node);
  const double h = grid.spacing();
  const bool inside = mask.is_inside(node);
  const auto& vals = u.values();
  Coord g{};
  for (int a = 0; a < grid.dim(); ++a) {
    double offset[2];
    double value[2];
    for (int side = 0; side < 2; ++side) {
      NodeIndex q = idx;
      q[a] += side == 0 ? -1 : 1;
      if (!grid.contains(q) || mask.is_exterior(grid.linear(q))) {
        throw std::invalid_argument("gradient stencil reaches an exterior node");
      }
      const double theta = mask.cut_fraction(node, a, side);
      if (inside && !std::isnan(theta)) {
        offset[side] = theta * h;
        value[side] = 0.0;
      } else {
        offset[side] = h;
        value[side] = vals[grid.linear(q)];
      }
    }
    g[a] = detail::three_point_derivative(offset[0], value[0], vals[node], offset[1],
                                          value[1]);
  }
  return g;
}

/// |grad u| at every non-exterior node. Where the central stencil would
/// reach an exterior node the one-sided difference toward the available
/// neighbour is used.
inline ScalarField gradient_magnitude(const ScalarField& u) {
  const CartesianGrid& grid = u.grid();
  const DomainMask& mask = u.mask();
  const auto& vals = u.values();
  const double h = grid.spacing();
  std::vector<double> out(grid.size(), kExteriorSentinel);
  for (std::size_t p = 0; p < grid.size(); ++p) {
    if (mask.is_exterior(p)) continue;
    const NodeIndex idx = grid.multi(p);
    bool full = true;
    for (int a = 0; a < grid.dim() && full; ++a) {
      for (int side = 0; side < 2; ++side) {
        NodeIndex q = idx;
        q[a] += side == 0 ? -1 : 1;
        if (!grid.contains(q) || mask.is_exterior(grid.linear(q))) full = false;
      }
    }
    if (full) {
      out[p] = norm(fd_gradient(u, p), grid.dim());
      continue;
    }
    double s = 0.0;
    for (int a = 0; a < grid.dim(); ++a) {
      NodeIndex qm = idx;
      NodeIndex qp = idx;
      --qm[a];
      ++qp[a];
      const bool has_m = grid.contains(qm) && !mask.is_exterior(grid.linear(qm));
      const bool has_p = grid.contains(qp) && !mask.is_exterior(grid.linear(qp));
      double d = 0.0;
      if (has_m && has_p) {
        d = (vals[grid.linear(qp)] - vals[grid.linear(qm)]) / (2 * h);
      } else if (has_p) {
        d = (vals[grid.linear(qp)] - vals[p]) / h;
      } else if (has_m) {
        d = (vals[p] - vals[grid.linear(qm)]) / h;
      }
      s += d * d;
    }
    out[p] = std::sqrt(s);
  }
  return ScalarField(u.discretization(), std::move(out));
}

/// Midpoint rule over the domain: each non-exterior node contributes its
/// value times the part of its cell inside the domain.
inline double integrate_interior(const ScalarField& u) {
  const CartesianGrid& grid = u.grid();
  const DomainMask& mask = u.mask();
  const auto& vals = u.values();
  double cell = 1.0;
  for (int a = 0; a < grid.dim(); ++a) cell *= grid.spacing();
  double sum = 0.0;
  for (std::size_t p = 0; p < grid.size(); ++p) {
    if (mask.is_exterior(p)) continue;
    const double w = mask.volume_fraction(p);
    if (w > 0.0) sum += w * vals[p];
  }
  return sum * cell;
}

/// Max-norm of the difference over inside nodes.
inline double max_abs_difference(const ScalarField& a, const ScalarField& b) {
  if (a.discretization() != b.discretization()) {
    throw std::invalid_argument("fields live on different grids");
  }
  double m = 0.0;
  for (std::size_t p : a.mask().unknowns()) {
    m = std::max(m, std::abs(a.values()[p] - b.values()[p]));
  }
  return m;
}

}  // namespace hkflow
