#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "hkflow/field/scalar_field.hpp"
#include "hkflow/solver/stencil.hpp"

namespace hkflow {

struct TranslatingGraphCheck {
  /// Largest |R_0(U)(x, 0) - R_eps(u)(x)| over the unknown nodes.
  double max_difference = 0.0;
  /// Largest |R_eps(u)| over the same nodes, for scale.
  double max_residual = 0.0;
  std::size_t nodes = 0;
  bool passed = false;
};

/// Evaluates the unregularized operator on U(x, z) = u(x) - eps z over a slab
/// of 5 z-layers of one more dimension and compares its middle layer with
/// the regularized residual of u.
inline TranslatingGraphCheck translating_graph_check(const ScalarField& u, double epsilon,
                                                     double kappa, double k,
                                                     double tol = 1e-10) {
  const CartesianGrid& base = u.grid();
  const int dim = base.dim();
  if (dim + 1 > kMaxDim) throw std::invalid_argument("no room for the slab dimension");
  if (!(epsilon > 0.0)) throw std::invalid_argument("epsilon must be positive");
  constexpr int layers = 5;
  constexpr int middle = 2;
  const double h = base.spacing();

  NodeIndex counts = base.counts();
  Coord origin = base.origin();
  counts[dim] = layers;
  origin[dim] = -middle * h;
  const CartesianGrid slab(dim + 1, counts, h, origin);

  std::vector<double> dist(slab.size()), frac(slab.size()), values(slab.size());
  const DomainMask& bm = u.mask();
  for (std::size_t p = 0; p < slab.size(); ++p) {
    const NodeIndex idx = slab.multi(p);
    NodeIndex bi = idx;
    bi[dim] = 0;
    const std::size_t q = base.linear(bi);
    dist[p] = bm.distance(q);
    frac[p] = bm.volume_fraction(q);
    values[p] = u.values()[q] - epsilon * (idx[dim] - middle) * h;
  }
  const DomainMask slab_mask(slab, std::move(dist), std::move(frac), false);

  const OperatorCoefficients flat{0.0, kappa, k};
  const OperatorCoefficients regularized{epsilon, kappa, k};
  auto slab_value = [&](std::size_t node, int) { return values[node]; };
  auto base_value = [&](std::size_t node, int) { return u.values()[node]; };

  TranslatingGraphCheck out;
  for (std::size_t p : bm.unknowns()) {
    NodeIndex idx = base.multi(p);
    idx[dim] = middle;
    const std::size_t sp = slab.linear(idx);
    const double lifted = residual_at<double>(slab, slab_mask, sp, slab_value, flat);
    const double direct = residual_at<double>(base, bm, p, base_value, regularized);
    out.max_difference = std::max(out.max_difference, std::abs(lifted - direct));
    out.max_residual = std::max(out.max_residual, std::abs(direct));
    ++out.nodes;
  }
  out.passed = out.max_difference <= tol;
  return out;
}

}  // namespace hkflow
