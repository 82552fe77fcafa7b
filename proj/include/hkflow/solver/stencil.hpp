#pragma once

#include <array>
#include <cmath>

#include "hkflow/field/discretization.hpp"
#include "hkflow/solver/dual.hpp"

namespace hkflow {

/// Coefficients of the regularized operator
///   R(u) = div(grad u / sqrt(eps^2 + |grad u|^2)) + kappa (eps^2 + |grad u|^2)^(-1/(2k)).
struct OperatorCoefficients {
  double epsilon = 0.5;
  double kappa = 1.0;
  double k = 1.0;
};

/// Local stencil slot of the node p + offset, offset in {-1,0,1}^dim:
/// sum_a (offset_a + 1) 3^a.
inline constexpr std::array<int, kMaxDim + 1> kPow3{1, 3, 9, 27, 81};

inline constexpr int stencil_center(int dim) {
  int c = 0;
  for (int a = 0; a < dim; ++a) c += kPow3[a];
  return c;
}

/// Residual of the regularized operator at inside node p.
///
/// Staggered (face-flux) divergence: the flux through the face between p
/// and q = p + s e_a uses the one-sided difference along a and, for every
/// other axis b, the central difference along b averaged over p and q (only
/// p's when q is outside the domain, its stencil is then incomplete). The
/// face flux is the same seen from either side, so the discrete divergence
/// telescopes. The reaction term uses central differences at p.
///
/// `value(node, slot)` returns the (possibly dual) value at a node together
/// with its local stencil slot.
template <class T, class ValueFn>
T residual_at(const CartesianGrid& grid, const DomainMask& mask, std::size_t p,
              const ValueFn& value, const OperatorCoefficients& c) {
  using std::pow;
  using std::sqrt;
  const int dim = grid.dim();
  const double h = grid.spacing();
  const double inv_h = 1.0 / h;
  const double inv_2h = 0.5 / h;
  const double eps2 = c.epsilon * c.epsilon;
  const int center = stencil_center(dim);

  auto node_offset = [&](int a, int s, int b, int t) {
    return static_cast<std::size_t>(static_cast<std::ptrdiff_t>(p) +
                                    s * grid.stride(a) + t * grid.stride(b));
  };
  // Central difference along b at p + s e_a.
  auto central = [&](int a, int s, int b) -> T {
    const int base = center + s * kPow3[a];
    const T plus = value(node_offset(a, s, b, 1), base + kPow3[b]);
    const T minus = value(node_offset(a, s, b, -1), base - kPow3[b]);
    return (plus - minus) * inv_2h;
  };

  std::array<T, kMaxDim> grad_p{};
  for (int b = 0; b < dim; ++b) grad_p[b] = central(0, 0, b);

  const T up = value(p, center);
  T divergence(0.0);
  for (int a = 0; a < dim; ++a) {
    for (int s = -1; s <= 1; s += 2) {
      const std::size_t q = node_offset(a, s, a, 0);
      const T uq = value(q, center + s * kPow3[a]);
      const T ga = s > 0 ? (uq - up) * inv_h : (up - uq) * inv_h;
      T g2 = ga * ga + eps2;
      const bool q_inside = mask.is_inside(q);
      for (int b = 0; b < dim; ++b) {
        if (b == a) continue;
        const T gb = q_inside ? (grad_p[b] + central(a, s, b)) * 0.5 : grad_p[b];
        g2 += gb * gb;
      }
      const T flux = ga / sqrt(g2);
      if (s > 0) {
        divergence += flux * inv_h;
      } else {
        divergence -= flux * inv_h;
      }
    }
  }
  if (c.kappa == 0.0) return divergence;
  T grad2(eps2);
  for (int b = 0; b < dim; ++b) grad2 += grad_p[b] * grad_p[b];
  return divergence + c.kappa * pow(grad2, -0.5 / c.k);
}

}  // namespace hkflow
