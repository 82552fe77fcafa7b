#pragma once

#include <cmath>
#include <sstream>
#include <stdexcept>
#include <string>

#include "hkflow/solver/regularized.hpp"

namespace hkflow {

/// A converged solution left the band [-newton_tol, Phi + newton_tol].
class BarrierViolation : public std::runtime_error {
 public:
  BarrierViolation(std::size_t node, double margin)
      : std::runtime_error(message(node, margin)), node_(node), margin_(margin) {}
  std::size_t node() const { return node_; }
  double margin() const { return margin_; }

 private:
  static std::string message(std::size_t node, double margin) {
    std::ostringstream ss;
    ss << "barrier violated at node " << node << " by " << margin;
    return ss.str();
  }
  std::size_t node_;
  double margin_;
};

struct BarrierReport {
  Coord pole{};       // p0, at distance 1 from the domain
  double outer_radius = 0.0;  // R0 with the domain inside B(p0, R0)
  double sigma = 0.0;
  double sup_bound = 0.0;     // max of Phi over the domain
  double min_upper_margin = 0.0;  // min over nodes of Phi - u
  double min_value = 0.0;
  double max_boundary_gradient = 0.0;
};

/// Smallest power of two with sigma^(1/k) >= (eps^2 / sigma^2 + 1)^((k-1)/(2k)),
/// the sufficient condition for the radial supersolution at r = 1.
inline double barrier_sigma(double epsilon, double k) {
  for (int j = -40; j <= 200; ++j) {
    const double sigma = std::ldexp(1.0, j);
    const double lhs = std::pow(sigma, 1.0 / k);
    const double rhs =
        std::pow(epsilon * epsilon / (sigma * sigma) + 1.0, (k - 1.0) / (2.0 * k));
    if (lhs >= rhs) return sigma;
  }
  throw std::logic_error("no admissible barrier scale");
}

/// Checks 0 <= u <= Phi against the radial supersolution
/// Phi = sigma (R0^(k+1) - r^(k+1)) / (k+1), r = |x - p0|, p0 at distance 1
/// from the domain. Throws BarrierViolation on failure.
inline BarrierReport barrier_check(const SolverSolution& sol, const DomainSpec& spec,
                                   const SolverParams& params) {
  const ScalarField& u = sol.u;
  const CartesianGrid& grid = u.grid();
  const DomainMask& mask = u.mask();
  const int dim = grid.dim();
  const double k = params.k;
  const double tol = params.newton_tol;

  BarrierReport rep;
  // Walk from the box centre along +x until the signed distance reaches 1.
  const Box box = spec.bounding_box();
  Coord c{};
  for (int a = 0; a < dim; ++a) c[a] = 0.5 * (box.lo[a] + box.hi[a]);
  auto dist_at = [&](double t) {
    Coord x = c;
    x[0] += t;
    return spec.signed_distance(x);
  };
  double lo = box.hi[0] - c[0];
  double hi = lo + 2.0;
  while (dist_at(hi) < 1.0) hi *= 2.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (dist_at(mid) < 1.0) lo = mid; else hi = mid;
  }
  rep.pole = c;
  rep.pole[0] += hi;

  double r0 = 0.0;
  for (int corner = 0; corner < (1 << dim); ++corner) {
    Coord x{};
    for (int a = 0; a < dim; ++a) x[a] = (corner >> a) & 1 ? box.hi[a] : box.lo[a];
    r0 = std::max(r0, norm(sub(x, rep.pole), dim));
  }
  rep.outer_radius = r0;
  rep.sigma = barrier_sigma(params.epsilon, k);

  const auto& vals = u.values();
  const double r0k = std::pow(r0, k + 1.0);
  rep.min_upper_margin = std::numeric_limits<double>::infinity();
  rep.min_value = std::numeric_limits<double>::infinity();
  for (std::size_t p : mask.unknowns()) {
    const double r = norm(sub(grid.position(p), rep.pole), dim);
    const double phi = rep.sigma / (k + 1.0) * (r0k - std::pow(r, k + 1.0));
    rep.sup_bound = std::max(rep.sup_bound, phi);
    const double upper = phi - vals[p];
    rep.min_upper_margin = std::min(rep.min_upper_margin, upper);
    rep.min_value = std::min(rep.min_value, vals[p]);
    if (upper < -tol) throw BarrierViolation(p, -upper);
    if (vals[p] < -tol) throw BarrierViolation(p, -vals[p]);
    if (mask.node_class(p) == NodeClass::boundary_band) {
      rep.max_boundary_gradient =
          std::max(rep.max_boundary_gradient, norm(fd_gradient(u, p), dim));
    }
  }
  return rep;
}

}  // namespace hkflow
