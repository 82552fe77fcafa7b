#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <span>
#include <stdexcept>
#include <vector>

#include "hkflow/field/domain.hpp"
#include "hkflow/field/grid.hpp"

namespace hkflow {

enum class NodeClass : std::uint8_t { interior, boundary_band, exterior };

/// Smallest cut fraction used when extrapolating Dirichlet ghosts. Inside
/// nodes closer than this (in units of h) to the boundary become ghosts
/// interpolated between the boundary and the opposite neighbour.
inline constexpr double kMinGhostFraction = 0.1;

struct GhostTerm {
  std::size_t node;  // unknown node the ghost value depends on
  double weight;
};

/// Node classification and boundary data of a domain on a grid.
///
/// A node is "inside" when d < 0. Boundary-band nodes have a face neighbour
/// on the other side of the boundary (this band straddles the boundary);
/// interior nodes are inside and not in the band; exterior nodes are outside
/// and not in the band. Inside nodes carry the unknowns of the Dirichlet
/// problem; band nodes outside the domain carry ghost values extrapolated
/// linearly to zero at the boundary crossing.
class DomainMask {
 public:
  DomainMask() = default;

  /// With `require_padding` false, inside nodes on the grid boundary are
  /// allowed (their stencils must then not be evaluated).
  DomainMask(const CartesianGrid& grid, std::vector<double> distance,
             std::vector<double> volume_fraction, bool require_padding = true)
      : distance_(std::move(distance)),
        volume_fraction_(std::move(volume_fraction)) {
    const std::size_t n = grid.size();
    if (distance_.size() != n || volume_fraction_.size() != n) {
      throw std::invalid_argument("mask arrays must match the grid size");
    }
    const int dim = grid.dim();
    cls_.assign(n, NodeClass::exterior);
    unknown_id_.assign(n, -1);
    cut_.assign(n * 2 * dim, std::numeric_limits<double>::quiet_NaN());
    dim_ = dim;

    // Inside nodes closer than kMinGhostFraction (along a grid edge) to the
    // boundary leave the unknowns. Each remembers its closest cut so its
    // value can be interpolated from the inside neighbour opposite to it.
    std::vector<Snap> snapped;
    for (std::size_t p = 0; p < n; ++p) {
      if (!(distance_[p] < 0.0)) continue;
      const NodeIndex idx = grid.multi(p);
      Snap best{p, -1, 0, kMinGhostFraction};
      for (int a = 0; a < dim; ++a) {
        for (int side = 0; side < 2; ++side) {
          NodeIndex q = idx;
          q[a] += side == 0 ? -1 : 1;
          if (!grid.contains(q)) continue;
          const double dq = distance_[grid.linear(q)];
          if (dq < 0.0) continue;
          const double theta = distance_[p] / (distance_[p] - dq);
          if (theta < best.theta) best = {p, a, side, theta};
        }
      }
      if (best.axis >= 0) snapped.push_back(best);
    }
    std::vector<std::uint8_t> is_snapped(n, 0);
    for (const Snap& s : snapped) {
      distance_[s.node] = 0.0;
      is_snapped[s.node] = 1;
    }

    for (std::size_t p = 0; p < n; ++p) {
      const bool in = distance_[p] < 0.0;
      const NodeIndex idx = grid.multi(p);
      bool crosses = false;
      for (int a = 0; a < dim; ++a) {
        for (int side = 0; side < 2; ++side) {
          NodeIndex q = idx;
          q[a] += side == 0 ? -1 : 1;
          if (!grid.contains(q)) continue;
          const double dq = distance_[grid.linear(q)];
          if ((dq < 0.0) != in) {
            crosses = true;
            // A snapped neighbour carries an interpolated value, not a cut.
            if (in && is_snapped[grid.linear(q)]) continue;
            // Fraction of the edge from p to the zero of the linear
            // interpolant of d.
            cut_[p * 2 * dim + 2 * a + side] =
                distance_[p] / (distance_[p] - dq);
          }
        }
      }
      if (crosses) {
        cls_[p] = NodeClass::boundary_band;
      } else {
        cls_[p] = in ? NodeClass::interior : NodeClass::exterior;
      }
      if (in) {
        if (require_padding && !grid.has_all_neighbors(idx)) {
          throw std::invalid_argument("domain touches the grid boundary");
        }
        unknown_id_[p] = static_cast<std::int64_t>(unknowns_.size());
        unknowns_.push_back(p);
      }
    }

    // Ghost extension for outside band nodes: average of the linear
    // extrapolations from each inside face neighbour, weighted by the cut
    // fraction seen from that neighbour.
    std::vector<const Snap*> snap_of(n, nullptr);
    for (const Snap& s : snapped) snap_of[s.node] = &s;
    ghost_offsets_.push_back(0);
    for (std::size_t p = 0; p < n; ++p) {
      if (cls_[p] != NodeClass::boundary_band || distance_[p] < 0.0) continue;
      const NodeIndex idx = grid.multi(p);
      if (const Snap* s = snap_of[p]) {
        // Linear interpolation between the boundary point at theta h and the
        // opposite neighbour at distance h; zero when that neighbour is gone.
        NodeIndex q = idx;
        q[s->axis] += s->side == 0 ? 1 : -1;
        if (grid.contains(q) && unknown_id_[grid.linear(q)] >= 0) {
          ghost_terms_.push_back({grid.linear(q), s->theta / (1.0 + s->theta)});
        }
        ghosts_.push_back(p);
        ghost_offsets_.push_back(ghost_terms_.size());
        continue;
      }
      double total = 0.0;
      const std::size_t first = ghost_terms_.size();
      for (int a = 0; a < dim; ++a) {
        for (int side = 0; side < 2; ++side) {
          NodeIndex q = idx;
          q[a] += side == 0 ? -1 : 1;
          if (!grid.contains(q)) continue;
          const std::size_t qn = grid.linear(q);
          if (!(distance_[qn] < 0.0)) continue;
          const double theta =
              std::max(kMinGhostFraction, distance_[qn] / (distance_[qn] - distance_[p]));
          ghost_terms_.push_back({qn, theta - 1.0});
          total += theta;
        }
      }
      for (std::size_t i = first; i < ghost_terms_.size(); ++i) {
        ghost_terms_[i].weight /= total;
      }
      ghosts_.push_back(p);
      ghost_offsets_.push_back(ghost_terms_.size());
    }
  }

  std::size_t size() const { return cls_.size(); }
  NodeClass node_class(std::size_t node) const { return cls_[node]; }
  bool is_exterior(std::size_t node) const { return cls_[node] == NodeClass::exterior; }
  bool is_inside(std::size_t node) const { return distance_[node] < 0.0; }
  double distance(std::size_t node) const { return distance_[node]; }
  double volume_fraction(std::size_t node) const { return volume_fraction_[node]; }

  /// Cut fraction in (0, 1] along the edge from `node` to its neighbour on
  /// `side` (0 = negative, 1 = positive) of `axis`; NaN when the edge does
  /// not cross the boundary.
  double cut_fraction(std::size_t node, int axis, int side) const {
    return cut_[node * 2 * dim_ + 2 * axis + side];
  }

  std::int64_t unknown_id(std::size_t node) const { return unknown_id_[node]; }
  const std::vector<std::size_t>& unknowns() const { return unknowns_; }
  const std::vector<std::size_t>& ghosts() const { return ghosts_; }

  std::span<const GhostTerm> ghost_terms(std::size_t ghost_index) const {
    return {ghost_terms_.data() + ghost_offsets_[ghost_index],
            ghost_offsets_[ghost_index + 1] - ghost_offsets_[ghost_index]};
  }

  std::size_t count(NodeClass c) const {
    return static_cast<std::size_t>(std::count(cls_.begin(), cls_.end(), c));
  }

 private:
  struct Snap {
    std::size_t node;
    int axis;
    int side;
    double theta;
  };

  int dim_ = 2;
  std::vector<NodeClass> cls_;
  std::vector<double> distance_;
  std::vector<double> volume_fraction_;
  std::vector<double> cut_;
  std::vector<std::int64_t> unknown_id_;
  std::vector<std::size_t> unknowns_;
  std::vector<std::size_t> ghosts_;
  std::vector<std::size_t> ghost_offsets_;
  std::vector<GhostTerm> ghost_terms_;
};

/// A domain discretized on a grid. Shared, immutable.
struct Discretization {
  DomainSpec domain;
  CartesianGrid grid;
  DomainMask mask;
  int resolution = 0;
  BoundaryCurvatureCheck boundary;
};

using DiscretizationPtr = std::shared_ptr<const Discretization>;

namespace detail {

// Fraction of the cell of side h centred at x that lies inside the domain,
// by sub-sampling the signed distance.
inline double cell_volume_fraction(const DomainSpec& spec, const Coord& x,
                                   double h, int dim, int sub) {
  const int total = dim == 2 ? sub * sub : sub * sub * sub;
  int inside = 0;
  for (int s = 0; s < total; ++s) {
    Coord y = x;
    int rest = s;
    for (int a = 0; a < dim; ++a) {
      const int k = rest % sub;
      rest /= sub;
      y[a] = x[a] - 0.5 * h + (k + 0.5) * h / sub;
    }
    if (spec.signed_distance(y) < 0.0) ++inside;
  }
  return static_cast<double>(inside) / total;
}

}  // namespace detail

struct GridOptions {
  int boundary_samples = 10000;
  std::uint64_t seed = 1;
};

/// Discretizes `spec` with spacing h = 1 / resolution on the bounding box
/// padded by 2h.
inline DiscretizationPtr build_grid(const DomainSpec& spec, int resolution,
                                    const GridOptions& options = {}) {
  if (resolution < 16) {
    throw std::invalid_argument("grid resolution must be at least 16");
  }
  const int dim = spec.dim();
  const double h = 1.0 / resolution;
  const Box box = spec.bounding_box();
  NodeIndex counts{};
  Coord origin{};
  for (int a = 0; a < dim; ++a) {
    const int cells = static_cast<int>(std::ceil((box.hi[a] - box.lo[a]) / h - 1e-9));
    counts[a] = cells + 4 + 1;
    origin[a] = box.lo[a] - 2.0 * h;
  }
  CartesianGrid grid(dim, counts, h, origin);

  const std::size_t n = grid.size();
  std::vector<double> dist(n);
  std::vector<double> frac(n);
  const double reach = 0.5 * h * std::sqrt(static_cast<double>(dim)) * 1.0001;
  const int sub = dim == 2 ? 8 : 6;
  for (std::size_t p = 0; p < n; ++p) {
    const Coord x = grid.position(p);
    dist[p] = spec.signed_distance(x);
    if (std::abs(dist[p]) <= reach) {
      frac[p] = detail::cell_volume_fraction(spec, x, h, dim, sub);
    } else {
      frac[p] = dist[p] < 0.0 ? 1.0 : 0.0;
    }
  }
  auto disc = std::make_shared<Discretization>();
  disc->domain = spec;
  disc->grid = grid;
  disc->mask = DomainMask(grid, std::move(dist), std::move(frac));
  disc->resolution = resolution;
  if (options.boundary_samples > 0) {
    disc->boundary = check_boundary_curvature(spec, options.boundary_samples, options.seed);
  }
  return disc;
}

}  // namespace hkflow
