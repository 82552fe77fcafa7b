#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <variant>
#include <vector>

#include "hkflow/field/grid.hpp"

namespace hkflow {

struct Box {
  Coord lo{};
  Coord hi{};
};

struct Ball {
  int dim = 2;
  Coord center{};
  double radius = 1.0;
};

/// Axis-aligned ellipse (2D) or ellipsoid (3D).
struct Ellipsoid {
  int dim = 2;
  Coord center{};
  Coord semi_axes{};
};

/// Two balls glued by a log-sum-exp smooth minimum of their distances. The
/// neck is whatever the smooth minimum produces between the balls; its
/// width grows as the sharpness decreases.
struct Dumbbell {
  int dim = 3;
  Coord center_a{};
  double radius_a = 1.0;
  Coord center_b{};
  double radius_b = 1.0;
  /// <= 0 selects the default 32 / diameter.
  double sharpness = 0.0;
};

/// Convex polygon, 2D only. Vertices may be given in either orientation.
struct ConvexPolygon {
  std::vector<std::array<double, 2>> vertices;
};

namespace detail {

inline double robust_length(double a, double b) {
  return std::hypot(a, b);
}

inline double robust_length(double a, double b, double c) {
  return std::sqrt(a * a + b * b + c * c);
}

// Bisection for the root s of sum_i (r_i z_i / (s + r_i))^2 - 1 on the
// bracket produced by the sign of g. Iterates until the midpoint stalls.
template <int N>
double ellipsoid_root(const std::array<double, N>& r,
                      const std::array<double, N>& z, double g) {
  std::array<double, N> n{};
  for (int i = 0; i < N; ++i) n[i] = r[i] * z[i];
  double s0 = z[N - 1] - 1.0;
  double s1 = 0.0;
  if (g >= 0.0) {
    double len = 0.0;
    for (int i = 0; i < N; ++i) len += n[i] * n[i];
    s1 = std::sqrt(len) - 1.0;
  }
  double s = 0.0;
  for (int it = 0; it < 1100; ++it) {
    s = 0.5 * (s0 + s1);
    if (s == s0 || s == s1) break;
    double gs = -1.0;
    for (int i = 0; i < N; ++i) {
      const double ratio = n[i] / (s + r[i]);
      gs += ratio * ratio;
    }
    if (gs > 0.0) {
      s0 = s;
    } else if (gs < 0.0) {
      s1 = s;
    } else {
      break;
    }
  }
  return s;
}

// Distance from (y0, y1), y >= 0, to the ellipse with e0 >= e1 > 0.
inline double ellipse_distance(double e0, double e1, double y0, double y1) {
  if (y1 > 0.0) {
    if (y0 > 0.0) {
      const double z0 = y0 / e0;
      const double z1 = y1 / e1;
      const double g = z0 * z0 + z1 * z1 - 1.0;
      if (g == 0.0) return 0.0;
      const double r0 = (e0 / e1) * (e0 / e1);
      const double sbar = ellipsoid_root<2>({r0, 1.0}, {z0, z1}, g);
      const double x0 = r0 * y0 / (sbar + r0);
      const double x1 = y1 / (sbar + 1.0);
      return robust_length(x0 - y0, x1 - y1);
    }
    return std::abs(y1 - e1);
  }
  const double numer0 = e0 * y0;
  const double denom0 = e0 * e0 - e1 * e1;
  if (numer0 < denom0) {
    const double xde0 = numer0 / denom0;
    const double x0 = e0 * xde0;
    const double x1 = e1 * std::sqrt(std::max(0.0, 1.0 - xde0 * xde0));
    return robust_length(x0 - y0, x1);
  }
  return std::abs(y0 - e0);
}

// Distance from y >= 0 to the ellipsoid with e0 >= e1 >= e2 > 0.
inline double ellipsoid_distance(double e0, double e1, double e2, double y0,
                                 double y1, double y2) {
  if (y2 > 0.0) {
    if (y1 > 0.0) {
      if (y0 > 0.0) {
        const double z0 = y0 / e0;
        const double z1 = y1 / e1;
        const double z2 = y2 / e2;
        const double g = z0 * z0 + z1 * z1 + z2 * z2 - 1.0;
        if (g == 0.0) return 0.0;
        const double r0 = (e0 / e2) * (e0 / e2);
        const double r1 = (e1 / e2) * (e1 / e2);
        const double sbar =
            ellipsoid_root<3>({r0, r1, 1.0}, {z0, z1, z2}, g);
        const double x0 = r0 * y0 / (sbar + r0);
        const double x1 = r1 * y1 / (sbar + r1);
        const double x2 = y2 / (sbar + 1.0);
        return robust_length(x0 - y0, x1 - y1, x2 - y2);
      }
      return ellipse_distance(e1, e2, y1, y2);
    }
    if (y0 > 0.0) return ellipse_distance(e0, e2, y0, y2);
    return std::abs(y2 - e2);
  }
  const double denom0 = e0 * e0 - e2 * e2;
  const double denom1 = e1 * e1 - e2 * e2;
  const double numer0 = e0 * y0;
  const double numer1 = e1 * y1;
  if (numer0 < denom0 && numer1 < denom1) {
    const double xde0 = numer0 / denom0;
    const double xde1 = numer1 / denom1;
    const double discr = 1.0 - xde0 * xde0 - xde1 * xde1;
    if (discr > 0.0) {
      const double x0 = e0 * xde0;
      const double x1 = e1 * xde1;
      const double x2 = e2 * std::sqrt(discr);
      return robust_length(x0 - y0, x1 - y1, x2);
    }
  }
  return ellipse_distance(e0, e1, y0, y1);
}

}  // namespace detail

inline double signed_distance(const Ball& b, const Coord& x) {
  return norm(sub(x, b.center), b.dim) - b.radius;
}

inline double signed_distance(const Ellipsoid& e, const Coord& x) {
  // Sort axes descending and fold the point into the positive orthant.
  std::array<int, 3> order{0, 1, 2};
  std::sort(order.begin(), order.begin() + e.dim,
            [&](int a, int b) { return e.semi_axes[a] > e.semi_axes[b]; });
  std::array<double, 3> ax{};
  std::array<double, 3> y{};
  double q = 0.0;
  for (int i = 0; i < e.dim; ++i) {
    ax[i] = e.semi_axes[order[i]];
    y[i] = std::abs(x[order[i]] - e.center[order[i]]);
    // Round-off offsets from a symmetry plane take the exact axis branch.
    if (y[i] < 1e-12 * ax[i]) y[i] = 0.0;
    q += (y[i] / ax[i]) * (y[i] / ax[i]);
  }
  const double dist =
      e.dim == 2 ? detail::ellipse_distance(ax[0], ax[1], y[0], y[1])
                 : detail::ellipsoid_distance(ax[0], ax[1], ax[2], y[0], y[1],
                                              y[2]);
  return q < 1.0 ? -dist : dist;
}

inline double dumbbell_sharpness(const Dumbbell& d) {
  if (d.sharpness > 0.0) return d.sharpness;
  // Diameter of the union of the two balls.
  const double sep = norm(sub(d.center_a, d.center_b), d.dim);
  const double diam =
      std::max({2.0 * d.radius_a, 2.0 * d.radius_b, sep + d.radius_a + d.radius_b});
  return 32.0 / diam;
}

inline double signed_distance(const Dumbbell& d, const Coord& x) {
  const double beta = dumbbell_sharpness(d);
  const double d1 = norm(sub(x, d.center_a), d.dim) - d.radius_a;
  const double d2 = norm(sub(x, d.center_b), d.dim) - d.radius_b;
  const double m = std::min(d1, d2);
  return m - std::log1p(std::exp(-beta * std::abs(d1 - d2))) / beta;
}

inline double signed_distance(const ConvexPolygon& p, const Coord& x) {
  const auto& v = p.vertices;
  const std::size_t n = v.size();
  double best = std::numeric_limits<double>::infinity();
  bool inside = true;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& a = v[i];
    const auto& b = v[(i + 1) % n];
    const double ex = b[0] - a[0];
    const double ey = b[1] - a[1];
    const double px = x[0] - a[0];
    const double py = x[1] - a[1];
    const double len2 = ex * ex + ey * ey;
    const double s = std::clamp((px * ex + py * ey) / len2, 0.0, 1.0);
    best = std::min(best, std::hypot(px - s * ex, py - s * ey));
    // Vertices are stored counter-clockwise.
    if (ex * py - ey * px < 0.0) inside = false;
  }
  return inside ? -best : best;
}

/// Analytic domain with a 1-Lipschitz signed distance (negative inside).
class DomainSpec {
 public:
  using Shape = std::variant<Ball, Ellipsoid, Dumbbell, ConvexPolygon>;

  DomainSpec() : DomainSpec(Ball{}) {}

  /* implicit */ DomainSpec(Shape shape) : shape_(std::move(shape)) {
    validate_and_normalize();
  }

  static DomainSpec ball(int dim, const Coord& center, double radius) {
    return DomainSpec(Ball{dim, center, radius});
  }
  static DomainSpec ellipsoid(int dim, const Coord& center,
                              const Coord& semi_axes) {
    return DomainSpec(Ellipsoid{dim, center, semi_axes});
  }

  const Shape& shape() const { return shape_; }

  int dim() const {
    return std::visit(
        [](const auto& s) -> int {
          using T = std::decay_t<decltype(s)>;
          if constexpr (std::is_same_v<T, ConvexPolygon>) {
            return 2;
          } else {
            return s.dim;
          }
        },
        shape_);
  }

  double signed_distance(const Coord& x) const {
    return std::visit([&](const auto& s) { return hkflow::signed_distance(s, x); },
                      shape_);
  }

  /// Tight axis-aligned bounding box of the closed domain.
  Box bounding_box() const {
    Box box;
    const int n = dim();
    std::visit(
        [&](const auto& s) {
          using T = std::decay_t<decltype(s)>;
          if constexpr (std::is_same_v<T, Ball>) {
            for (int a = 0; a < n; ++a) {
              box.lo[a] = s.center[a] - s.radius;
              box.hi[a] = s.center[a] + s.radius;
            }
          } else if constexpr (std::is_same_v<T, Ellipsoid>) {
            for (int a = 0; a < n; ++a) {
              box.lo[a] = s.center[a] - s.semi_axes[a];
              box.hi[a] = s.center[a] + s.semi_axes[a];
            }
          } else if constexpr (std::is_same_v<T, Dumbbell>) {
            const double pad = std::log(2.0) / dumbbell_sharpness(s);
            for (int a = 0; a < n; ++a) {
              box.lo[a] = std::min(s.center_a[a] - s.radius_a,
                                   s.center_b[a] - s.radius_b) - pad;
              box.hi[a] = std::max(s.center_a[a] + s.radius_a,
                                   s.center_b[a] + s.radius_b) + pad;
            }
          } else {
            box.lo[0] = box.lo[1] = std::numeric_limits<double>::infinity();
            box.hi[0] = box.hi[1] = -std::numeric_limits<double>::infinity();
            for (const auto& v : s.vertices) {
              for (int a = 0; a < 2; ++a) {
                box.lo[a] = std::min(box.lo[a], v[a]);
                box.hi[a] = std::max(box.hi[a], v[a]);
              }
            }
          }
        },
        shape_);
    return box;
  }

  double diameter() const {
    const Box b = bounding_box();
    return norm(sub(b.hi, b.lo), dim());
  }

  std::string name() const {
    return std::visit(
        [](const auto& s) -> std::string {
          using T = std::decay_t<decltype(s)>;
          if constexpr (std::is_same_v<T, Ball>) return "ball";
          if constexpr (std::is_same_v<T, Ellipsoid>) return "ellipsoid";
          if constexpr (std::is_same_v<T, Dumbbell>) return "dumbbell";
          return "polygon";
        },
        shape_);
  }

 private:
  void validate_and_normalize() {
    std::visit(
        [](auto& s) {
          using T = std::decay_t<decltype(s)>;
          if constexpr (std::is_same_v<T, Ball>) {
            if (s.dim < 2 || s.dim > 3) throw std::invalid_argument("ball dimension must be 2 or 3");
            if (!(s.radius > 0.0)) throw std::invalid_argument("ball radius must be positive");
          } else if constexpr (std::is_same_v<T, Ellipsoid>) {
            if (s.dim < 2 || s.dim > 3) throw std::invalid_argument("ellipsoid dimension must be 2 or 3");
            for (int a = 0; a < s.dim; ++a) {
              if (!(s.semi_axes[a] > 0.0)) throw std::invalid_argument("ellipsoid semi-axes must be positive");
            }
          } else if constexpr (std::is_same_v<T, Dumbbell>) {
            if (s.dim < 2 || s.dim > 3) throw std::invalid_argument("dumbbell dimension must be 2 or 3");
            if (!(s.radius_a > 0.0) || !(s.radius_b > 0.0)) {
              throw std::invalid_argument("dumbbell radii must be positive");
            }
          } else {
            auto& v = s.vertices;
            if (v.size() < 3) throw std::invalid_argument("polygon needs at least 3 vertices");
            double area2 = 0.0;
            for (std::size_t i = 0; i < v.size(); ++i) {
              const auto& a = v[i];
              const auto& b = v[(i + 1) % v.size()];
              area2 += a[0] * b[1] - a[1] * b[0];
            }
            if (std::abs(area2) <= 1e-14) throw std::invalid_argument("polygon has zero area");
            if (area2 < 0.0) std::reverse(v.begin(), v.end());
            const std::size_t n = v.size();
            for (std::size_t i = 0; i < n; ++i) {
              const auto& a = v[i];
              const auto& b = v[(i + 1) % n];
              const auto& c = v[(i + 2) % n];
              const double cross =
                  (b[0] - a[0]) * (c[1] - b[1]) - (b[1] - a[1]) * (c[0] - b[0]);
              if (cross <= 0.0) throw std::invalid_argument("polygon must be strictly convex");
            }
          }
        },
        shape_);
  }

  Shape shape_;
};

/// Outcome of sampling the boundary mean curvature of a domain.
struct BoundaryCurvatureCheck {
  bool positive = false;
  double min_curvature = 0.0;
  double max_curvature = 0.0;
  int samples = 0;
};

/// Samples boundary points by Newton projection of random points onto the
/// zero set of the signed distance and evaluates H = div(grad d / |grad d|)
/// there by finite differences. Deterministic for a fixed seed.
inline BoundaryCurvatureCheck check_boundary_curvature(const DomainSpec& spec,
                                                       int samples = 10000,
                                                       std::uint64_t seed = 1) {
  const int dim = spec.dim();
  const Box box = spec.bounding_box();
  const double diam = spec.diameter();
  const double eta_grad = 1e-6 * diam;
  const double eta_div = 1e-4 * diam;

  auto gradient = [&](const Coord& x) {
    Coord g{};
    for (int a = 0; a < dim; ++a) {
      Coord xp = x;
      Coord xm = x;
      xp[a] += eta_grad;
      xm[a] -= eta_grad;
      g[a] = (spec.signed_distance(xp) - spec.signed_distance(xm)) / (2 * eta_grad);
    }
    return g;
  };
  auto unit_normal = [&](const Coord& x) {
    Coord g = gradient(x);
    const double n = norm(g, dim);
    for (int a = 0; a < dim; ++a) g[a] /= n;
    return g;
  };

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  BoundaryCurvatureCheck out;
  out.min_curvature = std::numeric_limits<double>::infinity();
  out.max_curvature = -std::numeric_limits<double>::infinity();
  int accepted = 0;
  int attempts = 0;
  while (accepted < samples && attempts < 20 * samples) {
    ++attempts;
    Coord x{};
    for (int a = 0; a < dim; ++a) x[a] = box.lo[a] + unit(rng) * (box.hi[a] - box.lo[a]);
    bool converged = false;
    for (int it = 0; it < 60; ++it) {
      const double d = spec.signed_distance(x);
      if (std::abs(d) < 1e-12 * diam) {
        converged = true;
        break;
      }
      const Coord g = gradient(x);
      const double g2 = dot(g, g, dim);
      if (!(g2 > 1e-20)) break;
      for (int a = 0; a < dim; ++a) x[a] -= d * g[a] / g2;
    }
    if (!converged) continue;
    double curvature = 0.0;
    for (int a = 0; a < dim; ++a) {
      Coord xp = x;
      Coord xm = x;
      xp[a] += eta_div;
      xm[a] -= eta_div;
      curvature += (unit_normal(xp)[a] - unit_normal(xm)[a]) / (2 * eta_div);
    }
    out.min_curvature = std::min(out.min_curvature, curvature);
    out.max_curvature = std::max(out.max_curvature, curvature);
    ++accepted;
  }
  out.samples = accepted;
  out.positive = accepted > 0 && out.min_curvature > 1e-3 / diam;
  return out;
}

}  // namespace hkflow
