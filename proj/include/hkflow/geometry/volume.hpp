#pragma once

#include <array>
#include <cmath>
#include <stdexcept>

#include "hkflow/geometry/contour.hpp"

namespace hkflow {

namespace detail {

inline double tet_volume(const Coord& a, const Coord& b, const Coord& c, const Coord& d) {
  return std::abs(dot(sub(b, a), cross3(sub(c, a), sub(d, a)), 3)) / 6.0;
}

// Area of {P1 >= t} in one grid cell, with the saddle connectivity of the
// contour extraction.
inline double cell_area(const std::array<Coord, 4>& x, const std::array<double, 4>& v, double t) {
  std::array<bool, 4> in{};
  int inside = 0;
  for (int q = 0; q < 4; ++q) {
    in[q] = v[q] >= t;
    inside += in[q];
  }
  if (inside == 0) return 0.0;
  auto crossing = [&](int q) {
    const int r = (q + 1) % 4;
    const double s = std::clamp((t - v[q]) / (v[r] - v[q]), 1e-9, 1.0 - 1e-9);
    return lerp(x[q], x[r], s);
  };
  auto polygon_area = [](const Coord* p, int n) {
    double s = 0.0;
    for (int i = 0; i < n; ++i) {
      const Coord& a = p[i];
      const Coord& b = p[(i + 1) % n];
      s += a[0] * b[1] - a[1] * b[0];
    }
    return 0.5 * std::abs(s);
  };
  const bool saddle = inside == 2 && in[0] == in[2];
  if (saddle && 0.25 * (v[0] + v[1] + v[2] + v[3]) < t) {
    // Two separate corner triangles.
    double area = 0.0;
    for (int q = 0; q < 4; ++q) {
      if (!in[q]) continue;
      const Coord tri[3] = {x[q], crossing(q), crossing((q + 3) % 4)};
      area += polygon_area(tri, 3);
    }
    return area;
  }
  Coord poly[8];
  int n = 0;
  for (int q = 0; q < 4; ++q) {
    if (in[q]) poly[n++] = x[q];
    if (in[q] != in[(q + 1) % 4]) poly[n++] = crossing(q);
  }
  return polygon_area(poly, n);
}

// Volume of {P1 >= t} in a tetrahedron.
inline double tet_superlevel_volume(const std::array<Coord, 4>& x, const std::array<double, 4>& v,
                                    double t) {
  std::array<int, 4> ins{}, outs{};
  int ni = 0, no = 0;
  for (int q = 0; q < 4; ++q) {
    if (v[q] >= t) ins[ni++] = q; else outs[no++] = q;
  }
  if (ni == 0) return 0.0;
  const double full = tet_volume(x[0], x[1], x[2], x[3]);
  if (no == 0) return full;
  auto frac = [&](int a, int b) {
    return std::clamp((t - v[a]) / (v[b] - v[a]), 1e-9, 1.0 - 1e-9);
  };
  if (ni == 1) {
    const int a = ins[0];
    return full * frac(a, outs[0]) * frac(a, outs[1]) * frac(a, outs[2]);
  }
  if (ni == 3) {
    const int d = outs[0];
    return full * (1.0 - frac(d, ins[0]) * frac(d, ins[1]) * frac(d, ins[2]));
  }
  // Prism with triangles (a, ac, ad) and (b, bc, bd).
  const int a = ins[0], b = ins[1], c = outs[0], d = outs[1];
  const Coord p0 = x[a];
  const Coord p1 = lerp(x[a], x[c], frac(a, c));
  const Coord p2 = lerp(x[a], x[d], frac(a, d));
  const Coord p3 = x[b];
  const Coord p4 = lerp(x[b], x[c], frac(b, c));
  const Coord p5 = lerp(x[b], x[d], frac(b, d));
  return tet_volume(p0, p1, p2, p5) + tet_volume(p0, p1, p5, p4) + tet_volume(p0, p4, p5, p3);
}

}  // namespace detail

/// Measure of the superlevel set {u >= t}: exact for the piecewise-linear
/// interpolant used by extract_level_set (bilinear cells split the same way
/// in 2D, Kuhn tetrahedra in 3D). Exterior nodes count as 0. Returns 0 when
/// no node reaches t.
inline double enclosed_volume(const ScalarField& u, double t) {
  const CartesianGrid& g = u.grid();
  const auto& v = u.values();
  double total = 0.0;
  if (g.dim() == 2) {
    for (int i = 0; i + 1 < g.count(0); ++i) {
      for (int j = 0; j + 1 < g.count(1); ++j) {
        const std::size_t p0 = g.linear({i, j, 0, 0});
        const std::array<std::size_t, 4> c{
            p0, p0 + static_cast<std::size_t>(g.stride(0)),
            p0 + static_cast<std::size_t>(g.stride(0) + g.stride(1)),
            p0 + static_cast<std::size_t>(g.stride(1))};
        std::array<Coord, 4> x{};
        std::array<double, 4> val{};
        bool any = false, all = true;
        for (int q = 0; q < 4; ++q) {
          val[q] = detail::level_value(v, c[q]);
          any = any || val[q] >= t;
          all = all && val[q] >= t;
        }
        if (!any) continue;
        if (all) {
          total += g.spacing() * g.spacing();
          continue;
        }
        for (int q = 0; q < 4; ++q) x[q] = g.position(c[q]);
        total += detail::cell_area(x, val, t);
      }
    }
    return total;
  }
  if (g.dim() != 3) throw std::invalid_argument("enclosed volume needs a 2D or 3D field");
  const double cube = g.spacing() * g.spacing() * g.spacing();
  for (int i = 0; i + 1 < g.count(0); ++i) {
    for (int j = 0; j + 1 < g.count(1); ++j) {
      for (int k = 0; k + 1 < g.count(2); ++k) {
        const std::size_t base = g.linear({i, j, k, 0});
        std::array<double, 8> val{};
        int inside = 0;
        for (int b = 0; b < 8; ++b) {
          val[b] = detail::level_value(v, detail::corner_node(g, base, b));
          inside += val[b] >= t;
        }
        if (inside == 0) continue;
        if (inside == 8) {
          total += cube;
          continue;
        }
        for (const auto& tet : detail::kKuhnTets) {
          std::array<Coord, 4> x{};
          std::array<double, 4> tv{};
          for (int q = 0; q < 4; ++q) {
            x[q] = g.position(detail::corner_node(g, base, tet[q]));
            tv[q] = val[tet[q]];
          }
          total += detail::tet_superlevel_volume(x, tv, t);
        }
      }
    }
  }
  return total;
}

}  // namespace hkflow
