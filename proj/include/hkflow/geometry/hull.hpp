#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <stdexcept>
#include <unordered_map>
#include <vector>

#include "hkflow/geometry/curvature.hpp"

namespace hkflow {

/// All points are collinear (2D) or coplanar (3D), or there are too few.
class DegenerateHull : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// The mesh is not the boundary of a convex body.
class NonConvexHull : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

namespace detail {

inline double cross2(const Coord& o, const Coord& a, const Coord& b) {
  return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0]);
}

inline double point_scale(const std::vector<Coord>& pts, int dim) {
  double s = 0.0;
  for (const auto& p : pts) {
    for (int a = 0; a < dim; ++a) s = std::max(s, std::abs(p[a]));
  }
  return std::max(s, 1.0);
}

inline ContourMesh hull_2d(const std::vector<Coord>& input) {
  std::vector<Coord> pts = input;
  std::sort(pts.begin(), pts.end(), [](const Coord& a, const Coord& b) {
    return a[0] < b[0] || (a[0] == b[0] && a[1] < b[1]);
  });
  pts.erase(std::unique(pts.begin(), pts.end(),
                        [](const Coord& a, const Coord& b) { return a[0] == b[0] && a[1] == b[1]; }),
            pts.end());
  if (pts.size() < 3) throw DegenerateHull("convex hull needs at least 3 distinct points");
  const double scale = point_scale(pts, 2);
  const double tol = 1e-14 * scale * scale;
  std::vector<Coord> chain(2 * pts.size());
  std::size_t k = 0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    while (k >= 2 && cross2(chain[k - 2], chain[k - 1], pts[i]) <= tol) --k;
    chain[k++] = pts[i];
  }
  for (std::size_t i = pts.size() - 1, lower = k + 1; i-- > 0;) {
    while (k >= lower && cross2(chain[k - 2], chain[k - 1], pts[i]) <= tol) --k;
    chain[k++] = pts[i];
  }
  chain.resize(k - 1);
  if (chain.size() < 3) throw DegenerateHull("points are collinear");
  std::vector<std::array<int, 3>> segs;
  for (std::size_t i = 0; i < chain.size(); ++i) {
    segs.push_back({static_cast<int>(i), static_cast<int>((i + 1) % chain.size()), -1});
  }
  return make_mesh(2, std::move(chain), std::move(segs));
}

// Incremental hull with conflict lists: each face keeps the points above
// it; the farthest one is added next and the visible region is replaced by
// a cone over its horizon.
class Hull3 {
 public:
  explicit Hull3(const std::vector<Coord>& pts) : p_(pts) {
    eps_ = 1e-12 * point_scale(p_, 3);
    build();
  }

  ContourMesh mesh() const {
    std::vector<int> remap(p_.size(), -1);
    std::vector<Coord> verts;
    std::vector<std::array<int, 3>> tris;
    for (const Face& f : faces_) {
      if (!f.alive) continue;
      std::array<int, 3> t{};
      for (int i = 0; i < 3; ++i) {
        int& r = remap[f.v[i]];
        if (r < 0) {
          r = static_cast<int>(verts.size());
          verts.push_back(p_[f.v[i]]);
        }
        t[i] = r;
      }
      tris.push_back(t);
    }
    return make_mesh(3, std::move(verts), std::move(tris));
  }

 private:
  struct Face {
    std::array<int, 3> v{};
    Coord normal{};
    double offset = 0.0;
    bool alive = true;
    std::vector<int> outside;
  };

  static std::uint64_t key(int a, int b) {
    return (static_cast<std::uint64_t>(a) << 32) | static_cast<std::uint32_t>(b);
  }

  double height(const Face& f, int i) const { return dot(f.normal, p_[i], 3) - f.offset; }

  int add_face(int a, int b, int c) {
    Face f;
    f.v = {a, b, c};
    Coord n = cross3(sub(p_[b], p_[a]), sub(p_[c], p_[a]));
    const double len = norm(n, 3);
    for (int i = 0; i < 3; ++i) n[i] /= len;
    f.normal = n;
    f.offset = dot(n, p_[a], 3);
    const int id = static_cast<int>(faces_.size());
    for (int i = 0; i < 3; ++i) edges_[key(f.v[i], f.v[(i + 1) % 3])] = id;
    faces_.push_back(std::move(f));
    return id;
  }

  void build() {
    const int n = static_cast<int>(p_.size());
    if (n < 4) throw DegenerateHull("convex hull needs at least 4 points");
    // Initial simplex: extreme x, farthest from it, farthest from that line,
    // farthest from that plane.
    int i0 = 0;
    for (int i = 1; i < n; ++i) {
      if (p_[i][0] < p_[i0][0]) i0 = i;
    }
    auto farthest = [&](auto dist) {
      int best = -1;
      double bd = 0.0;
      for (int i = 0; i < n; ++i) {
        const double d = dist(i);
        if (d > bd) {
          bd = d;
          best = i;
        }
      }
      return std::pair{best, bd};
    };
    auto [i1, d1] = farthest([&](int i) { return norm(sub(p_[i], p_[i0]), 3); });
    if (i1 < 0 || d1 <= eps_) throw DegenerateHull("points coincide");
    const Coord axis = sub(p_[i1], p_[i0]);
    auto [i2, d2] = farthest([&](int i) {
      return norm(cross3(axis, sub(p_[i], p_[i0])), 3) / norm(axis, 3);
    });
    if (i2 < 0 || d2 <= eps_) throw DegenerateHull("points are collinear");
    Coord pn = cross3(axis, sub(p_[i2], p_[i0]));
    const double pl = norm(pn, 3);
    for (int a = 0; a < 3; ++a) pn[a] /= pl;
    auto [i3, d3] = farthest([&](int i) { return std::abs(dot(pn, sub(p_[i], p_[i0]), 3)); });
    if (i3 < 0 || d3 <= eps_) throw DegenerateHull("points are coplanar");

    if (dot(pn, sub(p_[i3], p_[i0]), 3) > 0.0) std::swap(i1, i2);
    // Now i3 lies below the plane (i0, i1, i2) oriented by the right-hand rule.
    add_face(i0, i1, i2);
    add_face(i0, i3, i1);
    add_face(i1, i3, i2);
    add_face(i2, i3, i0);

    std::vector<int> all;
    for (int i = 0; i < n; ++i) {
      if (i != i0 && i != i1 && i != i2 && i != i3) all.push_back(i);
    }
    assign(all, {0, 1, 2, 3});

    for (std::size_t fi = 0; fi < faces_.size(); ++fi) {
      while (faces_[fi].alive && !faces_[fi].outside.empty()) add_point(static_cast<int>(fi));
    }
  }

  void assign(const std::vector<int>& points, const std::vector<int>& candidates) {
    for (int i : points) {
      for (int f : candidates) {
        if (height(faces_[f], i) > eps_) {
          faces_[f].outside.push_back(i);
          break;
        }
      }
    }
  }

  void add_point(int start) {
    const Face& sf = faces_[start];
    int apex = sf.outside.front();
    double best = height(sf, apex);
    for (int i : sf.outside) {
      const double h = height(sf, i);
      if (h > best) {
        best = h;
        apex = i;
      }
    }
    // Visible region by flood fill from the start face.
    std::vector<int> visible{start};
    std::vector<char> seen(faces_.size(), 0);
    seen[start] = 1;
    for (std::size_t q = 0; q < visible.size(); ++q) {
      const Face& f = faces_[visible[q]];
      for (int e = 0; e < 3; ++e) {
        const int g = edges_.at(key(f.v[(e + 1) % 3], f.v[e]));
        if (seen[g]) continue;
        seen[g] = 1;
        if (height(faces_[g], apex) > eps_) visible.push_back(g);
      }
    }
    std::vector<char> is_visible(faces_.size(), 0);
    for (int f : visible) is_visible[f] = 1;
    std::vector<std::pair<int, int>> horizon;
    std::vector<int> orphans;
    for (int fi : visible) {
      Face& f = faces_[fi];
      for (int e = 0; e < 3; ++e) {
        const int a = f.v[e], b = f.v[(e + 1) % 3];
        if (!is_visible[edges_.at(key(b, a))]) horizon.emplace_back(a, b);
      }
      for (int i : f.outside) {
        if (i != apex) orphans.push_back(i);
      }
      f.outside.clear();
      f.alive = false;
    }
    for (int fi : visible) {
      const Face& f = faces_[fi];
      for (int e = 0; e < 3; ++e) {
        const auto it = edges_.find(key(f.v[e], f.v[(e + 1) % 3]));
        if (it != edges_.end() && it->second == fi) edges_.erase(it);
      }
    }
    std::vector<int> created;
    for (const auto& [a, b] : horizon) created.push_back(add_face(a, b, apex));
    assign(orphans, created);
  }

  std::vector<Coord> p_;
  double eps_ = 0.0;
  std::vector<Face> faces_;
  std::unordered_map<std::uint64_t, int> edges_;
};

}  // namespace detail

/// Convex hull of the mesh vertices: a counter-clockwise polygon (2D) or an
/// outward-oriented triangulated polytope (3D). Points on the hull boundary
/// that are not extreme are dropped.
inline ContourMesh convex_hull(const ContourMesh& mesh) {
  if (mesh.vertices.empty()) throw std::invalid_argument("convex hull of an empty mesh");
  if (mesh.dim == 2) return detail::hull_2d(mesh.vertices);
  if (mesh.dim == 3) return detail::Hull3(mesh.vertices).mesh();
  throw std::invalid_argument("convex hull needs a 2D or 3D mesh");
}

/// Whether every vertex lies on the inner side of every element (within a
/// relative tolerance) and the mesh is closed.
inline bool is_convex(const ContourMesh& m, double rel_tol = 1e-9) {
  if (!m.closed) return false;
  const double tol = rel_tol * detail::point_scale(m.vertices, m.dim);
  for (const auto& e : m.elements) {
    Coord n{};
    Coord o = m.vertices[e[0]];
    if (m.dim == 2) {
      const Coord d = sub(m.vertices[e[1]], o);
      n = {d[1], -d[0], 0.0, 0.0};
    } else {
      n = detail::cross3(sub(m.vertices[e[1]], o), sub(m.vertices[e[2]], o));
    }
    const double len = norm(n, m.dim);
    if (!(len > 0.0)) return false;
    for (const auto& v : m.vertices) {
      if (dot(n, sub(v, o), m.dim) / len > tol) return false;
    }
  }
  return true;
}

/// Whether x lies in the convex body bounded by a convex mesh.
inline bool hull_contains(const ContourMesh& hull, const Coord& x, double rel_tol = 1e-9) {
  const double tol = rel_tol * detail::point_scale(hull.vertices, hull.dim);
  for (const auto& e : hull.elements) {
    const Coord o = hull.vertices[e[0]];
    Coord n{};
    if (hull.dim == 2) {
      const Coord d = sub(hull.vertices[e[1]], o);
      n = {d[1], -d[0], 0.0, 0.0};
    } else {
      n = detail::cross3(sub(hull.vertices[e[1]], o), sub(hull.vertices[e[2]], o));
    }
    const double len = norm(n, hull.dim);
    if (dot(n, sub(x, o), hull.dim) / len > tol) return false;
  }
  return true;
}

/// Boundary measure of the outer parallel body at distance s of a convex
/// polytope: P + 2 pi s in 2D, S + s sum(l_e theta_e) + 4 pi s^2 in 3D with
/// theta_e the exterior dihedral angle at edge e.
inline double parallel_body_measure(const ContourMesh& hull, double s) {
  if (!is_convex(hull)) throw NonConvexHull("parallel body of a nonconvex mesh");
  const double base = mesh_measure(hull);
  if (hull.dim == 2) return base + 2.0 * std::numbers::pi * s;
  std::vector<Coord> normals;
  for (const auto& e : hull.elements) {
    Coord n = detail::cross3(sub(hull.vertices[e[1]], hull.vertices[e[0]]),
                             sub(hull.vertices[e[2]], hull.vertices[e[0]]));
    const double len = norm(n, 3);
    for (int a = 0; a < 3; ++a) n[a] /= len;
    normals.push_back(n);
  }
  std::unordered_map<std::uint64_t, int> owner;
  for (std::size_t f = 0; f < hull.elements.size(); ++f) {
    const auto& e = hull.elements[f];
    for (int i = 0; i < 3; ++i) {
      owner[(static_cast<std::uint64_t>(e[i]) << 32) | static_cast<std::uint32_t>(e[(i + 1) % 3])] =
          static_cast<int>(f);
    }
  }
  double turning = 0.0;
  for (std::size_t f = 0; f < hull.elements.size(); ++f) {
    const auto& e = hull.elements[f];
    for (int i = 0; i < 3; ++i) {
      const int a = e[i], b = e[(i + 1) % 3];
      if (a > b) continue;
      const int g = owner.at((static_cast<std::uint64_t>(b) << 32) | static_cast<std::uint32_t>(a));
      const double c = std::clamp(dot(normals[f], normals[g], 3), -1.0, 1.0);
      turning += norm(sub(hull.vertices[b], hull.vertices[a]), 3) * std::acos(c);
    }
  }
  return base + s * turning + 4.0 * std::numbers::pi * s * s;
}

/// (1/n^n) times the integral of (|H| s + n)^n over the mesh, with the
/// integrand averaged over element vertices.
inline double offset_growth_rhs(const ContourMesh& mesh, const VertexCurvature& vc, double s) {
  const int n = mesh.dim - 1;
  const int nv = mesh.vertices_per_element();
  double total = 0.0;
  for (std::size_t e = 0; e < mesh.elements.size(); ++e) {
    double avg = 0.0;
    for (int i = 0; i < nv; ++i) {
      avg += std::pow(std::abs(vc.curvature[mesh.elements[e][i]]) * s + n, n);
    }
    total += mesh.element_measure[e] * avg / nv;
  }
  return total / std::pow(static_cast<double>(n), n);
}

struct OffsetGrowthReport {
  double s = 0.0;
  double lhs = 0.0;
  double rhs = 0.0;
  double slack = 0.03;
  bool passed = false;
};

/// Compares the parallel-body boundary measure of `hull` at distance s with
/// the curvature integral over the level set {u = t}. Passes when
/// lhs <= rhs (1 + slack).
inline OffsetGrowthReport offset_growth_check(const ContourMesh& hull, const CurvatureField& field,
                                              const ContourMesh& level_set, double s,
                                              double slack = 0.03) {
  if (!(s >= 0.0)) throw std::invalid_argument("offset distance must be nonnegative");
  OffsetGrowthReport r;
  r.s = s;
  r.slack = slack;
  r.lhs = parallel_body_measure(hull, s);
  r.rhs = offset_growth_rhs(level_set, sample_vertices(field, level_set), s);
  r.passed = r.lhs <= r.rhs * (1.0 + slack);
  return r;
}

inline OffsetGrowthReport offset_growth_check(const ContourMesh& hull, const ScalarField& u,
                                              double t, double s, double slack = 0.03) {
  const CurvatureField field(u);
  return offset_growth_check(hull, field, extract_level_set(u, t), s, slack);
}

}  // namespace hkflow
