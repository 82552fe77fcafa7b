#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "hkflow/field/scalar_field.hpp"

namespace hkflow {

/// No grid edge crosses the requested level.
class EmptyLevelSet : public std::runtime_error {
 public:
  explicit EmptyLevelSet(double level)
      : std::runtime_error(message(level)), level_(level) {}
  double level() const { return level_; }

 private:
  static std::string message(double level) {
    std::ostringstream ss;
    ss << "level set is empty at t = " << level;
    return ss.str();
  }
  double level_;
};

/// Polyline (dim 2) or triangle mesh (dim 3) approximating a level set.
/// Segments are oriented with the superlevel set on their left; triangle
/// normals (right-hand rule) point out of the superlevel set.
struct ContourMesh {
  int dim = 2;
  std::vector<Coord> vertices;
  /// Vertex indices; segments use the first two entries.
  std::vector<std::array<int, 3>> elements;
  std::vector<double> element_measure;
  double level = 0.0;
  bool closed = false;

  int vertices_per_element() const { return dim; }
  std::size_t size() const { return elements.size(); }
};

namespace detail {

inline Coord lerp(const Coord& a, const Coord& b, double s) {
  Coord r{};
  for (int i = 0; i < kMaxDim; ++i) r[i] = a[i] + s * (b[i] - a[i]);
  return r;
}

inline Coord cross3(const Coord& a, const Coord& b) {
  return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0], 0.0};
}

inline double element_measure(const ContourMesh& m, const std::array<int, 3>& e) {
  if (m.dim == 2) return norm(sub(m.vertices[e[1]], m.vertices[e[0]]), 2);
  const Coord n = cross3(sub(m.vertices[e[1]], m.vertices[e[0]]),
                         sub(m.vertices[e[2]], m.vertices[e[0]]));
  return 0.5 * norm(n, 3);
}

/// Node value used by extraction and volume: exterior nodes count as the
/// Dirichlet value 0.
inline double level_value(const std::vector<double>& v, std::size_t p) {
  return std::isnan(v[p]) ? 0.0 : v[p];
}

/// Position of the level crossing on the edge from node a to node b.
inline Coord edge_crossing(const CartesianGrid& g, std::size_t a, std::size_t b, double va,
                           double vb, double t) {
  double s = (t - va) / (vb - va);
  s = std::clamp(s, 1e-9, 1.0 - 1e-9);
  return lerp(g.position(a), g.position(b), s);
}

/// Kuhn split of the unit cube: tetrahedra along the monotone paths
/// 0 -> e_i -> e_i + e_j -> 7, corners as axis bitmasks.
inline constexpr std::array<std::array<int, 4>, 6> kKuhnTets{{
    {0, 1, 3, 7},
    {0, 1, 5, 7},
    {0, 2, 3, 7},
    {0, 2, 6, 7},
    {0, 4, 5, 7},
    {0, 4, 6, 7},
}};

inline std::size_t corner_node(const CartesianGrid& g, std::size_t base, int bits) {
  std::ptrdiff_t off = 0;
  for (int a = 0; a < 3; ++a) {
    if (bits & (1 << a)) off += g.stride(a);
  }
  return static_cast<std::size_t>(static_cast<std::ptrdiff_t>(base) + off);
}

inline bool check_closed(const ContourMesh& m) {
  if (m.elements.empty()) return false;
  if (m.dim == 2) {
    std::vector<int> in(m.vertices.size(), 0), out(m.vertices.size(), 0);
    for (const auto& e : m.elements) {
      ++out[e[0]];
      ++in[e[1]];
    }
    for (std::size_t i = 0; i < m.vertices.size(); ++i) {
      if (in[i] != 1 || out[i] != 1) return false;
    }
    return true;
  }
  // Every directed edge must appear once and its reverse once.
  std::map<std::pair<int, int>, int> directed;
  for (const auto& e : m.elements) {
    for (int i = 0; i < 3; ++i) ++directed[{e[i], e[(i + 1) % 3]}];
  }
  for (const auto& [edge, count] : directed) {
    if (count != 1) return false;
    const auto rev = directed.find({edge.second, edge.first});
    if (rev == directed.end() || rev->second != 1) return false;
  }
  return true;
}

inline void finish_mesh(ContourMesh& m) {
  m.element_measure.resize(m.elements.size());
  for (std::size_t i = 0; i < m.elements.size(); ++i) {
    m.element_measure[i] = element_measure(m, m.elements[i]);
  }
  m.closed = check_closed(m);
}

inline ContourMesh extract_2d(const CartesianGrid& g, const std::vector<double>& v, double t) {
  ContourMesh mesh;
  mesh.dim = 2;
  mesh.level = t;
  std::vector<int> edge_vertex(g.size() * 2, -1);

  // Vertex on the grid edge from `lo` along `axis`.
  auto vertex = [&](std::size_t lo, int axis) {
    int& id = edge_vertex[lo * 2 + static_cast<std::size_t>(axis)];
    if (id < 0) {
      const std::size_t hi = lo + static_cast<std::size_t>(g.stride(axis));
      id = static_cast<int>(mesh.vertices.size());
      mesh.vertices.push_back(
          edge_crossing(g, lo, hi, level_value(v, lo), level_value(v, hi), t));
    }
    return id;
  };

  const int nx = g.count(0);
  const int ny = g.count(1);
  for (int i = 0; i + 1 < nx; ++i) {
    for (int j = 0; j + 1 < ny; ++j) {
      const std::size_t p0 = g.linear({i, j, 0, 0});
      const std::array<std::size_t, 4> c{p0, p0 + static_cast<std::size_t>(g.stride(0)),
                                         p0 + static_cast<std::size_t>(g.stride(0) + g.stride(1)),
                                         p0 + static_cast<std::size_t>(g.stride(1))};
      std::array<double, 4> val{};
      std::array<bool, 4> in{};
      int inside = 0;
      for (int q = 0; q < 4; ++q) {
        val[q] = level_value(v, c[q]);
        in[q] = val[q] >= t;
        inside += in[q];
      }
      if (inside == 0 || inside == 4) continue;

      // Edge q joins corner q to corner q+1 (counter-clockwise).
      auto edge_vertex_id = [&](int q) {
        switch (q) {
          case 0: return vertex(c[0], 0);
          case 1: return vertex(c[1], 1);
          case 2: return vertex(c[3], 0);
          default: return vertex(c[0], 1);
        }
      };
      std::array<int, 4> leaving{};   // inside -> outside along the walk
      std::array<int, 4> entering{};  // outside -> inside
      int nl = 0, ne = 0;
      std::array<int, 4> kind{};      // 1 leaving, 2 entering, 0 none
      for (int q = 0; q < 4; ++q) {
        const bool a = in[q];
        const bool b = in[(q + 1) % 4];
        if (a && !b) {
          leaving[nl++] = q;
          kind[q] = 1;
        } else if (!a && b) {
          entering[ne++] = q;
          kind[q] = 2;
        }
      }
      if (nl == 1) {
        mesh.elements.push_back({edge_vertex_id(leaving[0]), edge_vertex_id(entering[0]), -1});
        continue;
      }
      // Saddle: the cell average decides whether the inside corners connect.
      const bool connected = 0.25 * (val[0] + val[1] + val[2] + val[3]) >= t;
      for (int k = 0; k < 2; ++k) {
        const int q = leaving[k];
        const int partner = connected ? (q + 1) % 4 : (q + 3) % 4;
        if (kind[partner] != 2) throw std::logic_error("inconsistent saddle cell");
        mesh.elements.push_back({edge_vertex_id(q), edge_vertex_id(partner), -1});
      }
    }
  }
  return mesh;
}

inline ContourMesh extract_3d(const CartesianGrid& g, const std::vector<double>& v, double t) {
  ContourMesh mesh;
  mesh.dim = 3;
  mesh.level = t;
  std::vector<int> edge_vertex(g.size() * 8, -1);

  // Vertex on the Kuhn edge from `lo` to `lo + offset(bits)`.
  auto vertex = [&](std::size_t lo, int bits) {
    int& id = edge_vertex[lo * 8 + static_cast<std::size_t>(bits)];
    if (id < 0) {
      const std::size_t hi = corner_node(g, lo, bits);
      id = static_cast<int>(mesh.vertices.size());
      mesh.vertices.push_back(
          edge_crossing(g, lo, hi, level_value(v, lo), level_value(v, hi), t));
    }
    return id;
  };

  auto add_oriented = [&](int a, int b, int c, const Coord& outward) {
    const Coord n = cross3(sub(mesh.vertices[b], mesh.vertices[a]),
                           sub(mesh.vertices[c], mesh.vertices[a]));
    if (dot(n, outward, 3) < 0.0) std::swap(b, c);
    mesh.elements.push_back({a, b, c});
  };

  const int nx = g.count(0), ny = g.count(1), nz = g.count(2);
  for (int i = 0; i + 1 < nx; ++i) {
    for (int j = 0; j + 1 < ny; ++j) {
      for (int k = 0; k + 1 < nz; ++k) {
        const std::size_t base = g.linear({i, j, k, 0});
        std::array<double, 8> val{};
        int inside = 0;
        for (int b = 0; b < 8; ++b) {
          val[b] = level_value(v, corner_node(g, base, b));
          inside += val[b] >= t;
        }
        if (inside == 0 || inside == 8) continue;

        for (const auto& tet : kKuhnTets) {
          std::array<int, 4> ins{}, outs{};
          int ni = 0, no = 0;
          for (int b : tet) {
            if (val[b] >= t) ins[ni++] = b; else outs[no++] = b;
          }
          if (ni == 0 || no == 0) continue;
          // Kuhn corners are nested bitmasks; the edge starts at the subset.
          auto cut = [&](int a, int b) {
            const int lo = (a & b) == a ? a : b;
            const int hi = lo == a ? b : a;
            return vertex(corner_node(g, base, lo), hi ^ lo);
          };
          auto pos = [&](int b) { return g.position(corner_node(g, base, b)); };
          auto centroid = [&](const std::array<int, 4>& s, int count) {
            Coord c{};
            for (int q = 0; q < count; ++q) {
              const Coord x = pos(s[q]);
              for (int a = 0; a < 3; ++a) c[a] += x[a] / count;
            }
            return c;
          };
          const Coord outward = sub(centroid(outs, no), centroid(ins, ni));
          if (ni == 1) {
            add_oriented(cut(ins[0], outs[0]), cut(ins[0], outs[1]), cut(ins[0], outs[2]), outward);
          } else if (ni == 3) {
            add_oriented(cut(outs[0], ins[0]), cut(outs[0], ins[1]), cut(outs[0], ins[2]), outward);
          } else {
            const int ac = cut(ins[0], outs[0]);
            const int ad = cut(ins[0], outs[1]);
            const int bd = cut(ins[1], outs[1]);
            const int bc = cut(ins[1], outs[0]);
            add_oriented(ac, ad, bd, outward);
            add_oriented(ac, bd, bc, outward);
          }
        }
      }
    }
  }
  return mesh;
}

}  // namespace detail

/// Extracts the boundary of {u >= t} by marching squares (2D, saddles by the
/// cell average) or marching tetrahedra on the Kuhn split (3D), with linear
/// interpolation along grid edges. Exterior nodes take the Dirichlet value 0.
inline ContourMesh extract_level_set(const ScalarField& u, double t) {
  const CartesianGrid& g = u.grid();
  if (t >= u.max_inside()) throw EmptyLevelSet(t);
  ContourMesh mesh;
  if (g.dim() == 2) {
    mesh = detail::extract_2d(g, u.values(), t);
  } else if (g.dim() == 3) {
    mesh = detail::extract_3d(g, u.values(), t);
  } else {
    throw std::invalid_argument("level sets are extracted in 2 or 3 dimensions");
  }
  if (mesh.elements.empty()) throw EmptyLevelSet(t);
  detail::finish_mesh(mesh);
  return mesh;
}

/// Builds a mesh from explicit vertices and elements (measures and the
/// closed flag are computed).
inline ContourMesh make_mesh(int dim, std::vector<Coord> vertices,
                             std::vector<std::array<int, 3>> elements, double level = 0.0) {
  if (dim != 2 && dim != 3) throw std::invalid_argument("mesh dimension must be 2 or 3");
  ContourMesh m;
  m.dim = dim;
  m.vertices = std::move(vertices);
  m.elements = std::move(elements);
  m.level = level;
  for (const auto& e : m.elements) {
    for (int i = 0; i < dim; ++i) {
      if (e[i] < 0 || static_cast<std::size_t>(e[i]) >= m.vertices.size()) {
        throw std::invalid_argument("element references a missing vertex");
      }
    }
  }
  detail::finish_mesh(m);
  return m;
}

/// Total length (2D) or area (3D).
inline double mesh_measure(const ContourMesh& m) {
  double s = 0.0;
  for (double x : m.element_measure) s += x;
  return s;
}

/// Signed area (2D) or volume (3D) enclosed by a closed oriented mesh.
inline double mesh_enclosed_measure(const ContourMesh& m) {
  double s = 0.0;
  if (m.dim == 2) {
    for (const auto& e : m.elements) {
      const Coord& a = m.vertices[e[0]];
      const Coord& b = m.vertices[e[1]];
      s += 0.5 * (a[0] * b[1] - a[1] * b[0]);
    }
  } else {
    for (const auto& e : m.elements) {
      s += dot(m.vertices[e[0]], detail::cross3(m.vertices[e[1]], m.vertices[e[2]]), 3) / 6.0;
    }
  }
  return s;
}

/// Triangulated sphere: an icosahedron subdivided `subdivisions` times with
/// vertices projected to the sphere, normals outward.
inline ContourMesh icosphere(int subdivisions, double radius = 1.0, const Coord& center = {}) {
  if (subdivisions < 0) throw std::invalid_argument("subdivisions must be nonnegative");
  if (!(radius > 0.0)) throw std::invalid_argument("radius must be positive");
  const double phi = (1.0 + std::sqrt(5.0)) / 2.0;
  std::vector<Coord> v{{-1, phi, 0, 0}, {1, phi, 0, 0},  {-1, -phi, 0, 0}, {1, -phi, 0, 0},
                       {0, -1, phi, 0}, {0, 1, phi, 0},  {0, -1, -phi, 0}, {0, 1, -phi, 0},
                       {phi, 0, -1, 0}, {phi, 0, 1, 0},  {-phi, 0, -1, 0}, {-phi, 0, 1, 0}};
  std::vector<std::array<int, 3>> f{{0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11},
                                    {1, 5, 9},  {5, 11, 4}, {11, 10, 2}, {10, 7, 6}, {7, 1, 8},
                                    {3, 9, 4},  {3, 4, 2},  {3, 2, 6},   {3, 6, 8},  {3, 8, 9},
                                    {4, 9, 5},  {2, 4, 11}, {6, 2, 10},  {8, 6, 7},  {9, 8, 1}};
  auto project = [](Coord x) {
    const double r = norm(x, 3);
    for (int a = 0; a < 3; ++a) x[a] /= r;
    return x;
  };
  for (auto& x : v) x = project(x);
  for (int level = 0; level < subdivisions; ++level) {
    std::map<std::pair<int, int>, int> mid;
    auto midpoint = [&](int a, int b) {
      const auto key = std::minmax(a, b);
      const auto it = mid.find(key);
      if (it != mid.end()) return it->second;
      const int id = static_cast<int>(v.size());
      v.push_back(project(detail::lerp(v[a], v[b], 0.5)));
      mid.emplace(key, id);
      return id;
    };
    std::vector<std::array<int, 3>> next;
    next.reserve(f.size() * 4);
    for (const auto& t : f) {
      const int ab = midpoint(t[0], t[1]);
      const int bc = midpoint(t[1], t[2]);
      const int ca = midpoint(t[2], t[0]);
      next.push_back({t[0], ab, ca});
      next.push_back({t[1], bc, ab});
      next.push_back({t[2], ca, bc});
      next.push_back({ab, bc, ca});
    }
    f.swap(next);
  }
  for (auto& x : v) {
    for (int a = 0; a < 3; ++a) x[a] = center[a] + radius * x[a];
  }
  return make_mesh(3, std::move(v), std::move(f));
}

/// Writes "v x y [z]" and "e i j [k]" records, one per line.
inline void write_mesh(std::ostream& os, const ContourMesh& m) {
  char buf[128];
  for (const auto& x : m.vertices) {
    if (m.dim == 2) {
      std::snprintf(buf, sizeof buf, "v %.17g %.17g\n", x[0], x[1]);
    } else {
      std::snprintf(buf, sizeof buf, "v %.17g %.17g %.17g\n", x[0], x[1], x[2]);
    }
    os << buf;
  }
  for (const auto& e : m.elements) {
    os << "e " << e[0] << ' ' << e[1];
    if (m.dim == 3) os << ' ' << e[2];
    os << '\n';
  }
}

/// Reads the format of write_mesh. Blank lines and lines starting with '#'
/// are skipped.
inline ContourMesh read_mesh(std::istream& is, int dim, double level = 0.0) {
  std::vector<Coord> verts;
  std::vector<std::array<int, 3>> elems;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    std::istringstream ss(line);
    std::string tag;
    if (!(ss >> tag) || tag[0] == '#') continue;
    auto fail = [&](const char* what) {
      std::ostringstream msg;
      msg << "mesh line " << lineno << ": " << what;
      throw std::invalid_argument(msg.str());
    };
    if (tag == "v") {
      Coord x{};
      for (int a = 0; a < dim; ++a) {
        if (!(ss >> x[a])) fail("expected vertex coordinates");
      }
      verts.push_back(x);
    } else if (tag == "e") {
      std::array<int, 3> e{-1, -1, -1};
      for (int a = 0; a < dim; ++a) {
        if (!(ss >> e[a])) fail("expected vertex indices");
      }
      elems.push_back(e);
    } else {
      fail("unknown record tag");
    }
    std::string extra;
    if (ss >> extra) fail("trailing fields");
  }
  return make_mesh(dim, std::move(verts), std::move(elems), level);
}

}  // namespace hkflow
