#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <cstdint>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "hkflow/geometry/contour.hpp"

namespace hkflow {

inline constexpr double kDefaultGradientFloor = 1e-8;

/// More than 1% of the mesh vertices sit where |grad u| is below the floor.
class DegenerateGradient : public std::runtime_error {
 public:
  explicit DegenerateGradient(double fraction)
      : std::runtime_error(message(fraction)), fraction_(fraction) {}
  double fraction() const { return fraction_; }

 private:
  static std::string message(double f) {
    std::ostringstream ss;
    ss << "gradient below floor at " << 100.0 * f << "% of level-set vertices";
    return ss.str();
  }
  double fraction_;
};

namespace detail {

/// Values at the unknowns, with every other node filled by quadratic (linear
/// where only two values are available) extrapolation, `layers` rings deep.
inline std::vector<double> extended_values(const ScalarField& u, int layers) {
  const CartesianGrid& g = u.grid();
  std::vector<double> v(u.values().size(), std::numeric_limits<double>::quiet_NaN());
  for (std::size_t p : u.mask().unknowns()) v[p] = u.values()[p];
  const int dim = g.dim();
  for (int layer = 0; layer < layers; ++layer) {
    std::vector<double> next = v;
    for (std::size_t p = 0; p < v.size(); ++p) {
      if (!std::isnan(v[p])) continue;
      const NodeIndex idx = g.multi(p);
      double sum = 0.0;
      int count = 0;
      for (int a = 0; a < dim; ++a) {
        for (int side = -1; side <= 1; side += 2) {
          NodeIndex q1 = idx, q2 = idx, q3 = idx;
          q1[a] += side;
          q2[a] += 2 * side;
          q3[a] += 3 * side;
          if (!g.contains(q2)) continue;
          const double v1 = v[g.linear(q1)];
          const double v2 = v[g.linear(q2)];
          if (std::isnan(v1) || std::isnan(v2)) continue;
          const double v3 = g.contains(q3) ? v[g.linear(q3)] : std::nan("");
          sum += std::isnan(v3) ? 2.0 * v1 - v2 : 3.0 * v1 - 3.0 * v2 + v3;
          ++count;
        }
      }
      if (count > 0) next[p] = sum / count;
    }
    v.swap(next);
  }
  return v;
}

}  // namespace detail

/// Mean curvature H = -div(grad u / |grad u|) at grid nodes, from central
/// differences of the field extended into the exterior. Nodes with
/// |grad u| below the floor are flagged (the floor is still used in the
/// quotient); nodes without a full stencil are NaN.
class CurvatureField {
 public:
  CurvatureField(const ScalarField& u, double gradient_floor = kDefaultGradientFloor)
      : grid_(u.grid()), floor_(gradient_floor) {
    if (!(gradient_floor > 0.0)) throw std::invalid_argument("gradient floor must be positive");
    const std::vector<double> v = detail::extended_values(u, 6);
    const int dim = grid_.dim();
    const double h = grid_.spacing();
    curvature_.assign(v.size(), std::numeric_limits<double>::quiet_NaN());
    gradient_.assign(v.size(), std::numeric_limits<double>::quiet_NaN());
    flagged_.assign(v.size(), 0);
    for (std::size_t p = 0; p < v.size(); ++p) {
      const NodeIndex idx = grid_.multi(p);
      bool full = true;
      for (int a = 0; a < dim; ++a) {
        if (idx[a] < 1 || idx[a] + 1 >= grid_.count(a)) full = false;
      }
      if (!full) continue;
      auto at = [&](int a, int da, int b, int db) {
        NodeIndex q = idx;
        q[a] += da;
        q[b] += db;
        return v[grid_.linear(q)];
      };
      double grad[kMaxDim] = {};
      double hess[kMaxDim][kMaxDim] = {};
      bool finite = std::isfinite(v[p]);
      for (int a = 0; a < dim && finite; ++a) {
        const double fp = at(a, 1, a, 0);
        const double fm = at(a, -1, a, 0);
        grad[a] = (fp - fm) / (2 * h);
        hess[a][a] = (fp - 2 * v[p] + fm) / (h * h);
        for (int b = a + 1; b < dim; ++b) {
          hess[a][b] = hess[b][a] =
              (at(a, 1, b, 1) - at(a, 1, b, -1) - at(a, -1, b, 1) + at(a, -1, b, -1)) /
              (4 * h * h);
        }
        finite = std::isfinite(grad[a]) && std::isfinite(hess[a][a]);
      }
      if (!finite) continue;
      double g2 = 0.0, lap = 0.0, quad = 0.0;
      for (int a = 0; a < dim; ++a) {
        g2 += grad[a] * grad[a];
        lap += hess[a][a];
        for (int b = 0; b < dim; ++b) quad += grad[a] * hess[a][b] * grad[b];
      }
      if (!std::isfinite(quad)) continue;
      double g = std::sqrt(g2);
      gradient_[p] = g;
      if (g < floor_) {
        flagged_[p] = 1;
        g = floor_;
      }
      curvature_[p] = -(lap * g * g - quad) / (g * g * g);
    }
  }

  const CartesianGrid& grid() const { return grid_; }
  double gradient_floor() const { return floor_; }
  double curvature(std::size_t node) const { return curvature_[node]; }
  double gradient(std::size_t node) const { return gradient_[node]; }
  bool flagged(std::size_t node) const { return flagged_[node] != 0; }

  struct Sample {
    double curvature = 0.0;
    double gradient = 0.0;
    /// A corner of the interpolation cell is flagged or undefined.
    bool flagged = false;
  };

  /// Multilinear interpolation from the corners of the cell containing x.
  Sample sample(const Coord& x) const {
    const int dim = grid_.dim();
    const double h = grid_.spacing();
    NodeIndex base{};
    double frac[kMaxDim] = {};
    for (int a = 0; a < dim; ++a) {
      const double s = (x[a] - grid_.origin()[a]) / h;
      int i = static_cast<int>(std::floor(s));
      i = std::clamp(i, 0, grid_.count(a) - 2);
      base[a] = i;
      frac[a] = std::clamp(s - i, 0.0, 1.0);
    }
    Sample out;
    double wsum = 0.0;
    for (int corner = 0; corner < (1 << dim); ++corner) {
      NodeIndex q = base;
      double w = 1.0;
      for (int a = 0; a < dim; ++a) {
        const bool up = (corner >> a) & 1;
        q[a] += up;
        w *= up ? frac[a] : 1.0 - frac[a];
      }
      const std::size_t n = grid_.linear(q);
      if (std::isnan(curvature_[n])) {
        out.flagged = true;
        continue;
      }
      out.flagged = out.flagged || flagged_[n];
      out.curvature += w * curvature_[n];
      out.gradient += w * gradient_[n];
      wsum += w;
    }
    if (wsum > 0.0) {
      out.curvature /= wsum;
      out.gradient /= wsum;
    }
    return out;
  }

 private:
  CartesianGrid grid_;
  double floor_;
  std::vector<double> curvature_;
  std::vector<double> gradient_;
  std::vector<std::uint8_t> flagged_;
};

/// Curvature and gradient sampled at the vertices of a mesh.
struct VertexCurvature {
  std::vector<double> curvature;
  std::vector<double> gradient;
  std::size_t flagged = 0;

  double flagged_fraction() const {
    return curvature.empty() ? 0.0 : static_cast<double>(flagged) / curvature.size();
  }
};

inline VertexCurvature sample_vertices(const CurvatureField& field, const ContourMesh& mesh) {
  VertexCurvature out;
  out.curvature.resize(mesh.vertices.size());
  out.gradient.resize(mesh.vertices.size());
  for (std::size_t i = 0; i < mesh.vertices.size(); ++i) {
    const auto s = field.sample(mesh.vertices[i]);
    out.curvature[i] = s.curvature;
    out.gradient[i] = s.gradient;
    out.flagged += s.flagged;
  }
  return out;
}

/// Sum over elements of measure times the vertex average of |H|^p.
inline double curvature_integral(const ContourMesh& mesh, const VertexCurvature& vc, double p) {
  double total = 0.0;
  const int nv = mesh.vertices_per_element();
  for (std::size_t e = 0; e < mesh.elements.size(); ++e) {
    double avg = 0.0;
    for (int i = 0; i < nv; ++i) {
      avg += std::pow(std::abs(vc.curvature[mesh.elements[e][i]]), p);
    }
    total += mesh.element_measure[e] * avg / nv;
  }
  return total;
}

/// Checks the flagged fraction and integrates |H|^p over the mesh.
inline double mean_curvature_integral(const CurvatureField& field, const ContourMesh& mesh,
                                      double p) {
  const VertexCurvature vc = sample_vertices(field, mesh);
  if (vc.flagged_fraction() > 0.01) throw DegenerateGradient(vc.flagged_fraction());
  return curvature_integral(mesh, vc, p);
}

/// Integral of |H|^p over the level set {u = t}.
inline double mean_curvature_integral(const ScalarField& u, double t, double p,
                                      double gradient_floor = kDefaultGradientFloor) {
  const CurvatureField field(u, gradient_floor);
  return mean_curvature_integral(field, extract_level_set(u, t), p);
}

}  // namespace hkflow
