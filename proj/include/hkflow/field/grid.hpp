#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <sstream>
#include <stdexcept>

namespace hkflow {

/// Largest ambient dimension a grid may carry. Solvers run in 2 and 3
/// dimensions; 4 is reserved for the translating-graph slab of a 3D field.
inline constexpr int kMaxDim = 4;

using Coord = std::array<double, kMaxDim>;
using NodeIndex = std::array<int, kMaxDim>;

inline double dot(const Coord& a, const Coord& b, int dim) {
  double s = 0.0;
  for (int i = 0; i < dim; ++i) s += a[i] * b[i];
  return s;
}

inline double norm(const Coord& a, int dim) { return std::sqrt(dot(a, a, dim)); }

inline Coord sub(const Coord& a, const Coord& b) {
  Coord r{};
  for (int i = 0; i < kMaxDim; ++i) r[i] = a[i] - b[i];
  return r;
}

/// Uniform Cartesian grid, same spacing on every axis. Nodes are stored in
/// lexicographic order: the last axis varies fastest.
class CartesianGrid {
 public:
  CartesianGrid() = default;

  CartesianGrid(int dim, const NodeIndex& counts, double spacing,
                const Coord& origin)
      : dim_(dim), counts_(counts), h_(spacing), origin_(origin) {
    if (dim < 1 || dim > kMaxDim) {
      throw std::invalid_argument("grid dimension must be in [1, 4]");
    }
    if (!(spacing > 0.0) || !std::isfinite(spacing)) {
      throw std::invalid_argument("grid spacing must be positive");
    }
    for (int a = 0; a < dim; ++a) {
      if (counts[a] < 3) {
        std::ostringstream ss;
        ss << "grid needs at least 3 nodes per axis, axis " << a << " has "
           << counts[a];
        throw std::invalid_argument(ss.str());
      }
    }
    for (int a = dim; a < kMaxDim; ++a) {
      counts_[a] = 1;
      origin_[a] = 0.0;
    }
    std::ptrdiff_t s = 1;
    for (int a = dim - 1; a >= 0; --a) {
      strides_[a] = s;
      s *= counts_[a];
    }
    size_ = static_cast<std::size_t>(s);
  }

  int dim() const { return dim_; }
  double spacing() const { return h_; }
  int count(int axis) const { return counts_[axis]; }
  const NodeIndex& counts() const { return counts_; }
  const Coord& origin() const { return origin_; }
  std::size_t size() const { return size_; }
  std::ptrdiff_t stride(int axis) const { return strides_[axis]; }

  /// Physical extent along one axis (first node to last node).
  double extent(int axis) const { return h_ * (counts_[axis] - 1); }

  std::size_t linear(const NodeIndex& idx) const {
    std::ptrdiff_t l = 0;
    for (int a = 0; a < dim_; ++a) l += idx[a] * strides_[a];
    return static_cast<std::size_t>(l);
  }

  NodeIndex multi(std::size_t node) const {
    NodeIndex idx{};
    auto rest = static_cast<std::ptrdiff_t>(node);
    for (int a = 0; a < dim_; ++a) {
      idx[a] = static_cast<int>(rest / strides_[a]);
      rest -= idx[a] * strides_[a];
    }
    return idx;
  }

  bool contains(const NodeIndex& idx) const {
    for (int a = 0; a < dim_; ++a) {
      if (idx[a] < 0 || idx[a] >= counts_[a]) return false;
    }
    return true;
  }

  /// True if the node has both face neighbours along every axis.
  bool has_all_neighbors(const NodeIndex& idx) const {
    for (int a = 0; a < dim_; ++a) {
      if (idx[a] <= 0 || idx[a] >= counts_[a] - 1) return false;
    }
    return true;
  }

  Coord position(const NodeIndex& idx) const {
    Coord x{};
    for (int a = 0; a < dim_; ++a) x[a] = origin_[a] + h_ * idx[a];
    return x;
  }

  Coord position(std::size_t node) const { return position(multi(node)); }

 private:
  int dim_ = 2;
  NodeIndex counts_{};
  double h_ = 1.0;
  Coord origin_{};
  std::array<std::ptrdiff_t, kMaxDim> strides_{};
  std::size_t size_ = 0;
};

}  // namespace hkflow
