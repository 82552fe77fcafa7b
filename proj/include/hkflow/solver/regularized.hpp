#pragma once

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseCore>
#include <Eigen/SparseLU>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "hkflow/field/scalar_field.hpp"
#include "hkflow/solver/dual.hpp"
#include "hkflow/solver/stencil.hpp"

namespace hkflow {

/// One Newton iteration as reported to the run log.
struct SolveRecord {
  double epsilon = 0.0;
  double kappa = 0.0;
  int iteration = 0;
  double residual = 0.0;
  double step = 0.0;
  int linear_iterations = 0;
};

using SolveObserver = std::function<void(const SolveRecord&)>;

enum class LinearSolverKind {
  /// ILUT-preconditioned BiCGSTAB, falling back to sparse LU on breakdown.
  bicgstab_ilut,
  sparse_lu,
};

struct SolverParams {
  double k = 1.0;
  double epsilon = 0.5;
  int kappa_steps = 10;
  double newton_tol = 1e-7;
  int newton_max_iters = 40;
  double damping_shrink = 0.5;
  double min_step = 1.0 / 1024.0;
  double linear_tol = 1e-10;
  /// <= 0 selects epsilon * 1e-6.
  double gradient_floor = 0.0;
  int max_bisections = 8;
  LinearSolverKind linear_solver = LinearSolverKind::sparse_lu;
  /// Keep an LU factorization across Newton steps (direct solver only). A
  /// full step from it is taken when it shrinks the residual by
  /// `reuse_contraction`, or by any factor below 0.9 when that rate reaches
  /// newton_tol within `reuse_budget` further steps.
  bool reuse_jacobian = true;
  double reuse_contraction = 0.5;
  int reuse_budget = 12;
  SolveObserver observer;

  double floor() const { return gradient_floor > 0.0 ? gradient_floor : epsilon * 1e-6; }

  void validate() const {
    auto fail = [](const std::string& m) { throw std::invalid_argument(m); };
    if (!(k >= 1.0)) fail("k must be >= 1");
    if (!(epsilon > 0.0)) fail("epsilon must be positive");
    if (kappa_steps < 1) fail("kappa_steps must be >= 1");
    if (!(newton_tol > 0.0)) fail("newton_tol must be positive");
    if (!(linear_tol > 0.0) || !(linear_tol < newton_tol)) {
      fail("linear_tol must be positive and below newton_tol");
    }
    if (newton_max_iters < 1) fail("newton_max_iters must be >= 1");
    if (!(damping_shrink > 0.0 && damping_shrink < 1.0)) fail("damping_shrink must lie in (0, 1)");
    if (!(min_step > 0.0 && min_step <= 1.0)) fail("min_step must lie in (0, 1]");
    if (!(floor() < epsilon)) fail("gradient_floor must be well below epsilon");
    if (max_bisections < 0) fail("max_bisections must be >= 0");
    if (!(reuse_contraction > 0.0 && reuse_contraction < 1.0)) {
      fail("reuse_contraction must lie in (0, 1)");
    }
    if (reuse_budget < 0) fail("reuse_budget must be >= 0");
  }
};

/// Newton ran out of iterations or could not decrease the residual.
class NonConvergence : public std::runtime_error {
 public:
  NonConvergence(int iterations, double residual)
      : std::runtime_error(message(iterations, residual)),
        iterations_(iterations),
        residual_(residual) {}
  int iterations() const { return iterations_; }
  double residual() const { return residual_; }

 private:
  static std::string message(int iterations, double residual) {
    std::ostringstream ss;
    ss << "Newton did not converge after " << iterations
       << " iterations (residual " << residual << ")";
    return ss.str();
  }
  int iterations_;
  double residual_;
};

struct KappaStep {
  double kappa = 0.0;
  int iterations = 0;
};

struct SolverSolution {
  ScalarField u;
  double epsilon = 0.0;
  double kappa = 0.0;
  double residual_norm = 0.0;
  int newton_iterations = 0;
  std::vector<KappaStep> kappa_path;
  /// Smallest inside value; below -newton_tol is reported, never clamped.
  double min_value = 0.0;
  bool negative_values = false;
};

namespace detail {

inline OperatorCoefficients coefficients(const SolverParams& params, double kappa) {
  return {params.epsilon, kappa, params.k};
}

inline double residual_at_node(const ScalarField& u, std::size_t p,
                               const OperatorCoefficients& c) {
  const auto& vals = u.values();
  return residual_at<double>(
      u.grid(), u.mask(), p, [&](std::size_t n, int) { return vals[n]; }, c);
}

}  // namespace detail

/// Discrete residual at every inside node (zero elsewhere in the band,
/// sentinel outside). A root is a discrete solution.
inline ScalarField residual(const ScalarField& u, const SolverParams& params,
                            double kappa = 1.0) {
  const auto c = detail::coefficients(params, kappa);
  std::vector<double> out(u.size(), kExteriorSentinel);
  for (std::size_t p = 0; p < out.size(); ++p) {
    if (u.mask().node_class(p) == NodeClass::boundary_band) out[p] = 0.0;
  }
  for (std::size_t p : u.mask().unknowns()) out[p] = detail::residual_at_node(u, p, c);
  return ScalarField(u.discretization(), std::move(out));
}

inline double sup_norm_inside(const ScalarField& f) {
  double m = 0.0;
  for (std::size_t p : f.mask().unknowns()) m = std::max(m, std::abs(f.values()[p]));
  return m;
}

/// Exact directional derivative of the discrete residual at u along
/// `direction` (both full fields), without forming the Jacobian.
inline ScalarField linearize_apply(const ScalarField& u, const ScalarField& direction,
                                   const SolverParams& params, double kappa = 1.0) {
  if (u.discretization() != direction.discretization()) {
    throw std::invalid_argument("field and direction live on different grids");
  }
  const auto c = detail::coefficients(params, kappa);
  const auto& uv = u.values();
  const auto& dv = direction.values();
  std::vector<double> out(u.size(), kExteriorSentinel);
  for (std::size_t p = 0; p < out.size(); ++p) {
    if (u.mask().node_class(p) == NodeClass::boundary_band) out[p] = 0.0;
  }
  for (std::size_t p : u.mask().unknowns()) {
    const Dual<1> r = residual_at<Dual<1>>(
        u.grid(), u.mask(), p,
        [&](std::size_t n, int) { return Dual<1>(uv[n], {dv[n]}); }, c);
    out[p] = r.d[0];
  }
  return ScalarField(u.discretization(), std::move(out));
}

using SparseMatrix = Eigen::SparseMatrix<double>;

namespace detail {

template <int N>
SparseMatrix assemble_jacobian_impl(const ScalarField& u, const OperatorCoefficients& c) {
  const CartesianGrid& grid = u.grid();
  const DomainMask& mask = u.mask();
  const auto& vals = u.values();
  const int dim = grid.dim();

  std::array<std::ptrdiff_t, N> slot_delta{};
  for (int s = 0; s < N; ++s) {
    int rest = s;
    std::ptrdiff_t delta = 0;
    for (int a = 0; a < dim; ++a) {
      delta += (rest % 3 - 1) * grid.stride(a);
      rest /= 3;
    }
    slot_delta[s] = delta;
  }
  std::vector<std::int64_t> ghost_index(grid.size(), -1);
  for (std::size_t g = 0; g < mask.ghosts().size(); ++g) {
    ghost_index[mask.ghosts()[g]] = static_cast<std::int64_t>(g);
  }

  const auto& unknowns = mask.unknowns();
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(unknowns.size() * (N / 2 + 4));
  for (std::size_t row = 0; row < unknowns.size(); ++row) {
    const std::size_t p = unknowns[row];
    const Dual<N> r = residual_at<Dual<N>>(
        grid, mask, p,
        [&](std::size_t n, int slot) { return Dual<N>::seeded(vals[n], slot); }, c);
    for (int s = 0; s < N; ++s) {
      const double d = r.d[s];
      if (d == 0.0) continue;
      const auto node = static_cast<std::size_t>(static_cast<std::ptrdiff_t>(p) + slot_delta[s]);
      const std::int64_t id = mask.unknown_id(node);
      if (id >= 0) {
        triplets.emplace_back(static_cast<int>(row), static_cast<int>(id), d);
      } else {
        const std::int64_t g = ghost_index[node];
        if (g < 0) throw std::logic_error("stencil read a node without a value");
        for (const GhostTerm& t : mask.ghost_terms(static_cast<std::size_t>(g))) {
          triplets.emplace_back(static_cast<int>(row),
                                static_cast<int>(mask.unknown_id(t.node)), d * t.weight);
        }
      }
    }
  }
  SparseMatrix J(static_cast<Eigen::Index>(unknowns.size()),
                 static_cast<Eigen::Index>(unknowns.size()));
  J.setFromTriplets(triplets.begin(), triplets.end());
  J.makeCompressed();
  return J;
}

}  // namespace detail

/// Jacobian of the residual with respect to the inside-node values, the
/// Dirichlet ghosts being eliminated through their extrapolation weights.
/// Rows and columns follow DomainMask::unknowns().
inline SparseMatrix assemble_jacobian(const ScalarField& u, const SolverParams& params,
                                      double kappa = 1.0) {
  const auto c = detail::coefficients(params, kappa);
  switch (u.grid().dim()) {
    case 2:
      return detail::assemble_jacobian_impl<9>(u, c);
    case 3:
      return detail::assemble_jacobian_impl<27>(u, c);
    default:
      throw std::invalid_argument("Jacobian assembly supports 2 and 3 dimensions");
  }
}

struct LinearSolveStats {
  int iterations = 0;
  bool direct = false;
};

/// Solves J x = b. The iterative path stops at relative residual
/// `linear_tol`; on failure it falls back to sparse LU.
inline Eigen::VectorXd solve_linear(const SparseMatrix& J, const Eigen::VectorXd& b,
                                    const SolverParams& params, LinearSolveStats& stats) {
  if (params.linear_solver == LinearSolverKind::bicgstab_ilut) {
    Eigen::BiCGSTAB<SparseMatrix, Eigen::IncompleteLUT<double>> solver;
    solver.preconditioner().setDroptol(1e-4);
    solver.preconditioner().setFillfactor(10);
    solver.setTolerance(params.linear_tol);
    solver.setMaxIterations(1000);
    solver.compute(J);
    if (solver.info() == Eigen::Success) {
      Eigen::VectorXd x = solver.solve(b);
      if (solver.info() == Eigen::Success) {
        stats.iterations = static_cast<int>(solver.iterations());
        stats.direct = false;
        return x;
      }
    }
  }
  Eigen::SparseLU<SparseMatrix, Eigen::COLAMDOrdering<int>> lu;
  lu.compute(J);
  if (lu.info() != Eigen::Success) {
    throw std::runtime_error("sparse LU factorization failed: " + lu.lastErrorMessage());
  }
  stats.iterations = 1;
  stats.direct = true;
  return lu.solve(b);
}

/// Sparse LU factorization carried between Newton steps (and across kappa
/// and epsilon stages when the caller shares it).
class JacobianCache {
 public:
  bool ready() const { return ready_; }
  int factorizations() const { return count_; }
  void invalidate() { ready_ = false; }

  void factor(const SparseMatrix& J) {
    ready_ = false;
    lu_.compute(J);
    if (lu_.info() != Eigen::Success) {
      throw std::runtime_error("sparse LU factorization failed: " + lu_.lastErrorMessage());
    }
    ready_ = true;
    ++count_;
  }

  Eigen::VectorXd solve(const Eigen::VectorXd& b) const { return lu_.solve(b); }

 private:
  Eigen::SparseLU<SparseMatrix, Eigen::COLAMDOrdering<int>> lu_;
  bool ready_ = false;
  int count_ = 0;
};

namespace detail {

inline Eigen::VectorXd gather_unknowns(const DomainMask& mask, const std::vector<double>& full) {
  const auto& unk = mask.unknowns();
  Eigen::VectorXd x(static_cast<Eigen::Index>(unk.size()));
  for (std::size_t i = 0; i < unk.size(); ++i) x[static_cast<Eigen::Index>(i)] = full[unk[i]];
  return x;
}

inline double residual_sup(const ScalarField& u, const OperatorCoefficients& c,
                           Eigen::VectorXd* out) {
  const auto& unk = u.mask().unknowns();
  double m = 0.0;
  for (std::size_t i = 0; i < unk.size(); ++i) {
    const double r = residual_at_node(u, unk[i], c);
    if (out) (*out)[static_cast<Eigen::Index>(i)] = r;
    m = std::max(m, std::abs(r));
    if (std::isnan(r)) m = std::numeric_limits<double>::infinity();
  }
  return m;
}

}  // namespace detail

/// Tangent predictor for a kappa step: u - dk J^-1 dR/dkappa with the cached
/// factorization. Returns u itself when no factorization is available.
inline ScalarField predict_kappa_step(const ScalarField& u, const SolverParams& params,
                                      double kappa_from, double kappa_to,
                                      const JacobianCache& cache) {
  if (!cache.ready()) return u;
  const DomainMask& mask = u.mask();
  const auto& unk = mask.unknowns();
  const auto n = static_cast<Eigen::Index>(unk.size());
  const auto c1 = detail::coefficients(params, 1.0);
  const auto c0 = detail::coefficients(params, 0.0);
  Eigen::VectorXd dR(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const std::size_t p = unk[static_cast<std::size_t>(i)];
    dR[i] = detail::residual_at_node(u, p, c1) - detail::residual_at_node(u, p, c0);
  }
  const Eigen::VectorXd du = cache.solve(-dR);
  if (!du.allFinite()) return u;
  std::vector<double> full = u.values();
  const double dk = kappa_to - kappa_from;
  for (Eigen::Index i = 0; i < n; ++i) full[unk[static_cast<std::size_t>(i)]] += dk * du[i];
  apply_dirichlet(mask, full);
  ScalarField pred(u.discretization(), std::move(full));
  return pred;
}

/// Damped Newton solve at fixed (epsilon, kappa). The initial field must
/// carry Dirichlet ghosts; they are re-applied after every update.
///
/// With the direct solver a factorization from an earlier iterate (or from
/// `cache`, when given) is tried first; a full step from it is kept only if
/// it contracts the residual enough, otherwise the Jacobian is rebuilt at the
/// current iterate and the step is backtracked as usual.
inline SolverSolution solve_fixed(const ScalarField& initial, const SolverParams& params,
                                  double kappa = 1.0, JacobianCache* cache = nullptr) {
  params.validate();
  const auto c = detail::coefficients(params, kappa);
  const DiscretizationPtr& disc = initial.discretization();
  const DomainMask& mask = disc->mask;
  const auto& unk = mask.unknowns();
  const auto n = static_cast<Eigen::Index>(unk.size());
  const bool direct = params.linear_solver == LinearSolverKind::sparse_lu;
  const bool reuse = direct && params.reuse_jacobian;
  JacobianCache local;
  JacobianCache& lu = cache && reuse ? *cache : local;

  std::vector<double> full = initial.values();
  apply_dirichlet(mask, full);
  ScalarField u(disc, full);
  Eigen::VectorXd R(n);
  double rn = detail::residual_sup(u, c, &R);
  int iterations = 0;

  auto report = [&](double step, int linear_iterations) {
    if (params.observer) {
      params.observer({params.epsilon, kappa, iterations, rn, step, linear_iterations});
    }
  };
  report(0.0, 0);

  Eigen::VectorXd R_try(n);
  auto trial_at = [&](const Eigen::VectorXd& delta, double step, double& rt) {
    std::vector<double> trial = full;
    for (Eigen::Index i = 0; i < n; ++i) trial[unk[static_cast<std::size_t>(i)]] += step * delta[i];
    apply_dirichlet(mask, trial);
    ScalarField ut(disc, std::move(trial));
    rt = detail::residual_sup(ut, c, &R_try);
    return ut;
  };
  auto accept = [&](ScalarField&& ut, double rt) {
    full = ut.values();
    u = std::move(ut);
    R = R_try;
    rn = rt;
  };

  while (rn > params.newton_tol) {
    if (iterations >= params.newton_max_iters) throw NonConvergence(iterations, rn);

    if (reuse && lu.ready()) {
      const Eigen::VectorXd delta = lu.solve(-R);
      if (delta.allFinite()) {
        double rt = 0.0;
        ScalarField ut = trial_at(delta, 1.0, rt);
        bool keep = rt <= params.reuse_contraction * rn || rt <= params.newton_tol;
        if (!keep && rt < 0.9 * rn) {
          const double rate = rt / rn;
          const double more = std::ceil(std::log(params.newton_tol / rt) / std::log(rate));
          keep = more <= params.reuse_budget && iterations + 1 + more < params.newton_max_iters;
        }
        if (keep) {
          accept(std::move(ut), rt);
          ++iterations;
          report(1.0, 0);
          continue;
        }
      }
    }

    const SparseMatrix J = assemble_jacobian(u, params, kappa);
    LinearSolveStats stats;
    Eigen::VectorXd delta;
    if (direct) {
      lu.factor(J);
      delta = lu.solve(-R);
      stats.iterations = 1;
      stats.direct = true;
    } else {
      delta = solve_linear(J, -R, params, stats);
    }
    if (!delta.allFinite()) throw NonConvergence(iterations + 1, rn);

    double step = 1.0;
    bool accepted = false;
    while (step >= params.min_step) {
      double rt = 0.0;
      ScalarField ut = trial_at(delta, step, rt);
      if (rt < rn) {
        accept(std::move(ut), rt);
        accepted = true;
        break;
      }
      step *= params.damping_shrink;
    }
    ++iterations;
    if (!accepted) throw NonConvergence(iterations, rn);
    report(step, stats.iterations);
  }

  SolverSolution sol;
  sol.u = u;
  sol.epsilon = params.epsilon;
  sol.kappa = kappa;
  sol.residual_norm = rn;
  sol.newton_iterations = iterations;
  sol.min_value = u.min_inside();
  sol.negative_values = sol.min_value < -params.newton_tol;
  return sol;
}

}  // namespace hkflow
