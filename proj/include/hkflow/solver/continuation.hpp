#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "hkflow/solver/barrier.hpp"
#include "hkflow/solver/regularized.hpp"

namespace hkflow {

/// The kappa-step was bisected to its floor without a converged solve.
class ContinuationStuck : public std::runtime_error {
 public:
  ContinuationStuck(double kappa_reached, double epsilon)
      : std::runtime_error(message(kappa_reached, epsilon)),
        kappa_reached_(kappa_reached),
        epsilon_(epsilon) {}
  double kappa_reached() const { return kappa_reached_; }
  double epsilon() const { return epsilon_; }

 private:
  static std::string message(double kappa, double eps) {
    std::ostringstream ss;
    ss << "continuation stuck at kappa = " << kappa << " (epsilon = " << eps << ")";
    return ss.str();
  }
  double kappa_reached_;
  double epsilon_;
};

/// kappa = 0 solution of the Dirichlet problem: u = 0.
inline ScalarField zero_solution(const DiscretizationPtr& disc) {
  return dirichlet_field(disc, [](const Coord&) { return 0.0; });
}

/// Method of continuity in kappa over [0, 1] at fixed epsilon, starting from
/// u = 0 at kappa = 0 and warm-starting each step from the previous solution
/// moved along the kappa tangent. A failed step is halved, at most
/// params.max_bisections times in a row.
///
/// With `warm_start` (a kappa = 1 solution, typically at a larger epsilon)
/// the kappa = 1 problem is attempted directly first; the path from kappa = 0
/// is the fallback.
inline SolverSolution continuation_solve(const DiscretizationPtr& disc,
                                         const SolverParams& params,
                                         const std::optional<ScalarField>& warm_start = std::nullopt,
                                         JacobianCache* cache = nullptr) {
  params.validate();
  JacobianCache local;
  if (!cache) cache = &local;
  if (warm_start) {
    try {
      SolverSolution sol = solve_fixed(*warm_start, params, 1.0, cache);
      sol.kappa_path = {{1.0, sol.newton_iterations}};
      return sol;
    } catch (const NonConvergence&) {
    }
  }

  const double base_step = 1.0 / params.kappa_steps;
  ScalarField u = zero_solution(disc);
  std::vector<KappaStep> path{{0.0, 0}};
  double kappa = 0.0;
  int level = 0;
  int total_iterations = 0;
  SolverSolution last;
  last.u = u;
  last.epsilon = params.epsilon;
  while (kappa < 1.0) {
    const double step = std::ldexp(base_step, -level);
    double target = kappa + step;
    if (target > 1.0 - 1e-12) target = 1.0;
    try {
      const ScalarField start = params.linear_solver == LinearSolverKind::sparse_lu
                                    ? predict_kappa_step(u, params, kappa, target, *cache)
                                    : u;
      last = solve_fixed(start, params, target, cache);
    } catch (const NonConvergence&) {
      if (++level > params.max_bisections) throw ContinuationStuck(kappa, params.epsilon);
      continue;
    }
    u = last.u;
    kappa = target;
    total_iterations += last.newton_iterations;
    path.push_back({kappa, last.newton_iterations});
    level = std::max(0, level - 1);
  }
  last.kappa_path = std::move(path);
  last.newton_iterations = total_iterations;
  return last;
}

/// Strictly decreasing positive regularization parameters.
struct EpsSchedule {
  std::vector<double> eps_values;

  /// start, start * ratio, ... down to eps_min (inclusive up to rounding).
  static EpsSchedule geometric(double start, double ratio, double eps_min) {
    if (!(start > 0.0) || !(ratio > 0.0 && ratio < 1.0) || !(eps_min > 0.0)) {
      throw std::invalid_argument("invalid epsilon schedule parameters");
    }
    EpsSchedule s;
    for (double e = start; e >= eps_min * (1.0 - 1e-9); e *= ratio) s.eps_values.push_back(e);
    if (s.eps_values.empty()) s.eps_values.push_back(start);
    return s;
  }

  /// Default: ratio 1/2 from 0.5 down to max(h, 1e-3).
  static EpsSchedule for_grid(double h) { return geometric(0.5, 0.5, std::max(h, 1e-3)); }

  void validate() const {
    if (eps_values.empty()) throw std::invalid_argument("epsilon schedule is empty");
    for (std::size_t i = 0; i < eps_values.size(); ++i) {
      if (!(eps_values[i] > 0.0)) throw std::invalid_argument("epsilon values must be positive");
      if (i > 0 && !(eps_values[i] < eps_values[i - 1])) {
        throw std::invalid_argument("epsilon schedule must be strictly decreasing");
      }
    }
  }
};

struct EpsSummary {
  double epsilon = 0.0;
  double residual_norm = 0.0;
  int newton_iterations = 0;
  std::vector<KappaStep> kappa_path;
  double max_value = 0.0;
  /// Sup-norm change from the previous epsilon (0 for the first).
  double change = 0.0;
  BarrierReport barrier;
};

/// Approximation of the weak flow: the solution at the smallest epsilon.
struct WeakFlowApprox {
  ScalarField u;
  std::vector<EpsSummary> per_eps;
  double T = 0.0;
  double sup_bound = 0.0;
  double grad_bound = 0.0;
};

/// Thrown when the sweep cannot complete; carries the epsilon that failed.
class SweepFailed : public ContinuationStuck {
 public:
  using ContinuationStuck::ContinuationStuck;
};

/// Solves for every epsilon of the schedule in decreasing order, each warm
/// started from the previous one, and records the Cauchy differences.
inline WeakFlowApprox epsilon_sweep(const DiscretizationPtr& disc, const EpsSchedule& schedule,
                                    const SolverParams& base) {
  schedule.validate();
  WeakFlowApprox out;
  JacobianCache cache;
  std::optional<ScalarField> previous;
  for (double eps : schedule.eps_values) {
    SolverParams params = base;
    params.epsilon = eps;
    SolverSolution sol;
    try {
      sol = continuation_solve(disc, params, previous, &cache);
    } catch (const ContinuationStuck& e) {
      throw SweepFailed(e.kappa_reached(), eps);
    }
    EpsSummary s;
    s.epsilon = eps;
    s.residual_norm = sol.residual_norm;
    s.newton_iterations = sol.newton_iterations;
    s.kappa_path = sol.kappa_path;
    s.max_value = sol.u.max_inside();
    s.change = previous ? max_abs_difference(sol.u, *previous) : 0.0;
    s.barrier = barrier_check(sol, disc->domain, params);
    out.sup_bound = s.barrier.sup_bound;
    out.grad_bound = s.barrier.max_boundary_gradient;
    out.per_eps.push_back(std::move(s));
    previous = sol.u;
  }
  out.u = *previous;
  out.T = out.u.max_inside();
  return out;
}

}  // namespace hkflow
