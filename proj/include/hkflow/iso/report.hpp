#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "hkflow/geometry/series.hpp"
#include "hkflow/iso/iso.hpp"

namespace hkflow {

enum class Verdict { pass, pass_with_slack, fail };

inline const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::pass: return "pass";
    case Verdict::pass_with_slack: return "pass_with_slack";
    default: return "fail";
  }
}

struct Check {
  std::string name;
  Verdict verdict = Verdict::pass;
  /// Tolerance that separates pass_with_slack from fail.
  double slack = 0.0;
  /// Worst observed margin (negative means the strict inequality failed).
  double worst_margin = 0.0;
};

struct MonotonicityTolerances {
  /// tol_abs = abs_factor * A_1^{(n+1)/n}.
  double abs_factor = 1e-3;
  /// slack = step_factor * max(I_1, tol_abs).
  double step_factor = 1e-3;
  /// Relative undershoot allowed in the curvature lower bound.
  double curvature_relaxation = 0.03;
};

struct MonotonicityReport {
  int n = 1;
  double tol_abs = 0.0;
  double slack = 0.0;
  double curvature_bound = 0.0;
  /// Integral of |H|^n minus the lower bound, per level.
  std::vector<double> curvature_margins;
  /// I_{j+1} - I_j.
  std::vector<double> iso_steps;
  std::vector<double> iso_kappa_steps;
  Check nonnegative;
  Check decreasing;
  Check curvature;
  std::optional<Check> kappa_nonnegative;
  std::optional<Check> kappa_decreasing;

  bool passed() const {
    auto ok = [](const Check& c) { return c.verdict != Verdict::fail; };
    return ok(nonnegative) && ok(decreasing) && ok(curvature) &&
           (!kappa_nonnegative || ok(*kappa_nonnegative)) &&
           (!kappa_decreasing || ok(*kappa_decreasing));
  }

  std::vector<Check> checks() const {
    std::vector<Check> out{nonnegative, decreasing, curvature};
    if (kappa_nonnegative) out.push_back(*kappa_nonnegative);
    if (kappa_decreasing) out.push_back(*kappa_decreasing);
    return out;
  }
};

namespace detail {

/// Verdict for "value >= 0" over all margins with the given slack.
inline Check margin_check(std::string name, const std::vector<double>& margins, double slack) {
  Check c;
  c.name = std::move(name);
  c.slack = slack;
  c.worst_margin = margins.empty() ? 0.0 : *std::min_element(margins.begin(), margins.end());
  if (c.worst_margin >= 0.0) {
    c.verdict = Verdict::pass;
  } else if (c.worst_margin >= -slack) {
    c.verdict = Verdict::pass_with_slack;
  } else {
    c.verdict = Verdict::fail;
  }
  return c;
}

}  // namespace detail

/// Verdicts on a flow series: nonnegativity and stepwise decrease of the
/// isoperimetric difference, the curvature lower bound per level, and the
/// same two properties for the hyperbolic difference when present. Never
/// throws on failing data; a series with fewer than 2 levels is rejected.
inline MonotonicityReport monotonicity_report(const FlowSeries& s,
                                              const MonotonicityTolerances& tol = {}) {
  if (s.levels.size() < 2) throw std::invalid_argument("report needs at least 2 levels");
  MonotonicityReport r;
  r.n = s.n;
  const FlowLevel& first = s.levels.front();
  r.tol_abs = tol.abs_factor * std::pow(first.area, (s.n + 1.0) / s.n);
  r.slack = tol.step_factor * std::max(first.iso_diff, r.tol_abs);
  r.curvature_bound = curvature_lower_bound(s.n);

  std::vector<double> iso;
  for (const auto& L : s.levels) {
    iso.push_back(L.iso_diff);
    r.curvature_margins.push_back(L.hn_integral - r.curvature_bound);
  }
  std::vector<double> decrease;
  for (std::size_t j = 0; j + 1 < iso.size(); ++j) {
    r.iso_steps.push_back(iso[j + 1] - iso[j]);
    decrease.push_back(iso[j] - iso[j + 1]);
  }
  r.nonnegative = detail::margin_check("iso_nonnegative", iso, r.tol_abs);
  r.decreasing = detail::margin_check("iso_decreasing", decrease, r.slack);
  r.curvature = detail::margin_check("curvature_bound", r.curvature_margins,
                                     tol.curvature_relaxation * r.curvature_bound);

  if (s.kappa && first.iso_diff_kappa) {
    // Same relative tolerances, measured in volume units.
    const double scale = f_kappa(first.area, {*s.kappa});
    const double tol_abs = tol.abs_factor * scale;
    const double slack = tol.step_factor * std::max(*first.iso_diff_kappa, tol_abs);
    std::vector<double> ik, dk;
    for (const auto& L : s.levels) ik.push_back(L.iso_diff_kappa.value_or(0.0));
    for (std::size_t j = 0; j + 1 < ik.size(); ++j) {
      r.iso_kappa_steps.push_back(ik[j + 1] - ik[j]);
      dk.push_back(ik[j] - ik[j + 1]);
    }
    r.kappa_nonnegative = detail::margin_check("iso_kappa_nonnegative", ik, tol_abs);
    r.kappa_decreasing = detail::margin_check("iso_kappa_decreasing", dk, slack);
  }
  return r;
}

}  // namespace hkflow
