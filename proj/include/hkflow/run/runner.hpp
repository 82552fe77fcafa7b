#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <ostream>
#include <string>
#include <vector>

#include "hkflow/geometry/hull.hpp"
#include "hkflow/oracle/sphere.hpp"
#include "hkflow/oracle/support.hpp"
#include "hkflow/run/config.hpp"
#include "hkflow/run/outputs.hpp"
#include "hkflow/solver/continuation.hpp"
#include "hkflow/solver/translating.hpp"

namespace hkflow {

struct RunResult {
  /// 0 all verdicts pass, 1 a verdict failed, 3 the run aborted.
  int status = 0;
  std::vector<std::string> files;
  std::string error;
};

namespace detail {

class OutputDir {
 public:
  explicit OutputDir(std::filesystem::path dir) : dir_(std::move(dir)) {
    std::filesystem::create_directories(dir_);
  }

  /// Writes a file through `fill` and records it in the manifest.
  void write(const std::string& name, const std::function<void(std::ostream&)>& fill) {
    const auto path = dir_ / name;
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot write " + path.string());
    fill(os);
    os.flush();
    if (!os) throw std::runtime_error("write failed for " + path.string());
    files_.push_back(name);
  }

  std::ofstream open_log(const std::string& name) {
    std::ofstream os(dir_ / name, std::ios::binary);
    if (!os) throw std::runtime_error("cannot write " + (dir_ / name).string());
    files_.push_back(name);
    return os;
  }

  const std::vector<std::string>& files() const { return files_; }

 private:
  std::filesystem::path dir_;
  std::vector<std::string> files_;
};

inline DiscretizationPtr discretize(const RunConfig& c) {
  GridOptions opt;
  opt.boundary_samples = c.boundary_samples;
  opt.seed = c.seed;
  return build_grid(c.domain, c.resolution, opt);
}

inline EpsSchedule schedule_for(const RunConfig& c) {
  const double h = 1.0 / c.resolution;
  const double eps_min = c.eps_min > 0.0 ? c.eps_min : std::max(h, 1e-3);
  return EpsSchedule::geometric(c.eps_start, c.eps_ratio, eps_min);
}

inline WeakFlowApprox sweep(const RunConfig& c, const DiscretizationPtr& disc,
                            std::ostream& log) {
  SolverParams params = c.solver;
  params.observer = [&log](const SolveRecord& r) {
    const nlohmann::json j = {{"epsilon", r.epsilon},     {"kappa", r.kappa},
                              {"iteration", r.iteration}, {"residual", r.residual},
                              {"step", r.step},           {"linear_iterations", r.linear_iterations}};
    log << j.dump() << '\n';
  };
  return epsilon_sweep(disc, schedule_for(c), params);
}

inline nlohmann::json sweep_json(const WeakFlowApprox& w) {
  nlohmann::json per = nlohmann::json::array();
  for (const auto& s : w.per_eps) {
    per.push_back({{"epsilon", s.epsilon},
                   {"residual_norm", s.residual_norm},
                   {"newton_iterations", s.newton_iterations},
                   {"max_value", s.max_value},
                   {"change", s.change},
                   {"barrier_sup_bound", s.barrier.sup_bound},
                   {"max_boundary_gradient", s.barrier.max_boundary_gradient}});
  }
  return {{"T", w.T}, {"per_epsilon", per}};
}

inline void write_sweep_text(std::ostream& os, const WeakFlowApprox& w) {
  os << "epsilon sweep: T = " << format_number(w.T) << "\n";
  for (const auto& s : w.per_eps) {
    os << "  eps " << format_number(s.epsilon) << ": newton " << s.newton_iterations
       << ", residual " << format_number(s.residual_norm) << ", max u "
       << format_number(s.max_value) << ", change " << format_number(s.change) << "\n";
  }
}

inline void write_dropped_text(std::ostream& os, const FlowSeries& s) {
  for (const auto& d : s.dropped) {
    os << "  dropped level t = " << format_number(d.t) << ": " << d.reason << "\n";
  }
}

inline std::vector<double> level_values(const FlowSeries& s) {
  std::vector<double> t;
  for (const auto& L : s.levels) t.push_back(L.t);
  return t;
}

/// Writes the series outputs shared by the solve, analyze and verify modes.
inline void emit_series(OutputDir& out, const ScalarField& u, const FlowSeries& series,
                        const MonotonicityReport& report, const WeakFlowApprox* flow,
                        const nlohmann::json& extra, const std::string& extra_text) {
  out.write("flow.csv", [&](std::ostream& os) { write_flow_csv(os, series); });
  out.write("report.txt", [&](std::ostream& os) {
    if (flow) write_sweep_text(os, *flow);
    os << "levels: " << series.levels.size() << " measured, " << series.dropped.size()
       << " dropped\n";
    write_dropped_text(os, series);
    write_report_text(os, report);
    os << extra_text;
  });
  out.write("report.json", [&](std::ostream& os) {
    nlohmann::json j = {{"series", to_json(series)}, {"report", to_json(report)}};
    if (flow) j["sweep"] = sweep_json(*flow);
    for (const auto& [key, value] : extra.items()) j[key] = value;
    os << j.dump(2) << '\n';
  });
  if (u.grid().dim() == 2) {
    out.write("contours.svg",
              [&](std::ostream& os) { write_contours_svg(os, u, level_values(series)); });
  }
}

inline int run_solve(const RunConfig& c, OutputDir& out, std::ostream& log) {
  const auto disc = discretize(c);
  auto run_log = out.open_log("run.log");
  log << "solving on " << c.domain.name() << " at resolution " << c.resolution << "\n";
  const WeakFlowApprox flow = sweep(c, disc, run_log);
  out.write("field.txt", [&](std::ostream& os) { write_field(os, flow.u); });
  const FlowSeries series = iso_series(flow.u, c.num_levels, {c.k, c.kappa});
  const MonotonicityReport report = monotonicity_report(series);
  emit_series(out, flow.u, series, report, &flow, nlohmann::json::object(), "");
  log << "T = " << format_number(flow.T) << ", report " << (report.passed() ? "pass" : "fail")
      << "\n";
  return report.passed() ? 0 : 1;
}

inline int run_analyze(const RunConfig& c, OutputDir& out, std::ostream& log) {
  if (c.field_file.empty()) throw ConfigError("config", 0, "field", "required by mode analyze");
  const auto disc = discretize(c);
  std::ifstream in(c.field_file);
  if (!in) throw std::runtime_error("cannot open field file " + c.field_file);
  const ScalarField u = read_field(in, disc);
  const FlowSeries series = iso_series(u, c.num_levels, {c.k, c.kappa});
  const MonotonicityReport report = monotonicity_report(series);
  emit_series(out, u, series, report, nullptr, nlohmann::json::object(), "");
  log << "analyzed " << c.field_file << ", report " << (report.passed() ? "pass" : "fail")
      << "\n";
  return report.passed() ? 0 : 1;
}

inline int run_oracle(const RunConfig& c, OutputDir& out, std::ostream& log) {
  FlowSeries series;
  MonotonicityTolerances tol;
  tol.step_factor = 1e-8;
  nlohmann::json extra = nlohmann::json::object();
  const auto& shape = c.domain.shape();
  if (c.n == 2) {
    const Ball* ball = std::get_if<Ball>(&shape);
    if (!ball) throw std::invalid_argument("the three-dimensional oracle needs a ball domain");
    const SphereState st{ball->radius, 2, c.k};
    const double T = extinction_time(st);
    series.n = 2;
    series.k = c.k;
    series.T = T;
    const int steps = 64;
    for (int j = 0; j < steps; ++j) {
      const double t = j * T / steps;
      const double R = sphere_radius(st, t);
      FlowLevel L;
      L.t = t;
      L.area = 4.0 * std::numbers::pi * R * R;
      L.volume = 4.0 * std::numbers::pi * R * R * R / 3.0;
      L.hn_integral = std::pow(2.0 / R, 2.0) * L.area;
      L.hk1_integral = std::pow(2.0 / R, c.k + 1.0) * L.area;
      L.iso_diff = iso_difference(L.area, L.volume, 2);
      if (c.kappa) L.iso_diff_kappa = hyperbolic_iso_difference(L.area, L.volume, {*c.kappa});
      L.closed = true;
      series.levels.push_back(L);
    }
    series.kappa = c.kappa;
    extra["oracle"] = {{"kind", "sphere"}, {"extinction_time", T}};
  } else {
    SupportFunction h0;
    const auto m = static_cast<std::size_t>(c.oracle_samples);
    if (const Ball* b = std::get_if<Ball>(&shape)) {
      h0 = circle_support(b->radius, m);
    } else if (const Ellipsoid* e = std::get_if<Ellipsoid>(&shape)) {
      h0 = ellipse_support(e->semi_axes[0], e->semi_axes[1], m);
    } else {
      throw std::invalid_argument("the plane-curve oracle needs a ball or ellipse domain");
    }
    // Extinction time of the circle with the same enclosed area.
    const double r_eq = std::sqrt(support_geometry(h0).area / std::numbers::pi);
    const double t_est = std::pow(r_eq, c.k + 1.0) / (c.k + 1.0);
    const double dt = c.oracle_dt > 0.0 ? c.oracle_dt : t_est / 64.0;
    SupportRunOptions opt;
    opt.min_rho = c.oracle_min_rho;
    const SupportRun run = evolve_support(h0, c.k, 4.0 * t_est, dt, opt);
    series = support_series(run, c.k);
    extra["oracle"] = {{"kind", "support_function"},
                       {"samples", m},
                       {"substeps", run.substeps},
                       {"halted", run.halted},
                       {"halt_reason", run.halt_reason},
                       {"final_time", run.states.back().t}};
  }
  const MonotonicityReport report = monotonicity_report(series, tol);
  out.write("flow.csv", [&](std::ostream& os) { write_flow_csv(os, series); });
  out.write("report.txt", [&](std::ostream& os) {
    os << "oracle run: " << series.levels.size() << " states, final t = "
       << format_number(series.levels.back().t) << "\n";
    write_report_text(os, report);
  });
  out.write("report.json", [&](std::ostream& os) {
    nlohmann::json j = {{"series", to_json(series)}, {"report", to_json(report)}};
    for (const auto& [key, value] : extra.items()) j[key] = value;
    os << j.dump(2) << '\n';
  });
  log << "oracle final t = " << format_number(series.levels.back().t) << ", report "
      << (report.passed() ? "pass" : "fail") << "\n";
  return report.passed() ? 0 : 1;
}

inline int run_verify(const RunConfig& c, OutputDir& out, std::ostream& log) {
  const Ball* ball = std::get_if<Ball>(&c.domain.shape());
  if (!ball) throw std::invalid_argument("mode verify needs a ball domain");
  const auto disc = discretize(c);
  auto run_log = out.open_log("run.log");
  const WeakFlowApprox flow = sweep(c, disc, run_log);
  const ScalarField& u = flow.u;

  std::ostringstream text;
  nlohmann::json checks = nlohmann::json::array();
  bool all = true;
  auto record = [&](const std::string& name, bool ok, nlohmann::json detail) {
    all = all && ok;
    detail["name"] = name;
    detail["passed"] = ok;
    checks.push_back(detail);
    text << "  " << name << ": " << (ok ? "pass" : "fail") << "\n";
  };

  const SphereState st{ball->radius, c.n, c.k};
  double err = 0.0;
  for (std::size_t p : u.mask().unknowns()) {
    const double r = std::min(norm(sub(u.grid().position(p), ball->center), u.grid().dim()),
                              ball->radius);
    err = std::max(err, std::abs(u.values()[p] - sphere_arrival_time(st, r)));
  }
  record("oracle_vs_solver", err <= c.verify_tolerance,
         {{"sup_error", err}, {"tolerance", c.verify_tolerance}});
  text << "    sup error " << format_number(err) << "\n";

  const double eps = flow.per_eps.back().epsilon;
  const TranslatingGraphCheck tg = translating_graph_check(u, eps, 1.0, c.k);
  record("translating_graph", tg.passed,
         {{"max_difference", tg.max_difference}, {"nodes", tg.nodes}});
  text << "    max difference " << format_number(tg.max_difference) << "\n";

  const FlowSeries series = iso_series(u, c.num_levels, {c.k, c.kappa});
  const CurvatureField curvature(u);
  const std::size_t picks = std::min<std::size_t>(4, series.levels.size());
  for (std::size_t i = 0; i < picks; ++i) {
    const std::size_t j = picks == 1 ? 0 : i * (series.levels.size() - 1) / (picks - 1);
    const double t = series.levels[j].t;
    const ContourMesh level = extract_level_set(u, t);
    const ContourMesh hull = convex_hull(level);
    for (double s : c.offsets) {
      const OffsetGrowthReport g = offset_growth_check(hull, curvature, level, s);
      record("offset_growth", g.passed, {{"t", t}, {"s", s}, {"lhs", g.lhs}, {"rhs", g.rhs}});
      text << "    t " << format_number(t) << " s " << format_number(s) << ": lhs "
           << format_number(g.lhs) << " rhs " << format_number(g.rhs) << "\n";
    }
  }

  const MonotonicityReport report = monotonicity_report(series);
  all = all && report.passed();
  emit_series(out, u, series, report, &flow, {{"verify", checks}},
              "verification\n" + text.str());
  log << "verify " << (all ? "pass" : "fail") << "\n";
  return all ? 0 : 1;
}

}  // namespace detail

/// Runs `mode` with the configuration, writing into `out_dir`. Errors are
/// caught and reported with status 3; manifest.json always lists the files
/// written so far.
inline RunResult run(const RunConfig& config, RunMode mode, const std::string& out_dir,
                     std::ostream& log) {
  RunResult result;
  detail::OutputDir out(out_dir);
  try {
    switch (mode) {
      case RunMode::solve: result.status = detail::run_solve(config, out, log); break;
      case RunMode::oracle: result.status = detail::run_oracle(config, out, log); break;
      case RunMode::verify: result.status = detail::run_verify(config, out, log); break;
      case RunMode::analyze: result.status = detail::run_analyze(config, out, log); break;
    }
  } catch (const std::exception& e) {
    result.status = 3;
    result.error = e.what();
    log << "error: " << e.what() << "\n";
  }
  result.files = out.files();
  nlohmann::json manifest = {{"mode", to_string(mode)},
                             {"status", result.status},
                             {"files", result.files}};
  if (!result.error.empty()) manifest["error"] = result.error;
  out.write("manifest.json", [&](std::ostream& os) { os << manifest.dump(2) << '\n'; });
  return result;
}

}  // namespace hkflow
