#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "hkflow/geometry/contour.hpp"
#include "hkflow/geometry/series.hpp"
#include "hkflow/iso/report.hpp"
#include "json.hpp"

namespace hkflow {

inline constexpr const char* kFlowCsvHeader =
    "t,area,volume,hn_integral,hk1_integral,iso_diff,iso_diff_kappa";

/// 12 significant digits, shortest form.
inline std::string format_number(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", x);
  return buf;
}

/// One row per level in ascending t; the last column is empty without kappa.
inline void write_flow_csv(std::ostream& os, const FlowSeries& s) {
  os << kFlowCsvHeader << '\n';
  for (const auto& L : s.levels) {
    os << format_number(L.t) << ',' << format_number(L.area) << ',' << format_number(L.volume)
       << ',' << format_number(L.hn_integral) << ',' << format_number(L.hk1_integral) << ','
       << format_number(L.iso_diff) << ',';
    if (L.iso_diff_kappa) os << format_number(*L.iso_diff_kappa);
    os << '\n';
  }
}

/// "grid <dim> <counts...> <h> <origin...>", then one value per node in
/// storage order, "nan" for exterior nodes.
inline void write_field(std::ostream& os, const ScalarField& u) {
  const CartesianGrid& g = u.grid();
  char buf[64];
  os << "grid " << g.dim();
  for (int a = 0; a < g.dim(); ++a) os << ' ' << g.count(a);
  std::snprintf(buf, sizeof buf, " %.17g", g.spacing());
  os << buf;
  for (int a = 0; a < g.dim(); ++a) {
    std::snprintf(buf, sizeof buf, " %.17g", g.origin()[a]);
    os << buf;
  }
  os << '\n';
  for (double v : u.values()) {
    if (std::isnan(v)) {
      os << "nan\n";
    } else {
      std::snprintf(buf, sizeof buf, "%.17g\n", v);
      os << buf;
    }
  }
}

/// Reads a field written by write_field onto `disc`, whose grid must match
/// the header.
inline ScalarField read_field(std::istream& is, const DiscretizationPtr& disc) {
  const CartesianGrid& g = disc->grid;
  std::string line;
  if (!std::getline(is, line)) throw std::runtime_error("field file is empty");
  std::istringstream head(line);
  std::string tag;
  int dim = 0;
  head >> tag >> dim;
  if (tag != "grid" || dim != g.dim()) {
    throw std::runtime_error("field header does not match the configured grid dimension");
  }
  for (int a = 0; a < dim; ++a) {
    int c = 0;
    head >> c;
    if (c != g.count(a)) throw std::runtime_error("field header node counts do not match");
  }
  double h = 0.0;
  head >> h;
  if (!head || std::abs(h - g.spacing()) > 1e-12 * g.spacing()) {
    throw std::runtime_error("field header spacing does not match");
  }
  for (int a = 0; a < dim; ++a) {
    double o = 0.0;
    head >> o;
    if (!head || std::abs(o - g.origin()[a]) > 1e-9) {
      throw std::runtime_error("field header origin does not match");
    }
  }
  std::vector<double> values(g.size());
  for (std::size_t p = 0; p < values.size(); ++p) {
    if (!std::getline(is, line)) throw std::runtime_error("field file ends early");
    if (line == "nan") {
      values[p] = std::numeric_limits<double>::quiet_NaN();
    } else {
      std::size_t pos = 0;
      values[p] = std::stod(line, &pos);
      if (pos != line.size()) {
        throw std::runtime_error("bad field value on line " + std::to_string(p + 2));
      }
    }
    if (!disc->mask.is_exterior(p) && !std::isfinite(values[p])) {
      throw std::runtime_error("missing value at non-exterior node " + std::to_string(p));
    }
  }
  return ScalarField(disc, std::move(values));
}

namespace detail {

/// Chains the oriented segments of a closed 2D mesh into vertex loops.
inline std::vector<std::vector<int>> mesh_loops(const ContourMesh& m) {
  std::vector<int> next(m.vertices.size(), -1);
  for (const auto& e : m.elements) next[e[0]] = e[1];
  std::vector<char> seen(m.vertices.size(), 0);
  std::vector<std::vector<int>> loops;
  for (const auto& e : m.elements) {
    if (seen[e[0]]) continue;
    std::vector<int> loop;
    int v = e[0];
    while (v >= 0 && !seen[v]) {
      seen[v] = 1;
      loop.push_back(v);
      v = next[v];
    }
    loops.push_back(std::move(loop));
  }
  return loops;
}

}  // namespace detail

/// Level-set polylines of a 2D field, at most 16 levels taken evenly from
/// `levels`. One path per level (one closed subpath per loop); the viewBox
/// is the grid extent with y pointing up.
inline void write_contours_svg(std::ostream& os, const ScalarField& u,
                               const std::vector<double>& levels) {
  const CartesianGrid& g = u.grid();
  if (g.dim() != 2) throw std::invalid_argument("contour plots are two-dimensional");
  const double x0 = g.origin()[0], y0 = g.origin()[1];
  const double w = (g.count(0) - 1) * g.spacing();
  const double hgt = (g.count(1) - 1) * g.spacing();
  char buf[160];
  std::snprintf(buf, sizeof buf,
                "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"%.6g %.6g %.6g %.6g\">\n", x0,
                -(y0 + hgt), w, hgt);
  os << buf;
  const double stroke = 0.002 * std::max(w, hgt);
  std::vector<double> chosen;
  const std::size_t count = std::min<std::size_t>(levels.size(), 16);
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t j = count == 1 ? 0 : i * (levels.size() - 1) / (count - 1);
    chosen.push_back(levels[j]);
  }
  for (double t : chosen) {
    ContourMesh mesh;
    try {
      mesh = extract_level_set(u, t);
    } catch (const EmptyLevelSet&) {
      continue;
    }
    std::snprintf(buf, sizeof buf, "<path data-level=\"%.12g\" fill=\"none\" stroke=\"black\" "
                  "stroke-width=\"%.4g\" d=\"", t, stroke);
    os << buf;
    for (const auto& loop : detail::mesh_loops(mesh)) {
      for (std::size_t i = 0; i < loop.size(); ++i) {
        const Coord& x = mesh.vertices[loop[i]];
        std::snprintf(buf, sizeof buf, "%s%.6g %.6g ", i == 0 ? "M" : "L", x[0], -x[1]);
        os << buf;
      }
      os << "Z ";
    }
    os << "\"/>\n";
  }
  os << "</svg>\n";
}

inline nlohmann::json to_json(const Check& c) {
  return {{"name", c.name},
          {"verdict", to_string(c.verdict)},
          {"slack", c.slack},
          {"worst_margin", c.worst_margin}};
}

inline nlohmann::json to_json(const MonotonicityReport& r) {
  nlohmann::json checks = nlohmann::json::array();
  for (const auto& c : r.checks()) checks.push_back(to_json(c));
  return {{"n", r.n},
          {"tol_abs", r.tol_abs},
          {"slack", r.slack},
          {"curvature_bound", r.curvature_bound},
          {"curvature_margins", r.curvature_margins},
          {"iso_steps", r.iso_steps},
          {"iso_kappa_steps", r.iso_kappa_steps},
          {"checks", checks},
          {"passed", r.passed()}};
}

inline nlohmann::json to_json(const FlowSeries& s) {
  nlohmann::json levels = nlohmann::json::array();
  for (const auto& L : s.levels) {
    nlohmann::json j = {{"t", L.t},
                        {"area", L.area},
                        {"volume", L.volume},
                        {"hn_integral", L.hn_integral},
                        {"hk1_integral", L.hk1_integral},
                        {"iso_diff", L.iso_diff},
                        {"band_measure", L.band_measure},
                        {"flagged_fraction", L.flagged_fraction},
                        {"closed", L.closed}};
    if (L.iso_diff_kappa) j["iso_diff_kappa"] = *L.iso_diff_kappa;
    levels.push_back(std::move(j));
  }
  nlohmann::json dropped = nlohmann::json::array();
  for (const auto& d : s.dropped) dropped.push_back({{"t", d.t}, {"reason", d.reason}});
  nlohmann::json out = {{"n", s.n}, {"k", s.k},         {"T", s.T},
                        {"h", s.h}, {"levels", levels}, {"dropped", dropped}};
  if (s.kappa) out["kappa"] = *s.kappa;
  return out;
}

/// Human-readable block of a monotonicity report.
inline void write_report_text(std::ostream& os, const MonotonicityReport& r) {
  os << "monotonicity report (n = " << r.n << ")\n";
  os << "  tol_abs = " << format_number(r.tol_abs) << ", step slack = " << format_number(r.slack)
     << ", curvature bound = " << format_number(r.curvature_bound) << "\n";
  for (const auto& c : r.checks()) {
    os << "  " << c.name << ": " << to_string(c.verdict)
       << " (worst margin " << format_number(c.worst_margin) << ", slack "
       << format_number(c.slack) << ")\n";
  }
  os << "  overall: " << (r.passed() ? "pass" : "fail") << "\n";
}

}  // namespace hkflow
