#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "hkflow/field/domain.hpp"
#include "hkflow/solver/regularized.hpp"

namespace hkflow {

enum class RunMode { solve, oracle, verify, analyze };

inline const char* to_string(RunMode m) {
  switch (m) {
    case RunMode::solve: return "solve";
    case RunMode::oracle: return "oracle";
    case RunMode::verify: return "verify";
    default: return "analyze";
  }
}

inline std::optional<RunMode> parse_mode(const std::string& s) {
  if (s == "solve") return RunMode::solve;
  if (s == "oracle") return RunMode::oracle;
  if (s == "verify") return RunMode::verify;
  if (s == "analyze") return RunMode::analyze;
  return std::nullopt;
}

/// Configuration error with the offending line (0 when not tied to one) and key.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& source, int line, const std::string& key, const std::string& what)
      : std::runtime_error(message(source, line, key, what)), line_(line), key_(key) {}
  int line() const { return line_; }
  const std::string& key() const { return key_; }

 private:
  static std::string message(const std::string& source, int line, const std::string& key,
                             const std::string& what) {
    std::ostringstream ss;
    ss << source;
    if (line > 0) ss << ":" << line;
    if (!key.empty()) ss << ": key '" << key << "'";
    ss << ": " << what;
    return ss.str();
  }
  int line_;
  std::string key_;
};

struct RunConfig {
  std::optional<RunMode> mode;
  DomainSpec domain = DomainSpec::ball(2, Coord{}, 1.0);
  int n = 1;
  double k = 1.0;
  int resolution = 64;
  double eps_start = 0.5;
  double eps_ratio = 0.5;
  /// <= 0 selects max(h, 1e-3).
  double eps_min = 0.0;
  SolverParams solver;
  int num_levels = 16;
  std::optional<double> kappa;
  std::string output_dir;
  std::uint64_t seed = 1;
  int boundary_samples = 10000;

  /// Field file read by the analyze mode.
  std::string field_file;

  /// Support-function samples (power of two) and output interval for the
  /// oracle mode; dt <= 0 selects 1/64 of the estimated extinction time.
  int oracle_samples = 256;
  double oracle_dt = 0.0;
  double oracle_min_rho = 1e-6;

  /// Offsets s for the offset growth check in the verify mode.
  std::vector<double> offsets{0.05, 0.1, 0.2};
  /// Sup-norm tolerance of solver against the exact arrival time.
  double verify_tolerance = 0.03;
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

struct ConfigEntry {
  std::string value;
  int line = 0;
};

class ConfigReader {
 public:
  ConfigReader(std::string source, std::map<std::string, ConfigEntry> entries)
      : source_(std::move(source)), entries_(std::move(entries)) {}

  bool has(const std::string& key) const { return entries_.count(key) > 0; }

  [[noreturn]] void fail(const std::string& key, const std::string& what) const {
    const auto it = entries_.find(key);
    throw ConfigError(source_, it == entries_.end() ? 0 : it->second.line, key, what);
  }

  std::string text(const std::string& key) {
    used_.insert(key);
    return entries_.at(key).value;
  }

  double number(const std::string& key) {
    const std::string v = text(key);
    std::size_t pos = 0;
    double x = 0.0;
    try {
      x = std::stod(v, &pos);
    } catch (const std::exception&) {
      fail(key, "expected a number, got '" + v + "'");
    }
    if (pos != v.size() || !std::isfinite(x)) fail(key, "expected a number, got '" + v + "'");
    return x;
  }

  long long integer(const std::string& key) {
    const std::string v = text(key);
    std::size_t pos = 0;
    long long x = 0;
    try {
      x = std::stoll(v, &pos);
    } catch (const std::exception&) {
      fail(key, "expected an integer, got '" + v + "'");
    }
    if (pos != v.size()) fail(key, "expected an integer, got '" + v + "'");
    return x;
  }

  std::vector<double> numbers(const std::string& key) {
    std::string v = text(key);
    for (char& c : v) {
      if (c == ',') c = ' ';
    }
    std::istringstream ss(v);
    std::vector<double> out;
    std::string tok;
    while (ss >> tok) {
      std::size_t pos = 0;
      double x = 0.0;
      try {
        x = std::stod(tok, &pos);
      } catch (const std::exception&) {
        fail(key, "expected a list of numbers, got '" + tok + "'");
      }
      if (pos != tok.size() || !std::isfinite(x)) {
        fail(key, "expected a list of numbers, got '" + tok + "'");
      }
      out.push_back(x);
    }
    if (out.empty()) fail(key, "expected at least one number");
    return out;
  }

  void reject_unused() const {
    for (const auto& [key, entry] : entries_) {
      if (!used_.count(key)) {
        throw ConfigError(source_, entry.line, key, "unknown key or not used by this domain");
      }
    }
  }

  const std::string& source() const { return source_; }

 private:
  std::string source_;
  std::map<std::string, ConfigEntry> entries_;
  std::set<std::string> used_;
};

inline Coord to_coord(ConfigReader& r, const std::string& key, int dim) {
  const auto v = r.numbers(key);
  if (static_cast<int>(v.size()) != dim) {
    r.fail(key, "expected " + std::to_string(dim) + " components");
  }
  Coord c{};
  for (int a = 0; a < dim; ++a) c[a] = v[a];
  return c;
}

inline DomainSpec parse_domain(ConfigReader& r) {
  const std::string kind = r.has("domain") ? r.text("domain") : "ball";
  const int dim = r.has("dim") ? static_cast<int>(r.integer("dim")) : 2;
  if (dim != 2 && dim != 3) r.fail("dim", "must be 2 or 3");
  try {
    if (kind == "ball") {
      const Coord c = r.has("center") ? to_coord(r, "center", dim) : Coord{};
      const double radius = r.has("radius") ? r.number("radius") : 1.0;
      return DomainSpec::ball(dim, c, radius);
    }
    if (kind == "ellipse" || kind == "ellipsoid") {
      if (kind == "ellipse" && dim != 2) r.fail("dim", "an ellipse is two-dimensional");
      const Coord c = r.has("center") ? to_coord(r, "center", dim) : Coord{};
      if (!r.has("semi_axes")) r.fail("semi_axes", "required for domain " + kind);
      return DomainSpec::ellipsoid(dim, c, to_coord(r, "semi_axes", dim));
    }
    if (kind == "dumbbell") {
      Dumbbell d;
      d.dim = dim;
      for (const char* key : {"center_a", "center_b", "radius_a", "radius_b"}) {
        if (!r.has(key)) r.fail(key, "required for domain dumbbell");
      }
      d.center_a = to_coord(r, "center_a", dim);
      d.center_b = to_coord(r, "center_b", dim);
      d.radius_a = r.number("radius_a");
      d.radius_b = r.number("radius_b");
      if (r.has("sharpness")) d.sharpness = r.number("sharpness");
      return DomainSpec(d);
    }
    if (kind == "polygon") {
      if (dim != 2) r.fail("dim", "a polygon is two-dimensional");
      if (!r.has("vertices")) r.fail("vertices", "required for domain polygon");
      const auto v = r.numbers("vertices");
      if (v.size() % 2 != 0) r.fail("vertices", "expected x,y pairs");
      ConvexPolygon p;
      for (std::size_t i = 0; i < v.size(); i += 2) p.vertices.push_back({v[i], v[i + 1]});
      return DomainSpec(p);
    }
  } catch (const std::invalid_argument& e) {
    r.fail("domain", e.what());
  }
  r.fail("domain", "unknown domain '" + kind + "' (ball, ellipse, ellipsoid, dumbbell, polygon)");
}

}  // namespace detail

/// Parses "key = value" lines; '#' starts a comment. Every key may appear
/// once and unknown keys are errors.
inline RunConfig parse_config(std::istream& in, const std::string& source = "config") {
  std::map<std::string, detail::ConfigEntry> entries;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(source, lineno, "", "expected 'key = value'");
    const std::string key = detail::trim(line.substr(0, eq));
    const std::string value = detail::trim(line.substr(eq + 1));
    if (key.empty()) throw ConfigError(source, lineno, "", "missing key");
    if (value.empty()) throw ConfigError(source, lineno, key, "missing value");
    if (entries.count(key)) throw ConfigError(source, lineno, key, "duplicate key");
    entries[key] = {value, lineno};
  }

  detail::ConfigReader r(source, std::move(entries));
  RunConfig c;
  if (r.has("mode")) {
    const std::string m = r.text("mode");
    c.mode = parse_mode(m);
    if (!c.mode) r.fail("mode", "expected solve, oracle, verify or analyze");
  }
  c.domain = detail::parse_domain(r);
  c.n = c.domain.dim() - 1;
  if (r.has("n") && r.integer("n") != c.n) {
    r.fail("n", "must equal the domain dimension minus one (" + std::to_string(c.n) + ")");
  }
  if (r.has("k")) c.k = r.number("k");
  if (!(c.k >= 1.0)) r.fail("k", "k must be at least 1");
  if (r.has("resolution")) c.resolution = static_cast<int>(r.integer("resolution"));
  if (c.resolution < 16 || c.resolution > 4096) r.fail("resolution", "must lie in [16, 4096]");
  if (r.has("eps_start")) c.eps_start = r.number("eps_start");
  if (!(c.eps_start > 0.0)) r.fail("eps_start", "must be positive");
  if (r.has("eps_ratio")) c.eps_ratio = r.number("eps_ratio");
  if (!(c.eps_ratio > 0.0 && c.eps_ratio < 1.0)) r.fail("eps_ratio", "must lie in (0, 1)");
  if (r.has("eps_min")) {
    c.eps_min = r.number("eps_min");
    if (!(c.eps_min > 0.0) || c.eps_min > c.eps_start) {
      r.fail("eps_min", "must lie in (0, eps_start]");
    }
  }

  SolverParams& s = c.solver;
  s.k = c.k;
  if (r.has("kappa_steps")) s.kappa_steps = static_cast<int>(r.integer("kappa_steps"));
  if (r.has("newton_tol")) s.newton_tol = r.number("newton_tol");
  if (r.has("newton_max_iters")) s.newton_max_iters = static_cast<int>(r.integer("newton_max_iters"));
  if (r.has("linear_tol")) s.linear_tol = r.number("linear_tol");
  if (r.has("max_bisections")) s.max_bisections = static_cast<int>(r.integer("max_bisections"));
  if (r.has("damping_shrink")) s.damping_shrink = r.number("damping_shrink");
  if (r.has("min_step")) s.min_step = r.number("min_step");
  if (r.has("linear_solver")) {
    const std::string v = r.text("linear_solver");
    if (v == "sparse_lu") {
      s.linear_solver = LinearSolverKind::sparse_lu;
    } else if (v == "bicgstab_ilut") {
      s.linear_solver = LinearSolverKind::bicgstab_ilut;
    } else {
      r.fail("linear_solver", "expected sparse_lu or bicgstab_ilut");
    }
  }
  try {
    s.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(source, 0, "", e.what());
  }

  if (r.has("num_levels")) c.num_levels = static_cast<int>(r.integer("num_levels"));
  if (c.num_levels < 2 || c.num_levels > 4096) r.fail("num_levels", "must lie in [2, 4096]");
  if (r.has("kappa")) {
    c.kappa = r.number("kappa");
    if (!(*c.kappa >= 0.0)) r.fail("kappa", "must be nonnegative");
    if (c.n != 2) r.fail("kappa", "the model-space comparison needs a three-dimensional domain");
  }
  if (r.has("output")) c.output_dir = r.text("output");
  if (r.has("seed")) {
    const long long v = r.integer("seed");
    if (v < 0) r.fail("seed", "must be nonnegative");
    c.seed = static_cast<std::uint64_t>(v);
  }
  if (r.has("boundary_samples")) {
    c.boundary_samples = static_cast<int>(r.integer("boundary_samples"));
    if (c.boundary_samples < 0) r.fail("boundary_samples", "must be nonnegative");
  }
  if (r.has("field")) c.field_file = r.text("field");
  if (r.has("oracle_samples")) {
    const long long m = r.integer("oracle_samples");
    if (m < 64 || m > (1 << 20) || (m & (m - 1)) != 0) {
      r.fail("oracle_samples", "must be a power of two >= 64");
    }
    c.oracle_samples = static_cast<int>(m);
  }
  if (r.has("oracle_dt")) {
    c.oracle_dt = r.number("oracle_dt");
    if (!(c.oracle_dt > 0.0)) r.fail("oracle_dt", "must be positive");
  }
  if (r.has("oracle_min_rho")) {
    c.oracle_min_rho = r.number("oracle_min_rho");
    if (!(c.oracle_min_rho > 0.0)) r.fail("oracle_min_rho", "must be positive");
  }
  if (r.has("offsets")) {
    c.offsets = r.numbers("offsets");
    for (double x : c.offsets) {
      if (!(x >= 0.0)) r.fail("offsets", "offsets must be nonnegative");
    }
  }
  if (r.has("verify_tolerance")) {
    c.verify_tolerance = r.number("verify_tolerance");
    if (!(c.verify_tolerance > 0.0)) r.fail("verify_tolerance", "must be positive");
  }
  r.reject_unused();
  return c;
}

inline RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path, 0, "", "cannot open file");
  return parse_config(in, path);
}

}  // namespace hkflow
