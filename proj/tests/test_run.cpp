#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>

#include "hkflow/run/runner.hpp"
#include "json.hpp"

using namespace hkflow;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
  const char* env = std::getenv("HKFLOW_TEST_TMP");
  const fs::path base = env ? fs::path(env) : fs::temp_directory_path() / "hkflow_tests";
  const fs::path dir = base / name;
  fs::remove_all(dir);
  return dir;
}

RunConfig parse(const std::string& text) {
  std::istringstream in(text);
  return parse_config(in, "test.cfg");
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::string> lines_of(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream in(s);
  for (std::string line; std::getline(in, line);) out.push_back(line);
  return out;
}

ConfigError config_error(const std::string& text) {
  try {
    parse(text);
  } catch (const ConfigError& e) {
    return e;
  }
  ADD_FAILURE() << "no error for:\n" << text;
  return ConfigError("", 0, "", "");
}

const char* kBallConfig = R"(# unit disk
domain = ball
dim = 2
k = 1
resolution = 32
num_levels = 8
)";

}  // namespace

TEST(Config, DefaultsAndFullSchema) {
  const RunConfig c = parse(R"(
mode = solve
domain = ellipse
dim = 2
center = 0.1, -0.2
semi_axes = 1 0.5
n = 1
k = 2
resolution = 48
eps_start = 0.4
eps_ratio = 0.25
eps_min = 0.01
kappa_steps = 3
newton_tol = 1e-9
newton_max_iters = 40
linear_tol = 1e-11
max_bisections = 12
damping_shrink = 0.5
min_step = 1e-4
linear_solver = bicgstab_ilut
num_levels = 12
output = out/x
seed = 9
boundary_samples = 500
oracle_samples = 128
oracle_dt = 0.001
oracle_min_rho = 1e-5
offsets = 0.05, 0.1
verify_tolerance = 0.05
)");
  EXPECT_EQ(c.mode, RunMode::solve);
  EXPECT_EQ(c.domain.dim(), 2);
  EXPECT_EQ(c.n, 1);
  EXPECT_EQ(c.k, 2.0);
  EXPECT_EQ(c.solver.k, 2.0);
  EXPECT_EQ(c.resolution, 48);
  EXPECT_EQ(c.eps_ratio, 0.25);
  EXPECT_EQ(c.solver.kappa_steps, 3);
  EXPECT_EQ(c.solver.linear_solver, LinearSolverKind::bicgstab_ilut);
  EXPECT_EQ(c.num_levels, 12);
  EXPECT_EQ(c.output_dir, "out/x");
  EXPECT_EQ(c.seed, 9u);
  EXPECT_EQ(c.oracle_samples, 128);
  EXPECT_EQ(c.offsets, (std::vector<double>{0.05, 0.1}));
  EXPECT_FALSE(c.kappa.has_value());

  const RunConfig d = parse("domain = ball\n");
  EXPECT_EQ(d.k, 1.0);
  EXPECT_EQ(d.n, 1);
  EXPECT_FALSE(d.mode.has_value());
}

TEST(Config, SubunitPowerIsRejectedWithLine) {
  const ConfigError e = config_error("domain = ball\ndim = 2\nk = 0.5\n");
  EXPECT_EQ(e.line(), 3);
  EXPECT_EQ(e.key(), "k");
  EXPECT_NE(std::string(e.what()).find("test.cfg:3"), std::string::npos);
}

TEST(Config, StrictKeys) {
  const ConfigError unknown = config_error("domain = ball\nresolutoin = 64\n");
  EXPECT_EQ(unknown.line(), 2);
  EXPECT_EQ(unknown.key(), "resolutoin");
  const ConfigError dup = config_error("k = 1\nk = 2\n");
  EXPECT_EQ(dup.line(), 2);
  EXPECT_EQ(config_error("domain ball\n").line(), 1);
  EXPECT_EQ(config_error("k =\n").key(), "k");
}

TEST(Config, RangeChecks) {
  EXPECT_EQ(config_error("resolution = 8\n").key(), "resolution");
  EXPECT_EQ(config_error("eps_ratio = 1.5\n").key(), "eps_ratio");
  EXPECT_EQ(config_error("num_levels = 1\n").key(), "num_levels");
  EXPECT_EQ(config_error("oracle_samples = 100\n").key(), "oracle_samples");
  EXPECT_EQ(config_error("domain = ball\ndim = 2\nn = 2\n").key(), "n");
  EXPECT_EQ(config_error("domain = ball\ndim = 2\nkappa = 1\n").key(), "kappa");
  EXPECT_EQ(config_error("mode = fly\n").key(), "mode");
  EXPECT_EQ(config_error("linear_solver = cholesky\n").key(), "linear_solver");
  EXPECT_EQ(config_error("domain = torus\n").key(), "domain");
  EXPECT_EQ(config_error("seed = -1\n").key(), "seed");
  EXPECT_NO_THROW(parse("domain = ball\ndim = 3\nkappa = 1\n"));
}

TEST(Config, MissingFile) {
  EXPECT_THROW(load_config("/nonexistent/hkflow.cfg"), ConfigError);
}

TEST(Outputs, FlowCsvFormat) {
  FlowSeries s;
  for (int j = 0; j < 5; ++j) {
    FlowLevel L;
    L.t = 0.1 * j;
    L.area = 1.0 / 3.0;
    s.levels.push_back(L);
  }
  std::ostringstream os;
  write_flow_csv(os, s);
  const auto rows = lines_of(os.str());
  ASSERT_EQ(rows.size(), 6u);
  EXPECT_EQ(rows[0], "t,area,volume,hn_integral,hk1_integral,iso_diff,iso_diff_kappa");
  EXPECT_EQ(rows[0], kFlowCsvHeader);
  EXPECT_EQ(rows[1].back(), ',');
  EXPECT_NE(rows[2].find("0.333333333333"), std::string::npos);
  s.levels[0].iso_diff_kappa = 0.5;
  std::ostringstream with_kappa;
  write_flow_csv(with_kappa, s);
  EXPECT_EQ(lines_of(with_kappa.str())[1].substr(lines_of(with_kappa.str())[1].rfind(',') + 1), "0.5");
}

TEST(Outputs, FieldRoundTrip) {
  auto disc = build_grid(DomainSpec::ellipsoid(2, Coord{}, Coord{1.0, 0.5}), 24, {0, 1});
  auto u = sample_field(disc, [](const Coord& x) { return std::sin(3 * x[0]) * std::exp(x[1]) / 7.0; });
  std::stringstream ss;
  write_field(ss, u);
  EXPECT_EQ(ss.str().rfind("grid 2 ", 0), 0u);
  const ScalarField r = read_field(ss, disc);
  for (std::size_t p : u.mask().unknowns()) EXPECT_EQ(r.values()[p], u.values()[p]);

  auto other = build_grid(DomainSpec::ellipsoid(2, Coord{}, Coord{1.0, 0.5}), 32, {0, 1});
  std::stringstream again;
  write_field(again, u);
  EXPECT_THROW(read_field(again, other), std::runtime_error);
}

TEST(Outputs, SvgHasOnePathPerLevel) {
  auto disc = build_grid(DomainSpec::ball(2, Coord{}, 1.0), 32, {0, 1});
  auto u = sample_field(disc, [](const Coord& x) { return 1.0 - std::hypot(x[0], x[1]); });
  std::ostringstream os;
  write_contours_svg(os, u, {0.2, 0.4, 0.6, 0.8});
  const std::string svg = os.str();
  std::size_t paths = 0;
  for (auto pos = svg.find("<path"); pos != std::string::npos; pos = svg.find("<path", pos + 1)) ++paths;
  EXPECT_EQ(paths, 4u);
  EXPECT_NE(svg.find("data-level"), std::string::npos);
  EXPECT_NE(svg.find("viewBox"), std::string::npos);
}

TEST(Run, SolveBallProducesArtifacts) {
  const fs::path dir = scratch_dir("solve");
  std::ostringstream log;
  const RunResult r = run(parse(kBallConfig), RunMode::solve, dir.string(), log);
  // At this coarse grid the step-noise of I may exceed the report slack, so only
  // an aborted run (status 3) is an error here.
  ASSERT_LT(r.status, 3) << r.error << log.str();
  for (const char* f : {"flow.csv", "report.txt", "report.json", "contours.svg", "field.txt", "manifest.json"}) {
    EXPECT_TRUE(fs::exists(dir / f)) << f;
  }
  const auto rows = lines_of(slurp(dir / "flow.csv"));
  ASSERT_EQ(rows.size(), 9u);
  for (std::size_t i = 1; i < rows.size(); ++i) {
    std::vector<double> cols;
    std::istringstream in(rows[i]);
    for (std::string cell; std::getline(in, cell, ',');) cols.push_back(std::stod(cell));
    // Columns: t, area, volume, ..., iso_diff.
    EXPECT_LE(std::abs(cols[5]), 0.05 * cols[1] * cols[1]);
  }
  const auto manifest = nlohmann::json::parse(slurp(dir / "manifest.json"));
  EXPECT_EQ(manifest["status"], r.status);
  EXPECT_EQ(manifest["mode"], "solve");

  const std::string svg = slurp(dir / "contours.svg");
  std::size_t paths = 0;
  for (auto pos = svg.find("<path"); pos != std::string::npos; pos = svg.find("<path", pos + 1)) ++paths;
  EXPECT_EQ(paths, 8u);

  // Analyze the emitted field and get the same table back.
  RunConfig a = parse(std::string(kBallConfig) + "field = " + (dir / "field.txt").string() + "\n");
  const fs::path adir = scratch_dir("analyze");
  const RunResult ar = run(a, RunMode::analyze, adir.string(), log);
  ASSERT_EQ(ar.status, r.status) << ar.error;
  EXPECT_EQ(slurp(adir / "flow.csv"), slurp(dir / "flow.csv"));
}

TEST(Run, SolveIsDeterministic) {
  std::ostringstream log;
  const fs::path a = scratch_dir("det_a"), b = scratch_dir("det_b");
  const RunConfig c = parse("domain = ellipse\ndim = 2\nsemi_axes = 1, 0.5\nresolution = 32\nnum_levels = 6\n");
  ASSERT_LT(run(c, RunMode::solve, a.string(), log).status, 3) << log.str();
  ASSERT_LT(run(c, RunMode::solve, b.string(), log).status, 3) << log.str();
  EXPECT_EQ(slurp(a / "flow.csv"), slurp(b / "flow.csv"));
  EXPECT_FALSE(slurp(a / "flow.csv").empty());
}

TEST(Run, OracleCircleReachesExtinction) {
  const fs::path dir = scratch_dir("oracle");
  std::ostringstream log;
  const RunResult r = run(parse("domain = ball\ndim = 2\noracle_samples = 64\n"), RunMode::oracle,
                          dir.string(), log);
  ASSERT_EQ(r.status, 0) << r.error;
  const auto j = nlohmann::json::parse(slurp(dir / "report.json"));
  const double final_t = j["oracle"]["final_time"];
  EXPECT_TRUE(j["oracle"]["halted"].get<bool>());
  EXPECT_LT(final_t, 0.5);
  EXPECT_GT(final_t, 0.5 * 0.99);
  const auto rows = lines_of(slurp(dir / "flow.csv"));
  EXPECT_GT(rows.size(), 10u);
}

TEST(Run, OracleSphereSeries) {
  const fs::path dir = scratch_dir("oracle3");
  std::ostringstream log;
  const RunResult r = run(parse("domain = ball\ndim = 3\nk = 2\n"), RunMode::oracle, dir.string(), log);
  ASSERT_EQ(r.status, 0) << r.error;
  const auto j = nlohmann::json::parse(slurp(dir / "report.json"));
  EXPECT_NEAR(j["oracle"]["extinction_time"].get<double>(), 1.0 / 12, 1e-15);

  // Flat spheres sit below the hyperbolic profile, so the kappa checks fail.
  const fs::path kdir = scratch_dir("oracle3_kappa");
  const RunResult k = run(parse("domain = ball\ndim = 3\nk = 2\nkappa = 1\n"), RunMode::oracle,
                          kdir.string(), log);
  EXPECT_EQ(k.status, 1);
  const std::string report = slurp(kdir / "report.txt");
  EXPECT_NE(report.find("iso_kappa_nonnegative: fail"), std::string::npos) << report;
  EXPECT_NE(report.find("iso_nonnegative: pass"), std::string::npos) << report;
}

// The report's step slack is sized for h = 1/256; coarser grids carry more
// noise in the (vanishing) isoperimetric difference of a disk.
TEST(Run, VerifyBall) {
  const fs::path dir = scratch_dir("verify");
  std::ostringstream log;
  const RunResult r = run(parse("domain = ball\ndim = 2\nresolution = 256\nnum_levels = 8\n"
                                "offsets = 0.05, 0.1\nverify_tolerance = 0.05\n"),
                          RunMode::verify, dir.string(), log);
  EXPECT_EQ(r.status, 0) << r.error << slurp(dir / "report.txt");
  const auto j = nlohmann::json::parse(slurp(dir / "report.json"));
  ASSERT_TRUE(j.contains("verify"));
  for (const auto& check : j["verify"]) EXPECT_TRUE(check["passed"].get<bool>()) << check.dump();
}

TEST(Run, FailuresYieldStatusAndManifest) {
  const fs::path dir = scratch_dir("broken");
  std::ostringstream log;
  const RunResult r = run(parse("domain = ball\ndim = 2\nfield = /nonexistent/field.txt\n"), RunMode::analyze,
                          dir.string(), log);
  EXPECT_EQ(r.status, 3);
  EXPECT_FALSE(r.error.empty());
  const auto manifest = nlohmann::json::parse(slurp(dir / "manifest.json"));
  EXPECT_EQ(manifest["status"], 3);
  EXPECT_TRUE(manifest.contains("error"));
  const RunResult v = run(parse("domain = ellipse\ndim = 2\nsemi_axes = 1, 0.5\n"), RunMode::verify,
                          scratch_dir("broken_verify").string(), log);
  EXPECT_EQ(v.status, 3);
}
