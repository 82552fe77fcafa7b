#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <numbers>

#include "hkflow/geometry/contour.hpp"
#include "hkflow/geometry/series.hpp"
#include "hkflow/iso/report.hpp"
#include "hkflow/oracle/sphere.hpp"
#include "hkflow/solver/continuation.hpp"

using namespace hkflow;

namespace {

constexpr double kPi = std::numbers::pi;

struct Benchmark {
  std::string name;
  DomainSpec domain;
  int resolution;
  double k;
};

struct Solved {
  WeakFlowApprox flow;
  FlowSeries series;
  double h;
};

const std::vector<Benchmark>& benchmarks() {
  static const std::vector<Benchmark> list = {
      {"disk_k1", DomainSpec::ball(2, Coord{}, 1.0), 128, 1.0},
      {"disk_k2", DomainSpec::ball(2, Coord{}, 1.0), 128, 2.0},
      {"ellipse_k1", DomainSpec::ellipsoid(2, Coord{}, Coord{1.0, 0.5}), 128, 1.0},
      {"ball3_k1", DomainSpec::ball(3, Coord{}, 1.0), 16, 1.0},
  };
  return list;
}

const Solved& solved(const Benchmark& b) {
  static std::map<std::string, Solved> cache;
  auto it = cache.find(b.name);
  if (it != cache.end()) return it->second;
  const auto disc = build_grid(b.domain, b.resolution, {0, 1});
  const double h = disc->grid.spacing();
  SolverParams params;
  params.k = b.k;
  WeakFlowApprox flow = epsilon_sweep(disc, EpsSchedule::for_grid(h), params);
  FlowSeries series = iso_series(flow.u, 16, {.k = b.k});
  return cache.emplace(b.name, Solved{std::move(flow), std::move(series), h}).first->second;
}

class BenchmarkSuite : public ::testing::TestWithParam<Benchmark> {};

std::string name_of(const ::testing::TestParamInfo<Benchmark>& info) { return info.param.name; }

}  // namespace

TEST_P(BenchmarkSuite, NoLevelIsDropped) {
  const Solved& s = solved(GetParam());
  EXPECT_TRUE(s.series.dropped.empty());
  EXPECT_EQ(s.series.levels.size(), 16u);
}

TEST_P(BenchmarkSuite, LevelMeshesAreClosed) {
  const Solved& s = solved(GetParam());
  for (const auto& L : s.series.levels) {
    EXPECT_TRUE(L.closed) << "t = " << L.t;
    const ContourMesh m = extract_level_set(s.flow.u, L.t);
    ASSERT_TRUE(m.closed);
    if (m.dim == 2) {
      std::vector<int> deg(m.vertices.size(), 0);
      for (const auto& e : m.elements) {
        ++deg[e[0]];
        ++deg[e[1]];
      }
      for (int d : deg) EXPECT_EQ(d, 2);
    } else {
      std::map<std::pair<int, int>, int> edges;
      for (const auto& e : m.elements) {
        for (int i = 0; i < 3; ++i) ++edges[std::minmax(e[i], e[(i + 1) % 3])];
      }
      for (const auto& [edge, count] : edges) EXPECT_EQ(count, 2);
    }
  }
}

TEST_P(BenchmarkSuite, AreaAndVolumeDecrease) {
  const Solved& s = solved(GetParam());
  const auto& lv = s.series.levels;
  const double slack = 1e-3 * lv.front().area;
  for (std::size_t j = 1; j < lv.size(); ++j) {
    EXPECT_LE(lv[j].area, lv[j - 1].area + slack) << "t = " << lv[j].t;
    EXPECT_LT(lv[j].volume, lv[j - 1].volume) << "t = " << lv[j].t;
  }
}

TEST_P(BenchmarkSuite, CoareaIdentity) {
  const Solved& s = solved(GetParam());
  const CoareaReport r = coarea_check(s.flow.u);
  EXPECT_LE(r.relative_error, 0.03) << r.gradient_integral << " vs " << r.level_integral;
}

TEST_P(BenchmarkSuite, LevelBandsStayThin) {
  const Solved& s = solved(GetParam());
  for (const auto& L : s.series.levels) {
    EXPECT_LE(L.band_measure, 4 * s.h * L.area) << "t = " << L.t;
  }
}

TEST_P(BenchmarkSuite, CurvatureLowerBound) {
  const Solved& s = solved(GetParam());
  const double bound = curvature_lower_bound(s.series.n);
  for (const auto& L : s.series.levels) {
    EXPECT_GE(L.hn_integral, 0.97 * bound) << "t = " << L.t;
  }
  if (s.series.n == 1) {
    for (const auto& L : s.series.levels) EXPECT_GE(L.hn_integral, 0.98 * 2 * kPi);
  }
}

TEST_P(BenchmarkSuite, IsoperimetricDifferenceNonnegative) {
  const Solved& s = solved(GetParam());
  const MonotonicityReport r = monotonicity_report(s.series);
  EXPECT_NE(r.nonnegative.verdict, Verdict::fail) << r.nonnegative.worst_margin;
  EXPECT_NE(r.curvature.verdict, Verdict::fail) << r.curvature.worst_margin;
}

INSTANTIATE_TEST_SUITE_P(Benchmarks, BenchmarkSuite, ::testing::ValuesIn(benchmarks()), name_of);

TEST(BallBenchmarks, MatchRadialArrivalTime) {
  for (std::size_t i : {0u, 1u, 3u}) {
    const Benchmark& b = benchmarks()[i];
    const Solved& s = solved(b);
    const SphereState st{1.0, b.domain.dim() - 1, b.k};
    double err = 0.0;
    for (std::size_t p : s.flow.u.mask().unknowns()) {
      const double r = std::min(norm(s.flow.u.grid().position(p), b.domain.dim()), 1.0);
      err = std::max(err, std::abs(s.flow.u.values()[p] - sphere_arrival_time(st, r)));
    }
    EXPECT_LE(err, b.domain.dim() == 2 ? 0.02 : 0.05) << b.name;
    EXPECT_NEAR(s.flow.T, extinction_time(st), b.domain.dim() == 2 ? 0.02 : 0.05) << b.name;
  }
}

TEST(BallBenchmarks, VolumeHolderExponent) {
  for (std::size_t i : {0u, 1u}) {
    const Benchmark& b = benchmarks()[i];
    const double alpha = holder_exponent(solved(b).series);
    EXPECT_GE(alpha, 1.0 / (b.k + 1.0) - 0.1) << b.name;
  }
}

TEST(BallBenchmarks, IsoperimetricDifferenceVanishes) {
  for (std::size_t i : {0u, 1u}) {
    const FlowSeries& s = solved(benchmarks()[i]).series;
    const double a1 = s.levels.front().area;
    for (const auto& L : s.levels) EXPECT_LE(std::abs(L.iso_diff), 1e-2 * a1 * a1) << "t = " << L.t;
  }
}

TEST(EllipseBenchmark, ReportPasses) {
  const FlowSeries& s = solved(benchmarks()[2]).series;
  const MonotonicityReport r = monotonicity_report(s);
  EXPECT_TRUE(r.passed()) << r.nonnegative.worst_margin << " " << r.decreasing.worst_margin << " "
                          << r.curvature.worst_margin;
  for (const auto& L : s.levels) EXPECT_GT(L.iso_diff, 0.0);
  // Total curvature of a convex curve is exactly 2 pi.
  for (std::size_t j = 0; j < r.curvature_margins.size(); ++j) {
    EXPECT_NEAR(r.curvature_margins[j], 0.0, 0.02 * 2 * kPi) << "t = " << s.levels[j].t;
  }
}
