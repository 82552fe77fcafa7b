#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "hkflow/iso/report.hpp"
#include "hkflow/oracle/sphere.hpp"
#include "hkflow/oracle/support.hpp"

using namespace hkflow;

namespace {

constexpr double kPi = std::numbers::pi;

// Classical RK4 on dR/dt = -(n/R)^k with a fixed step.
double rk4_radius(const SphereState& s, double t, int steps = 20000) {
  auto f = [&](double r) { return -std::pow(s.n / r, s.k); };
  double r = s.R0;
  const double dt = t / steps;
  for (int i = 0; i < steps; ++i) {
    const double a = f(r), b = f(r + 0.5 * dt * a), c = f(r + 0.5 * dt * b), d = f(r + dt * c);
    r += dt / 6 * (a + 2 * b + 2 * c + d);
  }
  return r;
}

// Time to shrink to zero: integral of (R/n)^k dR over [0, R0] by RK4 steps.
double rk4_extinction(const SphereState& s, int steps = 4000) {
  auto g = [&](double r) { return std::pow(r / s.n, s.k); };
  double t = 0.0;
  const double dr = s.R0 / steps;
  for (int i = 0; i < steps; ++i) {
    const double r = s.R0 - i * dr;
    t += dr / 6 * (g(r) + 4 * g(r - 0.5 * dr) + g(std::max(r - dr, 0.0)));
  }
  return t;
}

}  // namespace

TEST(Sphere, RadiusExamples) {
  EXPECT_NEAR(sphere_radius({1.0, 1, 1.0}, 0.375), 0.5, 1e-14);
  EXPECT_EQ(sphere_radius({1.3, 2, 2.0}, 0.0), 1.3);
  EXPECT_NEAR(sphere_radius({1.0, 2, 2.0}, 1.0 / 24), std::cbrt(0.5), 1e-14);
}

TEST(Sphere, RadiusMatchesIndependentIntegration) {
  for (const SphereState s : {SphereState{1.0, 1, 1.0}, SphereState{1.0, 2, 2.0}, SphereState{0.7, 1, 3.0},
                              SphereState{2.0, 2, 1.5}}) {
    const double T = extinction_time(s);
    for (double frac : {0.1, 0.5, 0.75}) {
      EXPECT_NEAR(sphere_radius(s, frac * T), rk4_radius(s, frac * T), 1e-10)
          << "R0 " << s.R0 << " n " << s.n << " k " << s.k;
    }
  }
}

TEST(Sphere, ExtinctionTimes) {
  EXPECT_NEAR(extinction_time({1.0, 1, 1.0}), 0.5, 1e-15);
  EXPECT_NEAR(extinction_time({1.0, 2, 1.0}), 0.25, 1e-15);
  EXPECT_NEAR(extinction_time({1.0, 2, 2.0}), 1.0 / 12, 1e-15);
  for (const SphereState s : {SphereState{1.0, 1, 1.0}, SphereState{1.0, 2, 2.0}, SphereState{1.5, 1, 2.5}}) {
    EXPECT_NEAR(extinction_time(s), rk4_extinction(s), 1e-8);
    EXPECT_NEAR(sphere_radius(s, extinction_time(s)), 0.0, 1e-4);
  }
}

TEST(Sphere, RejectsInvalidStateAndTime) {
  const SphereState s{1.0, 1, 1.0};
  EXPECT_THROW(sphere_radius(s, 0.6), std::domain_error);
  EXPECT_THROW(sphere_radius(s, -0.1), std::domain_error);
  EXPECT_THROW(extinction_time({0.0, 1, 1.0}), std::invalid_argument);
  EXPECT_THROW(extinction_time({1.0, 0, 1.0}), std::invalid_argument);
  EXPECT_THROW(extinction_time({1.0, 1, 0.5}), std::invalid_argument);
}

TEST(Sphere, ArrivalTimeInvertsRadius) {
  const SphereState s{1.0, 2, 2.0};
  for (double t : {0.0, 0.01, 0.05, 0.08}) EXPECT_NEAR(sphere_arrival_time(s, sphere_radius(s, t)), t, 1e-14);
  EXPECT_NEAR(sphere_arrival_time({1.0, 1, 1.0}, 0.5), 0.375, 1e-15);
  EXPECT_THROW(sphere_arrival_time(s, 1.5), std::domain_error);
}

TEST(SupportGeometry, Circles) {
  const SupportGeometry g = support_geometry(circle_support(1.0, 64));
  EXPECT_NEAR(g.length, 2 * kPi, 1e-13);
  EXPECT_NEAR(g.area, kPi, 1e-13);
  EXPECT_NEAR(g.curvature_integral(1.0), 2 * kPi, 1e-13);
  const SupportGeometry r = support_geometry(circle_support(2.5, 128));
  EXPECT_NEAR(r.length, 5 * kPi, 1e-12);
  EXPECT_NEAR(r.area, kPi * 6.25, 1e-12);
  EXPECT_NEAR(r.iso_diff(), 0.0, 1e-11);
  EXPECT_NEAR(r.curvature_integral(2.0), 2 * kPi / 2.5, 1e-13);
}

TEST(SupportGeometry, EllipseAreaAndCurvature) {
  const SupportGeometry g = support_geometry(ellipse_support(1.0, 0.5, 256));
  EXPECT_NEAR(g.area, kPi / 2, 1e-8);
  EXPECT_NEAR(g.curvature_integral(1.0), 2 * kPi, 1e-10);
  EXPECT_NEAR(g.min_rho(), 0.25, 1e-8);
  EXPECT_NEAR(*std::max_element(g.rho.begin(), g.rho.end()), 2.0, 1e-8);
  EXPECT_GT(g.iso_diff(), 0.0);
}

TEST(SupportFunctionValidation, SizeMustBePowerOfTwo) {
  EXPECT_THROW(circle_support(1.0, 32), std::invalid_argument);
  EXPECT_THROW(circle_support(1.0, 100), std::invalid_argument);
  EXPECT_NO_THROW(circle_support(1.0, 64));
  SupportFunction bad = circle_support(1.0, 64);
  bad.h[3] = std::nan("");
  EXPECT_THROW(support_geometry(bad), std::invalid_argument);
}

TEST(EvolveSupport, CircleFollowsRadiusOde) {
  for (double k : {1.0, 2.0}) {
    const SphereState s{1.0, 1, k};
    const double T = extinction_time(s);
    const SupportRun run = evolve_support(circle_support(1.0, 64), k, 0.9 * T, 0.05 * T);
    EXPECT_FALSE(run.halted);
    ASSERT_EQ(run.states.size(), 19u);
    for (const auto& st : run.states) {
      const double R = sphere_radius(s, st.t);
      for (double h : st.h) EXPECT_NEAR(h, R, 1e-8) << "k = " << k << ", t = " << st.t;
    }
    EXPECT_NEAR(run.states.back().t, 0.9 * T, 1e-15);
  }
}

TEST(EvolveSupport, EllipseIsoperimetricDifferenceDecreases) {
  const SupportRun run = evolve_support(ellipse_support(1.0, 0.5, 128), 1.0, 0.2, 0.01);
  const FlowSeries s = support_series(run, 1.0);
  ASSERT_GE(s.levels.size(), 10u);
  const double slack = 1e-8 * s.levels.front().iso_diff;
  for (std::size_t j = 1; j < s.levels.size(); ++j) {
    EXPECT_LT(s.levels[j].iso_diff, s.levels[j - 1].iso_diff + slack) << "t = " << s.levels[j].t;
    EXPECT_LT(s.levels[j].iso_diff, s.levels[j - 1].iso_diff);
  }
  for (const auto& L : s.levels) EXPECT_NEAR(L.hn_integral, 2 * kPi, 1e-6);
  // Area shrinks at rate 2 pi for k = 1.
  for (const auto& L : s.levels) EXPECT_NEAR(L.volume, kPi / 2 - 2 * kPi * L.t, 1e-6);
  const MonotonicityReport r = monotonicity_report(s);
  EXPECT_EQ(r.decreasing.verdict, Verdict::pass);
  EXPECT_EQ(r.nonnegative.verdict, Verdict::pass);
  EXPECT_NE(r.curvature.verdict, Verdict::fail);
}

TEST(EvolveSupport, LengthDerivativeIdentity) {
  for (double k : {1.0, 2.0}) {
    const double dt = 2.5e-4;
    const SupportRun run = evolve_support(ellipse_support(1.0, 0.6, 128), k, 0.01, dt);
    ASSERT_GE(run.states.size(), 41u);
    for (std::size_t i = 5; i + 1 < run.states.size(); i += 5) {
      const double dl = (support_geometry(run.states[i + 1]).length -
                         support_geometry(run.states[i - 1]).length) / (2 * dt);
      const double rhs = -support_geometry(run.states[i]).curvature_integral(k + 1.0);
      EXPECT_NEAR(dl, rhs, 1e-4 * std::abs(rhs)) << "k = " << k << ", t = " << run.states[i].t;
    }
  }
}

TEST(EvolveSupport, ConvexityIsPreserved) {
  const SupportRun run = evolve_support(ellipse_support(1.0, 0.4, 128), 2.0, 0.05, 0.005);
  for (const auto& st : run.states) EXPECT_GT(support_geometry(st).min_rho(), 0.0);
}

TEST(EvolveSupport, NonconvexDataThrows) {
  SupportFunction h = circle_support(1.0, 64);
  for (std::size_t i = 0; i < h.size(); ++i) h.h[i] += 0.5 * std::cos(3 * 2 * kPi * i / h.size());
  try {
    evolve_support(h, 1.0, 0.1, 0.01);
    FAIL() << "expected ConvexityLost";
  } catch (const ConvexityLost& e) {
    EXPECT_EQ(e.time(), 0.0);
  }
}

TEST(EvolveSupport, HaltsNearExtinction) {
  SupportRunOptions opt;
  opt.min_rho = 0.1;
  const SupportRun run = evolve_support(circle_support(1.0, 64), 1.0, 0.5, 0.05, opt);
  EXPECT_TRUE(run.halted);
  EXPECT_FALSE(run.halt_reason.empty());
  EXPECT_LT(run.states.back().t, 0.5);
  EXPECT_LT(run.states.back().h[0], 0.11);
  opt.min_rho = 1e-6;
  opt.max_substeps = 10;
  EXPECT_TRUE(evolve_support(circle_support(1.0, 64), 1.0, 0.5, 0.05, opt).halted);
}

TEST(EvolveSupport, RejectsBadArguments) {
  EXPECT_THROW(evolve_support(circle_support(1.0, 64), 0.5, 0.1, 0.01), std::invalid_argument);
  EXPECT_THROW(evolve_support(circle_support(1.0, 64), 1.0, 0.1, 0.0), std::invalid_argument);
}
