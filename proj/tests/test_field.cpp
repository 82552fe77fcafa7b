#include <gtest/gtest.h>

#include <array>
#include <cmath>
#include <numbers>
#include <random>

#include "hkflow/field/discretization.hpp"
#include "hkflow/field/scalar_field.hpp"

using namespace hkflow;

namespace {

constexpr double kPi = std::numbers::pi;

DiscretizationPtr unit_disk(int resolution) {
  return build_grid(DomainSpec::ball(2, Coord{}, 1.0), resolution, {0, 1});
}

DiscretizationPtr ellipse(int resolution) {
  return build_grid(DomainSpec::ellipsoid(2, Coord{}, Coord{1.0, 0.5}), resolution, {0, 1});
}

std::size_t node_at(const CartesianGrid& g, const Coord& x) {
  NodeIndex idx{};
  for (int a = 0; a < g.dim(); ++a) {
    idx[a] = static_cast<int>(std::lround((x[a] - g.origin()[a]) / g.spacing()));
  }
  return g.linear(idx);
}

// Area of {x^2/a^2 + y^2/b^2 < 1} by midpoint sampling on a fine lattice.
double sampled_ellipse_area(double a, double b, int per_axis) {
  const double dx = 2 * a / per_axis, dy = 2 * b / per_axis;
  long inside = 0;
  for (int i = 0; i < per_axis; ++i) {
    for (int j = 0; j < per_axis; ++j) {
      const double x = -a + (i + 0.5) * dx, y = -b + (j + 0.5) * dy;
      if (x * x / (a * a) + y * y / (b * b) < 1.0) ++inside;
    }
  }
  return inside * dx * dy;
}

}  // namespace

TEST(BuildGrid, BallExtentIsPaddedByTwoCells) {
  auto disc = unit_disk(64);
  const double h = 1.0 / 64;
  const CartesianGrid& g = disc->grid;
  for (int a = 0; a < 2; ++a) {
    EXPECT_NEAR(g.origin()[a], -1 - 2 * h, 1e-12);
    EXPECT_NEAR(g.origin()[a] + g.extent(a), 1 + 2 * h, 1e-12);
  }
  EXPECT_DOUBLE_EQ(g.spacing(), h);
}

TEST(BuildGrid, OriginIsInteriorAndPaddingIsExterior) {
  auto disc = unit_disk(64);
  const double h = 1.0 / 64;
  EXPECT_EQ(disc->mask.node_class(node_at(disc->grid, Coord{0, 0})), NodeClass::interior);
  EXPECT_EQ(disc->mask.node_class(node_at(disc->grid, Coord{1 + 2 * h, 0})),
            NodeClass::exterior);
}

TEST(BuildGrid, EllipseInsideCountMatchesSampledArea) {
  auto disc = ellipse(64);
  const double h = 1.0 / 64;
  const double expected = sampled_ellipse_area(1.0, 0.5, 4000) / (h * h);
  const double count = static_cast<double>(disc->mask.unknowns().size());
  EXPECT_NEAR(count / expected, 1.0, 0.03);
  EXPECT_NEAR(sampled_ellipse_area(1.0, 0.5, 4000), kPi / 2, 1e-3);
}

TEST(BuildGrid, RejectsDegenerateInput) {
  EXPECT_THROW(DomainSpec::ball(2, Coord{}, 0.0), std::invalid_argument);
  EXPECT_THROW(DomainSpec::ellipsoid(2, Coord{}, Coord{1.0, -1.0}), std::invalid_argument);
  EXPECT_THROW(DomainSpec::ball(4, Coord{}, 1.0), std::invalid_argument);
  EXPECT_THROW(unit_disk(8), std::invalid_argument);
  ConvexPolygon dent{{{0, 0}, {1, 0}, {0.5, 0.1}, {1, 1}, {0, 1}}};
  EXPECT_THROW(DomainSpec{dent}, std::invalid_argument);
}

TEST(BuildGrid, ExtentContainsDomain) {
  for (const DomainSpec& spec :
       {DomainSpec::ball(2, Coord{0.3, -0.2}, 0.7), DomainSpec::ellipsoid(3, Coord{}, Coord{1, 0.5, 0.4}),
        DomainSpec(ConvexPolygon{{{0, 0}, {1, 0}, {1, 1}, {0, 1}}})}) {
    auto disc = build_grid(spec, 16, {0, 1});
    const Box box = spec.bounding_box();
    for (int a = 0; a < spec.dim(); ++a) {
      EXPECT_GE(disc->grid.count(a), 3);
      EXPECT_LT(disc->grid.origin()[a], box.lo[a]);
      EXPECT_GT(disc->grid.origin()[a] + disc->grid.extent(a), box.hi[a]);
    }
  }
}

TEST(DomainSpec, EllipseDistanceIsFiniteNearAxes) {
  const DomainSpec e2 = DomainSpec::ellipsoid(2, Coord{}, Coord{1.0, 0.5});
  const DomainSpec e3 = DomainSpec::ellipsoid(3, Coord{}, Coord{1.0, 0.6, 0.3});
  for (double tiny : {0.0, 1e-300, 6.9e-18, 1e-13}) {
    for (double x : {-0.9, -0.5, 0.0, 0.3, 0.7, 1.2}) {
      EXPECT_TRUE(std::isfinite(e2.signed_distance(Coord{x, tiny})));
      EXPECT_TRUE(std::isfinite(e3.signed_distance(Coord{x, tiny, tiny})));
      EXPECT_TRUE(std::isfinite(e3.signed_distance(Coord{x, 0.1, tiny})));
    }
  }
  // On the major axis inside the evolute the nearest point is off-axis.
  EXPECT_NEAR(e2.signed_distance(Coord{0.3, 6.9e-18}), e2.signed_distance(Coord{0.3, 0.0}), 1e-12);
  EXPECT_NEAR(e2.signed_distance(Coord{0.0, 0.0}), -0.5, 1e-15);
}

TEST(DomainSpec, SignedDistanceIsOneLipschitz) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> U(-2.0, 2.0);
  Dumbbell d;
  d.dim = 3;
  d.center_a = {-0.6, 0, 0};
  d.center_b = {0.6, 0, 0};
  d.radius_a = 0.5;
  d.radius_b = 0.4;
  for (const DomainSpec& spec :
       {DomainSpec::ball(3, Coord{}, 1.0), DomainSpec::ellipsoid(2, Coord{}, Coord{1.0, 0.5}),
        DomainSpec::ellipsoid(3, Coord{}, Coord{1.0, 0.6, 0.3}), DomainSpec(d),
        DomainSpec(ConvexPolygon{{{0, 0}, {2, 0}, {1, 1.5}}})}) {
    const int n = spec.dim();
    for (int i = 0; i < 2000; ++i) {
      Coord x{}, y{};
      for (int a = 0; a < n; ++a) {
        x[a] = U(rng);
        y[a] = U(rng);
      }
      const double lip = std::abs(spec.signed_distance(x) - spec.signed_distance(y));
      ASSERT_LE(lip, norm(sub(x, y), n) * (1 + 1e-9) + 1e-12) << spec.name();
    }
  }
}

TEST(DomainSpec, BoundaryCurvatureFlag) {
  auto ball = check_boundary_curvature(DomainSpec::ball(2, Coord{}, 1.0), 500);
  EXPECT_TRUE(ball.positive);
  EXPECT_NEAR(ball.min_curvature, 1.0, 1e-3);
  Dumbbell d;
  d.dim = 2;
  d.center_a = {-0.6, 0};
  d.center_b = {0.6, 0};
  d.radius_a = d.radius_b = 0.8;
  auto neck = check_boundary_curvature(DomainSpec(d), 2000);
  EXPECT_FALSE(neck.positive);
  EXPECT_LT(neck.min_curvature, 0.0);
}

TEST(DomainMask, ClassificationMatchesDistanceSign) {
  for (auto disc : {unit_disk(32), ellipse(48)}) {
    const auto& g = disc->grid;
    const auto& m = disc->mask;
    for (std::size_t p = 0; p < g.size(); ++p) {
      const bool in = m.distance(p) < 0.0;
      EXPECT_EQ(m.is_inside(p), in);
      bool opposite = false;
      const NodeIndex idx = g.multi(p);
      for (int a = 0; a < 2; ++a) {
        for (int side : {-1, 1}) {
          NodeIndex q = idx;
          q[a] += side;
          if (g.contains(q) && (m.distance(g.linear(q)) < 0.0) != in) opposite = true;
        }
      }
      switch (m.node_class(p)) {
        case NodeClass::interior: EXPECT_TRUE(in && !opposite); break;
        case NodeClass::exterior: EXPECT_TRUE(!in && !opposite); break;
        case NodeClass::boundary_band: EXPECT_TRUE(opposite); break;
      }
      // Snapping only moves nodes within a tenth of a cell of the boundary.
      EXPECT_LE(std::abs(m.distance(p) - disc->domain.signed_distance(g.position(p))),
                0.1 * g.spacing() + 1e-15);
    }
  }
}

TEST(ScalarField, ExteriorHoldsSentinel) {
  auto disc = unit_disk(32);
  auto u = sample_field(disc, [](const Coord& x) { return x[0]; });
  for (std::size_t p = 0; p < u.size(); ++p) {
    EXPECT_EQ(std::isnan(u.values()[p]), disc->mask.is_exterior(p));
  }
  EXPECT_THROW(ScalarField(disc, std::vector<double>(3)), std::invalid_argument);
}

TEST(FdGradient, ExactOnRandomAffineFields) {
  auto disc = ellipse(32);
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> U(-5.0, 5.0);
  for (int trial = 0; trial < 10; ++trial) {
    const double a = U(rng), b = U(rng), c = U(rng);
    auto u = sample_field(disc, [&](const Coord& x) { return a * x[0] + b * x[1] + c; });
    for (std::size_t p = 0; p < u.size(); ++p) {
      if (disc->mask.node_class(p) != NodeClass::interior) continue;
      const Coord g = fd_gradient(u, p);
      ASSERT_NEAR(g[0], a, 1e-10);
      ASSERT_NEAR(g[1], b, 1e-10);
    }
  }
}

TEST(FdGradient, AffineExampleAndSymmetry) {
  auto disc = unit_disk(64);
  auto u = sample_field(disc, [](const Coord& x) { return 3 * x[0] + 2 * x[1]; });
  const Coord g = fd_gradient(u, node_at(disc->grid, Coord{0.25, -0.5}));
  EXPECT_NEAR(g[0], 3.0, 1e-12);
  EXPECT_NEAR(g[1], 2.0, 1e-12);
  auto sq = sample_field(disc, [](const Coord& x) { return x[0] * x[0]; });
  EXPECT_NEAR(fd_gradient(sq, node_at(disc->grid, Coord{0, 0}))[0], 0.0, 1e-15);
}

TEST(FdGradient, QuadraticAtHalfRadius) {
  auto disc = unit_disk(64);
  auto u = sample_field(disc, [](const Coord& x) { return 0.5 * (x[0] * x[0] + x[1] * x[1]); });
  const Coord g = fd_gradient(u, node_at(disc->grid, Coord{0.5, 0}));
  EXPECT_NEAR(g[0], 0.5, 1e-3);
  EXPECT_NEAR(g[1], 0.0, 1e-3);
}

TEST(FdGradient, RejectsExteriorNode) {
  auto disc = unit_disk(32);
  auto u = constant_field(disc, 1.0);
  EXPECT_THROW(fd_gradient(u, 0), std::invalid_argument);
}

namespace {

// Max gradient error of a radial field u(r) over nodes of class `cls`.
template <class Profile, class Slope>
double radial_gradient_error(int res, NodeClass cls, Profile u_of_r, Slope du_of_r) {
  auto disc = unit_disk(res);
  auto u = dirichlet_field(disc, [&](const Coord& x) { return u_of_r(std::hypot(x[0], x[1])); });
  double err = 0.0;
  for (std::size_t p : disc->mask.unknowns()) {
    if (disc->mask.node_class(p) != cls) continue;
    const Coord x = disc->grid.position(p);
    const double r = std::hypot(x[0], x[1]);
    const double dr = du_of_r(r);
    const Coord g = fd_gradient(u, p);
    const double ex = r > 0 ? dr * x[0] / r : 0.0, ey = r > 0 ? dr * x[1] / r : 0.0;
    err = std::max(err, std::hypot(g[0] - ex, g[1] - ey));
  }
  return err;
}

}  // namespace

TEST(FdGradient, RefinementOrderOnHalfSquaredRadius) {
  auto u = [](double r) { return 0.5 * r * r; };
  auto du = [](double r) { return r; };
  const std::array<double, 3> err = {radial_gradient_error(32, NodeClass::interior, u, du),
                                     radial_gradient_error(64, NodeClass::interior, u, du),
                                     radial_gradient_error(128, NodeClass::interior, u, du)};
  for (int i = 0; i + 1 < 3; ++i) EXPECT_LE(err[i + 1], 0.55 * err[i] + 1e-12);
}

TEST(FdGradient, InteriorOrderOnNonPolynomialField) {
  auto u = [](double r) { return std::cos(0.5 * kPi * r); };
  auto du = [](double r) { return -0.5 * kPi * std::sin(0.5 * kPi * r); };
  const double e1 = radial_gradient_error(32, NodeClass::interior, u, du);
  const double e2 = radial_gradient_error(64, NodeClass::interior, u, du);
  const double e3 = radial_gradient_error(128, NodeClass::interior, u, du);
  EXPECT_GE(std::log2(e1 / e2), 1.0);
  EXPECT_GE(std::log2(e2 / e3), 1.0);
}

TEST(FdGradient, BandErrorIsFirstOrder) {
  // One-sided differences to the cut points and interpolated ghosts at
  // nodes very close to the boundary.
  auto u = [](double r) { return 0.5 * (r * r - 1.0); };
  auto du = [](double r) { return r; };
  double prev = 0.0;
  for (int res : {32, 64, 128}) {
    const double err = radial_gradient_error(res, NodeClass::boundary_band, u, du);
    EXPECT_LE(err, 0.5 / res) << "resolution " << res;
    if (prev > 0.0) {
      EXPECT_LE(err, 0.6 * prev) << "resolution " << res;
    }
    prev = err;
    EXPECT_LT(radial_gradient_error(res, NodeClass::interior, u, du), 1e-10);
  }
}

TEST(Integrate, UnitFieldGivesArea) {
  EXPECT_NEAR(integrate_interior(constant_field(unit_disk(128), 1.0)), kPi, 0.01 * kPi);
  EXPECT_NEAR(integrate_interior(constant_field(ellipse(128), 1.0)), kPi / 2, 0.01 * kPi / 2);
  EXPECT_EQ(integrate_interior(constant_field(unit_disk(32), 0.0)), 0.0);
}

TEST(Integrate, IsMonotone) {
  auto disc = ellipse(32);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  std::uniform_real_distribution<double> gap(0.0, 0.5);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> a(disc->grid.size(), kExteriorSentinel), b = a;
    for (std::size_t p = 0; p < a.size(); ++p) {
      if (disc->mask.is_exterior(p)) continue;
      a[p] = U(rng);
      b[p] = a[p] + gap(rng);
    }
    EXPECT_LE(integrate_interior(ScalarField(disc, a)), integrate_interior(ScalarField(disc, b)));
  }
}

TEST(Integrate, ThreeDimensionalBallVolume) {
  auto disc = build_grid(DomainSpec::ball(3, Coord{}, 1.0), 32, {0, 1});
  EXPECT_NEAR(integrate_interior(constant_field(disc, 1.0)), 4 * kPi / 3, 0.01 * 4 * kPi / 3);
}

TEST(Dirichlet, GhostsExtrapolateToZeroOnBoundary) {
  auto disc = unit_disk(64);
  // Ghost values reproduce linear fields that vanish on the boundary along the cut edges.
  auto u = dirichlet_field(disc, [](const Coord& x) { return 1.0 - std::hypot(x[0], x[1]); });
  for (std::size_t g : disc->mask.ghosts()) {
    const double d = std::hypot(disc->grid.position(g)[0], disc->grid.position(g)[1]) - 1.0;
    EXPECT_NEAR(u.values()[g], -d, 2.0 / 64) << "ghost " << g;
  }
}
