#include <gtest/gtest.h>

#include <array>
#include <cmath>

#include "activefv/grid.hpp"
#include "oracles.hpp"

using namespace activefv;

TEST(BuildGrid, CoarseSpacingsAndStepCount) {
  const GridSpec g = build_grid(4, 1, 4, 0.01, 1.0);
  EXPECT_DOUBLE_EQ(g.dx, 0.25);
  EXPECT_DOUBLE_EQ(g.dy, 1.0);
  EXPECT_DOUBLE_EQ(g.dtheta, kPi / 2);
  EXPECT_EQ(g.nt, 100);
}

TEST(BuildGrid, SixtyFourCells) {
  const GridSpec g = build_grid(64, 1, 64, 0.01, 1.0);
  EXPECT_EQ(g.dx, 1.0 / 64);
  EXPECT_EQ(g.nt, 100);
  EXPECT_EQ(g.num_cells(), 64u * 64u);
}

TEST(BuildGrid, RejectsNonIntegerStepCount) {
  EXPECT_THROW(build_grid(4, 1, 4, 0.3, 1.0), ConfigError);
}

TEST(BuildGrid, RejectsZeroCountsAndBadTimes) {
  EXPECT_THROW(build_grid(0, 1, 4, 0.01, 1.0), ConfigError);
  EXPECT_THROW(build_grid(4, 0, 4, 0.01, 1.0), ConfigError);
  EXPECT_THROW(build_grid(4, 1, 0, 0.01, 1.0), ConfigError);
  EXPECT_THROW(build_grid(4, 1, 4, 0.0, 1.0), ConfigError);
  EXPECT_THROW(build_grid(4, 1, 4, -0.01, 1.0), ConfigError);
}

TEST(BuildGrid, AcceptsQuotientsOffByRoundoff) {
  // 0.41 / 0.001 evaluates to 409.99999999999994
  EXPECT_EQ(build_grid(4, 4, 4, 0.001, 0.41).nt, 410);
  EXPECT_EQ(build_grid(4, 1, 4, 0.01, 0.0).nt, 0);
}

TEST(BuildGrid, SpacingsTileThePeriods) {
  for (int n : {1, 3, 7, 24, 64, 100}) {
    const GridSpec g = build_grid(n, n, n, 0.5, 1.0);
    EXPECT_NEAR(g.dx * n, 1.0, 4 * std::numeric_limits<double>::epsilon());
    EXPECT_NEAR(g.dtheta * n, kTwoPi, 8 * std::numeric_limits<double>::epsilon());
  }
}

TEST(Grid, CentresAndIndexing) {
  const GridSpec g = make_mesh(4, 2, 8);
  EXPECT_DOUBLE_EQ(g.x_center(0), -0.375);
  EXPECT_DOUBLE_EQ(g.x_center(3), 0.375);
  EXPECT_DOUBLE_EQ(g.y_center(1), 0.25);
  EXPECT_DOUBLE_EQ(g.theta_center(0), kPi / 8);
  EXPECT_DOUBLE_EQ(g.theta_face(3), kPi);
  EXPECT_EQ(g.index(0, 0, 1), 1u);
  EXPECT_EQ(g.index(0, 1, 0), 8u);
  EXPECT_EQ(g.index(1, 0, 0), 16u);
  EXPECT_EQ(wrap(-1, 4), 3);
  EXPECT_EQ(wrap(4, 4), 0);
}

TEST(Grid, AspectWarningOnlyForThinAngularCells) {
  EXPECT_FALSE(aspect_warning(make_mesh(64, 1, 64)).has_value());
  EXPECT_TRUE(aspect_warning(make_mesh(4, 4, 256)).has_value());
  // single-cell y direction is the y-invariant reduction, not a thin cell
  EXPECT_FALSE(aspect_warning(make_mesh(16, 1, 16)).has_value());
}

TEST(Fields, RejectMismatchedStorage) {
  const GridSpec g = make_mesh(2, 2, 2);
  EXPECT_THROW(DensityField(g, std::vector<double>(7)), InputError);
  EXPECT_THROW(SpatialField(g, std::vector<double>(3)), InputError);
}

// ---------------------------------------------------------------------------
// Cell averages

TEST(CellAverage, UniformState) {
  const GridSpec g = make_mesh(8, 1, 8);
  const DensityField f =
      cell_average_init([](double, double, double) { return 1.0 / kTwoPi; }, g);
  for (double v : f.values()) EXPECT_DOUBLE_EQ(v, 1.0 / kTwoPi);
  EXPECT_NEAR(mass(f), 1.0, 1e-15);
}

TEST(CellAverage, AlignedTwoBumpIndicatorIsExact) {
  const GridSpec g = make_mesh(64, 1, 8);
  const std::array<Interval, 2> bumps{Interval{-0.25, 0.0}, Interval{0.0, 0.25}};
  const DensityField raw = x_indicator_init(g, bumps, 1.0);
  for (int i = 0; i < 64; ++i) {
    const double expect = (i >= 16 && i < 48) ? 1.0 : 0.0;
    EXPECT_EQ(raw(i, 0, 3), expect) << i;
  }
  const DensityField f = normalized(raw);
  EXPECT_NEAR(mass(f), 1.0, 1e-14);
  // C = 1 / (|support| * 2 pi) with |support| = 1/2
  EXPECT_NEAR(f(20, 0, 0), 1.0 / kPi, 1e-14);
}

TEST(CellAverage, MisalignedIndicatorGetsOverlapFraction) {
  const GridSpec g = make_mesh(4, 1, 1);
  const std::array<Interval, 1> iv{Interval{-0.125, 0.125}};
  const DensityField f = x_indicator_init(g, iv, 2.0);
  EXPECT_DOUBLE_EQ(f(0, 0, 0), 0.0);
  EXPECT_DOUBLE_EQ(f(1, 0, 0), 1.0);
  EXPECT_DOUBLE_EQ(f(2, 0, 0), 1.0);
  EXPECT_DOUBLE_EQ(f(3, 0, 0), 0.0);
}

TEST(CellAverage, IndicatorWrapsAcrossTheSeam) {
  const GridSpec g = make_mesh(4, 1, 1);
  const std::array<Interval, 1> iv{Interval{0.375, 0.625}};
  const DensityField f = x_indicator_init(g, iv, 1.0);
  EXPECT_DOUBLE_EQ(f(0, 0, 0), 0.5);
  EXPECT_DOUBLE_EQ(f(3, 0, 0), 0.5);
  EXPECT_DOUBLE_EQ(f(1, 0, 0), 0.0);
}

TEST(CellAverage, CosinePerturbationMatchesClosedForm) {
  const GridSpec g = make_mesh(8, 1, 4);
  auto f0 = [](double x, double, double) {
    return (1.0 + 0.1 * std::cos(2 * kPi * x)) / kTwoPi;
  };
  const DensityField f = cell_average_init(f0, g, 8);
  for (int i = 0; i < 8; ++i) {
    const long double a = -0.5L + i / 8.0L, b = a + 1 / 8.0L;
    const long double avg =
        (1.0L + 0.1L * (std::sin(2 * oracle::kPiL * b) - std::sin(2 * oracle::kPiL * a)) /
                    (2 * oracle::kPiL) * 8.0L) /
        (2 * oracle::kPiL);
    for (int k = 0; k < 4; ++k)
      EXPECT_NEAR(f(i, 0, k), static_cast<double>(avg), 1e-15) << i;
  }
  EXPECT_NEAR(mass(f), 1.0, 1e-14);
}

TEST(CellAverage, RejectsNegativeSamples) {
  const GridSpec g = make_mesh(4, 1, 4);
  EXPECT_THROW(cell_average_init([](double x, double, double) { return x; }, g),
               InputError);
  EXPECT_THROW(cell_average_init([](double, double, double) { return NAN; }, g),
               InputError);
}

TEST(CellAverage, NormalizationGivesUnitMass) {
  const GridSpec g = make_mesh(6, 5, 7);
  const DensityField f = cell_average_init(
      [](double x, double y, double t) { return 2 + std::sin(6 * x) * std::cos(y + t); }, g, 3,
      true);
  EXPECT_NEAR(mass(f), 1.0, 1e-14);
}

TEST(GaussLegendre, IntegratesPolynomialsExactly) {
  for (int order = 1; order <= 6; ++order) {
    const auto [x, w] = gauss_legendre(order);
    for (int deg = 0; deg <= 2 * order - 1; ++deg) {
      double s = 0;
      for (std::size_t m = 0; m < x.size(); ++m) s += w[m] * std::pow(x[m], deg);
      const double exact = deg % 2 ? 0.0 : 2.0 / (deg + 1);
      EXPECT_NEAR(s, exact, 1e-14) << order << " " << deg;
    }
  }
}

// ---------------------------------------------------------------------------
// Differences

TEST(Differences, ConstantFieldHasZeroDifferences) {
  const GridSpec g = make_mesh(5, 3, 4);
  const DensityField f(g, 0.7);
  for (const DualField& d : {ddx(f), ddy(f), ddtheta(f)})
    for (double v : d.values()) EXPECT_EQ(v, 0.0);
}

TEST(Differences, RampWrapsAtTheSeam) {
  const GridSpec g = make_mesh(4, 1, 1);
  DensityField f(g);
  for (int i = 0; i < 4; ++i) f(i, 0, 0) = i;
  const DualField d = ddx(f);
  const std::array<double, 4> expect{1, 1, 1, -3};
  for (int i = 0; i < 4; ++i) EXPECT_DOUBLE_EQ(d.values()[i], expect[i] / g.dx);
}

TEST(Differences, SineDifferenceQuotientIdentity) {
  const GridSpec g = make_mesh(16, 1, 1);
  DensityField f(g);
  for (int i = 0; i < 16; ++i) f(i, 0, 0) = std::sin(2 * kPi * g.x_center(i));
  const DualField d = ddx(f);
  for (int i = 0; i < 16; ++i) {
    // sin(a + h) - sin(a) = 2 cos(a + h/2) sin(h/2)
    const double face = g.x_center(i) + g.dx / 2;
    const double expect = 2 * std::cos(2 * kPi * face) * std::sin(kPi * g.dx) / g.dx;
    EXPECT_NEAR(d.values()[i], expect, 1e-13);
  }
}

TEST(Differences, Linearity) {
  const GridSpec g = make_mesh(6, 5, 4);
  const DensityField a = oracle::random_density(g), b = oracle::random_density(g);
  DensityField comb(g);
  for (std::size_t m = 0; m < comb.size(); ++m)
    comb.values()[m] = 2.5 * a.values()[m] - 0.75 * b.values()[m];
  const DualField da = ddtheta(a), db = ddtheta(b), dc = ddtheta(comb);
  for (std::size_t m = 0; m < comb.size(); ++m)
    EXPECT_NEAR(dc.values()[m], 2.5 * da.values()[m] - 0.75 * db.values()[m], 1e-12);
}

TEST(Differences, SingleCellDirectionVanishes) {
  const GridSpec g = make_mesh(5, 1, 3);
  const DensityField f = oracle::random_density(g);
  const DualField d = ddy(f);
  for (double v : d.values()) EXPECT_EQ(v, 0.0);
}

TEST(CenteredGradient, ConstantAndSine) {
  const GridSpec g = make_mesh(12, 10, 1);
  const Gradient zero = centered_gradient(SpatialField(g, 3.0));
  for (double v : zero.x.values()) EXPECT_EQ(v, 0.0);
  for (double v : zero.y.values()) EXPECT_EQ(v, 0.0);

  SpatialField c(g);
  for (int i = 0; i < 12; ++i)
    for (int j = 0; j < 10; ++j) c(i, j) = std::sin(2 * kPi * g.x_center(i));
  const Gradient grad = centered_gradient(c);
  for (int i = 0; i < 12; ++i)
    for (int j = 0; j < 10; ++j) {
      // sin(a + h) - sin(a - h) = 2 cos(a) sin(h)
      const double expect =
          std::cos(2 * kPi * g.x_center(i)) * std::sin(2 * kPi * g.dx) / g.dx;
      EXPECT_NEAR(grad.x(i, j), expect, 1e-13);
      EXPECT_EQ(grad.y(i, j), 0.0);
    }
}

TEST(CenteredGradient, StencilSupportOfAPoint) {
  const GridSpec g = make_mesh(7, 6, 1);
  SpatialField c(g);
  c(3, 2) = 5.0;
  const Gradient grad = centered_gradient(c);
  int nx = 0, ny = 0;
  for (int i = 0; i < 7; ++i)
    for (int j = 0; j < 6; ++j) {
      nx += grad.x(i, j) != 0.0;
      ny += grad.y(i, j) != 0.0;
    }
  EXPECT_EQ(nx, 2);
  EXPECT_EQ(ny, 2);
  EXPECT_DOUBLE_EQ(grad.x(2, 2), 5.0 / (2 * g.dx));
  EXPECT_DOUBLE_EQ(grad.x(4, 2), -5.0 / (2 * g.dx));
  EXPECT_DOUBLE_EQ(grad.y(3, 1), 5.0 / (2 * g.dy));
  EXPECT_DOUBLE_EQ(grad.y(3, 3), -5.0 / (2 * g.dy));
}

TEST(Hessian, ConstantIsZero) {
  const Hessian h = discrete_hessian(SpatialField(make_mesh(5, 5, 1), -2.0));
  for (const SpatialField* s : {&h.xx, &h.xy, &h.yy, &h.yx()})
    for (double v : s->values()) EXPECT_EQ(v, 0.0);
}

TEST(Hessian, CosineEigenvalue) {
  const GridSpec g = make_mesh(16, 4, 1);
  SpatialField c(g);
  for (int i = 0; i < 16; ++i)
    for (int j = 0; j < 4; ++j) c(i, j) = std::cos(2 * kPi * g.x_center(i));
  const Hessian h = discrete_hessian(c);
  const double mu = 2 * (1 - std::cos(2 * kPi * g.dx)) / (g.dx * g.dx);
  for (int i = 0; i < 16; ++i)
    for (int j = 0; j < 4; ++j) {
      EXPECT_NEAR(h.xx(i, j), -mu * c(i, j), 1e-11);
      EXPECT_NEAR(h.xy(i, j), 0.0, 1e-12);
      EXPECT_NEAR(h.yy(i, j), 0.0, 1e-12);
    }
}

TEST(Hessian, ProductCrossTerm) {
  const GridSpec g = make_mesh(12, 10, 1);
  SpatialField c(g);
  for (int i = 0; i < 12; ++i)
    for (int j = 0; j < 10; ++j)
      c(i, j) = std::cos(2 * kPi * g.x_center(i)) * std::cos(2 * kPi * g.y_center(j));
  const Hessian h = discrete_hessian(c);
  const double sx = std::sin(2 * kPi * g.dx) / g.dx, sy = std::sin(2 * kPi * g.dy) / g.dy;
  for (int i = 0; i < 12; ++i)
    for (int j = 0; j < 10; ++j) {
      const double expect = std::sin(2 * kPi * g.x_center(i)) *
                            std::sin(2 * kPi * g.y_center(j)) * sx * sy;
      EXPECT_NEAR(h.xy(i, j), expect, 1e-12);
    }
}

// Sum d2x c * d2y c = sum |dx dy c at vertices|^2, for random periodic c.
TEST(Hessian, CrossTermControlledByDiagonal) {
  for (int trial = 0; trial < 20; ++trial) {
    const int nx = 2 + trial % 7, ny = 3 + trial % 5;
    const GridSpec g = make_mesh(nx, ny, 1);
    const SpatialField c = oracle::random_spatial(g);
    const Hessian h = discrete_hessian(c);
    long double lhs = 0, rhs = 0;
    for (int i = 0; i < nx; ++i)
      for (int j = 0; j < ny; ++j) {
        lhs += (long double)h.xx(i, j) * h.yy(i, j);
        const long double v = ((long double)c(i, j) - c.wrapped(i + 1, j) -
                               c.wrapped(i, j + 1) + c.wrapped(i + 1, j + 1)) /
                              ((long double)g.dx * g.dy);
        rhs += v * v;
      }
    EXPECT_NEAR(static_cast<double>(lhs / rhs), 1.0, 1e-12);
  }
}

// sum (a_{i+1} - a_i) b_i + sum (b_{i+1} - b_i) a_{i+1} = 0 along each axis.
TEST(SummationByParts, HoldsInEveryDirection) {
  for (int trial = 0; trial < 30; ++trial) {
    const GridSpec g = make_mesh(1 + trial % 16, 1 + (trial * 7) % 16, 1 + (trial * 3) % 16);
    const DensityField a = oracle::random_density(g, -1, 1);
    const DensityField b = oracle::random_density(g, -1, 1);
    const std::array<DualField, 3> da{ddx(a), ddy(a), ddtheta(a)};
    const std::array<DualField, 3> db{ddx(b), ddy(b), ddtheta(b)};
    for (int dir = 0; dir < 3; ++dir) {
      double s1 = 0, s2 = 0, scale = 0;
      for (int i = 0; i < g.nx; ++i)
        for (int j = 0; j < g.ny; ++j)
          for (int k = 0; k < g.ntheta; ++k) {
            const std::size_t p = g.index(i, j, k);
            const int ip = dir == 0 ? i + 1 : i, jp = dir == 1 ? j + 1 : j,
                      kp = dir == 2 ? k + 1 : k;
            const double a_next = a.wrapped(ip, jp, kp);
            s1 += da[dir].values()[p] * b.values()[p];
            s2 += db[dir].values()[p] * a_next;
            scale += std::abs(da[dir].values()[p] * b.values()[p]) +
                     std::abs(db[dir].values()[p] * a_next);
          }
      EXPECT_LE(std::abs(s1 + s2), 1e-12 * std::max(scale, 1.0)) << trial << " " << dir;
    }
  }
}

// ---------------------------------------------------------------------------
// Norms

TEST(Norms, ConstantField) {
  const GridSpec g = make_mesh(4, 3, 5);
  const DensityField f(g, 0.3);
  EXPECT_NEAR(lp_norm(f, 2.0), 0.3 * std::sqrt(kTwoPi), 1e-15);
  EXPECT_EQ(sobolev_seminorm(f, 2.0), 0.0);
  EXPECT_NEAR(lp_norm(DensityField(g, 1 / kTwoPi), 1.0), 1.0, 1e-15);
  EXPECT_DOUBLE_EQ(sup_norm(f), 0.3);
}

TEST(Norms, MatchExtendedPrecisionSums) {
  const GridSpec g = make_mesh(4, 1, 4);
  for (int trial = 0; trial < 20; ++trial) {
    const DensityField f = oracle::random_density(g, -2, 2);
    for (double p : {1.0, 1.5, 2.0, 3.0, 7.0}) {
      long double s = 0;
      for (double v : f.values()) s += std::pow(std::fabs((long double)v), (long double)p);
      const long double ref = std::pow(s * g.dx * g.dy * g.dtheta, 1.0L / p);
      EXPECT_NEAR(lp_norm(f, p) / static_cast<double>(ref), 1.0, 1e-14) << p;
    }
    long double sx = 0;
    for (int i = 0; i < 4; ++i)
      for (int k = 0; k < 4; ++k) {
        const long double dx = ((long double)f.wrapped(i + 1, 0, k) - f(i, 0, k)) / g.dx;
        const long double dt = ((long double)f.wrapped(i, 0, k + 1) - f(i, 0, k)) / g.dtheta;
        sx += dx * dx + dt * dt;
      }
    const long double semi = std::sqrt(sx * g.dx * g.dy * g.dtheta);
    EXPECT_NEAR(sobolev_seminorm(f, 2.0) / static_cast<double>(semi), 1.0, 1e-14);
  }
}

TEST(Norms, SpatialFieldUsesAreaMeasure) {
  const GridSpec g = make_mesh(4, 4, 9);
  const SpatialField c(g, 2.0);
  EXPECT_DOUBLE_EQ(lp_norm(c, 1.0), 2.0);
  EXPECT_DOUBLE_EQ(lp_norm(c, 2.0), 2.0);
  EXPECT_EQ(sobolev_seminorm(c, 2.0), 0.0);
}

TEST(Norms, RejectExponentBelowOne) {
  const DensityField f(make_mesh(2, 2, 2), 1.0);
  EXPECT_THROW(lp_norm(f, 0.5), InputError);
  EXPECT_THROW(sobolev_seminorm(f, 0.0), InputError);
}

TEST(Norms, InvariantUnderPeriodicShift) {
  const GridSpec g = make_mesh(7, 5, 6);
  const DensityField f = oracle::random_density(g, -1, 1);
  for (int shift : {1, 3, 6}) {
    DensityField s(g);
    for (int i = 0; i < g.nx; ++i)
      for (int j = 0; j < g.ny; ++j)
        for (int k = 0; k < g.ntheta; ++k)
          s(i, j, k) = f.wrapped(i + shift, j + 2 * shift, k - shift);
    for (double p : {1.0, 2.0, 3.5}) {
      EXPECT_EQ(lp_norm(s, p), lp_norm(f, p));
      EXPECT_EQ(sobolev_seminorm(s, p), sobolev_seminorm(f, p));
    }
    EXPECT_EQ(sup_norm(s), sup_norm(f));
  }
}
