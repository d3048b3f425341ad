#include <gtest/gtest.h>

#include <Eigen/Dense>

#include <cmath>
#include <numbers>
#include <random>

#include "common.hpp"
#include "foodchain/solver1d.hpp"
#include "foodchain/solver2d.hpp"

using namespace foodchain;

namespace {

Grid2D small_grid(int nx, int ny, double dt = 0.1) { return Grid2D{nx, ny, 0.1, 0.1, dt}; }

double l2(const Field2D& a) { return std::sqrt(a.square().mean()); }

}  // namespace

TEST(Laplacian2D, ConstantFieldGivesZero) {
  const Grid2D g = small_grid(17, 23);
  const Field2D f = Field2D::Constant(17, 23, 3.7);
  EXPECT_EQ(laplacian_5pt(f, g).abs().maxCoeff(), 0.0);
}

TEST(Laplacian2D, QuadraticInterior) {
  Grid2D g = small_grid(30, 20);
  g.dx = 0.05;
  Field2D f(30, 20);
  for (int j = 0; j < 20; ++j)
    for (int i = 0; i < 30; ++i) f(i, j) = g.x(i) * g.x(i);
  const Field2D L = laplacian_5pt(f, g);
  for (int j = 0; j < 20; ++j)
    for (int i = 1; i < 29; ++i) EXPECT_NEAR(L(i, j), 2.0, 1e-9);
}

TEST(Laplacian2D, SumsToZeroWithMirrorBoundaries) {
  const Grid2D g = small_grid(40, 25);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  Field2D f(40, 25);
  for (int j = 0; j < 25; ++j)
    for (int i = 0; i < 40; ++i) f(i, j) = U(rng);
  const Field2D L = laplacian_5pt(f, g);
  EXPECT_LT(std::abs(L.sum()), 1e-10 * L.abs().sum());
}

TEST(Laplacian2D, CosineEigenmode) {
  const Grid2D g = small_grid(32, 32);
  const double k = std::numbers::pi / (32 * g.dx);
  Field2D f(32, 32);
  for (int j = 0; j < 32; ++j)
    for (int i = 0; i < 32; ++i) f(i, j) = std::cos(k * g.x(i)) * std::cos(2 * k * g.y(j));
  const double lx = 4.0 / (g.dx * g.dx) * std::pow(std::sin(k * g.dx / 2.0), 2);
  const double ly = 4.0 / (g.dy * g.dy) * std::pow(std::sin(k * g.dy), 2);
  EXPECT_LT((laplacian_5pt(f, g) + (lx + ly) * f).abs().maxCoeff(), 1e-10);
}

TEST(Cfl2D, DefaultMeshValue) {
  const Grid2D g = small_grid(200, 200, 0.1);
  EXPECT_NEAR(cfl_number(g, 1e-3), 0.02, 1e-15);
  EXPECT_NO_THROW(make_grid2d(200, 200, 0.1, 0.1, 0.1, 1e-3));
  EXPECT_NEAR(max_stable_dt(g, 1e-3), 2.5, 1e-12);
}

TEST(Cfl2D, RejectsUnstableStep) {
  try {
    make_grid2d(50, 50, 0.1, 0.1, 3.0, 1e-3);
    FAIL() << "expected a configuration error";
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("2.5"), std::string::npos) << e.what();
  }
  EXPECT_THROW(make_grid2d(1, 50, 0.1, 0.1, 0.1, 1e-3), ConfigError);
  EXPECT_THROW(make_grid2d(50, 50, 0.0, 0.1, 0.1, 1e-3), ConfigError);
  Params p = fctest::base_set();
  p.d1 = 1.0;
  const Grid2D g = small_grid(10, 10, 0.1);
  EXPECT_THROW(step2d(homogeneous_state({0.5, 0.5, 0.5}, g), p, g), ConfigError);
}

TEST(Step2D, EquilibriumIsFixedPoint) {
  const Params p = fctest::base_set();
  const Grid2D g = small_grid(20, 20);
  for (const Equilibrium& e : all_equilibria(p)) {
    if (!e.exists) continue;
    const FieldState2D s = homogeneous_state(e.point, g);
    const FieldState2D n = step2d(s, p, g);
    const double res = reaction(e.point, p).max_abs();
    EXPECT_LE((n.u - s.u).abs().maxCoeff(), g.dt * res + 1e-15);
    EXPECT_LE((n.v - s.v).abs().maxCoeff(), g.dt * res + 1e-15);
    EXPECT_LE((n.r - s.r).abs().maxCoeff(), g.dt * res + 1e-15);
    EXPECT_LT(res, 1e-12);
  }
}

TEST(Step2D, HomogeneousStaysHomogeneous) {
  const Params p = fctest::base_set();
  Run2DConfig cfg;
  cfg.grid = small_grid(12, 9);
  cfg.t_end = 50.0;
  cfg.snapshot_every = 50.0;
  const Run2DResult r = run2d(p, homogeneous_state({0.3, 0.2, 0.4}, cfg.grid), cfg);
  const FieldState2D& s = r.final_state();
  EXPECT_EQ(s.u.maxCoeff() - s.u.minCoeff(), 0.0);
  EXPECT_EQ(s.v.maxCoeff() - s.v.minCoeff(), 0.0);
  EXPECT_EQ(s.r.maxCoeff() - s.r.minCoeff(), 0.0);
}

TEST(Run2D, PureDiffusionCosineDecay) {
  // The kinetics are nonlinear, so the diffusion update is stepped alone.
  const double d = 0.01;
  const Grid2D g = small_grid(50, 50, 0.1);
  const double k = std::numbers::pi / (50 * g.dx);
  Field2D f(50, 50);
  for (int j = 0; j < 50; ++j)
    for (int i = 0; i < 50; ++i) f(i, j) = std::cos(k * g.x(i));
  Field2D cur = f, lap;
  const int steps = 1000;
  for (int s = 0; s < steps; ++s) {
    laplacian_5pt(cur, g, lap);
    cur += g.dt * d * lap;
  }
  const double observed = (cur * f).sum() / (f * f).sum();
  const double exact = std::exp(-d * k * k * steps * g.dt);
  EXPECT_LT(std::abs(observed / exact - 1.0), 0.01);
}

TEST(Run2D, PureDiffusionConservesMean) {
  const Grid2D g = small_grid(30, 40);
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  Field2D f(30, 40), lap;
  for (int j = 0; j < 40; ++j)
    for (int i = 0; i < 30; ++i) f(i, j) = U(rng);
  const double m0 = f.mean();
  for (int s = 0; s < 100; ++s) {
    const double before = f.mean();
    laplacian_5pt(f, g, lap);
    f += g.dt * 0.01 * lap;
    EXPECT_NEAR(f.mean(), before, 1e-12);
  }
  EXPECT_NEAR(f.mean(), m0, 1e-11);
}

TEST(Run2D, ZeroDiffusivityMatchesPointwiseOde) {
  Params p = fctest::base_set();
  p.d1 = p.d2 = p.d3 = 0.0;
  Run2DConfig cfg;
  cfg.grid = small_grid(10, 10, 1e-5);
  cfg.t_end = 1.0;
  cfg.snapshot_every = 1.0;
  cfg.amplitude = 0.3;
  cfg.seed = 11;
  const FieldState2D init = initial_state2d({0.3, 0.3, 0.3}, cfg);
  const FieldState2D fin = run2d(p, init, cfg).final_state();
  Dopri5Options opt;
  opt.rtol = 1e-12;
  opt.atol = 1e-14;
  double worst = 0.0;
  for (int j = 0; j < 10; ++j) {
    for (int i = 0; i < 10; ++i) {
      Eigen::Vector3d y(init.u(i, j), init.v(i, j), init.r(i, j));
      dopri5(
          [&p](double, const Eigen::Vector3d& z, Eigen::Vector3d& dz) {
            const Rates q = reaction_unchecked(z(0), z(1), z(2), p);
            dz << q.fu, q.fv, q.fr;
          },
          y, 0.0, 1.0, opt);
      worst = std::max({worst, std::abs(fin.u(i, j) - y(0)), std::abs(fin.v(i, j) - y(1)),
                        std::abs(fin.r(i, j) - y(2))});
    }
  }
  EXPECT_LT(worst, 1e-6);
}

// Equal diffusivities rule out Turing growth, which would amplify the
// time-step difference and hide the order.
TEST(Run2D, HalvingDtIsFirstOrderConsistent) {
  Params p = fctest::base_set();
  p.d2 = p.d3 = p.d1;
  const StatePoint e = interior_equilibrium(p).point;
  Run2DConfig cfg;
  cfg.grid = small_grid(30, 30, 0.1);
  cfg.t_end = 100.0;
  cfg.snapshot_every = 100.0;
  const FieldState2D init = initial_state2d(e, cfg);
  const FieldState2D a = run2d(p, init, cfg).final_state();
  cfg.grid.dt = 0.05;
  const FieldState2D b = run2d(p, init, cfg).final_state();
  cfg.grid.dt = 0.025;
  const FieldState2D c = run2d(p, init, cfg).final_state();
  const double ab = l2(a.u - b.u) + l2(a.v - b.v) + l2(a.r - b.r);
  const double bc = l2(b.u - c.u) + l2(b.v - c.v) + l2(b.r - c.r);
  EXPECT_LT(ab, 1e-3);
  EXPECT_GT(ab / bc, 1.6);
  EXPECT_LT(ab / bc, 2.4);
}

TEST(Run2D, RandomInitIsSeededAndOneSided) {
  Run2DConfig cfg;
  cfg.grid = small_grid(20, 20);
  cfg.seed = 42;
  const StatePoint e{0.5, 0.4, 0.1};
  const FieldState2D a = initial_state2d(e, cfg);
  const FieldState2D b = initial_state2d(e, cfg);
  EXPECT_TRUE((a.u == b.u).all());
  EXPECT_GE(a.u.minCoeff(), 0.5);
  EXPECT_LT(a.u.maxCoeff(), 0.55);
  cfg.seed = 43;
  EXPECT_FALSE((initial_state2d(e, cfg).u == a.u).all());
}

TEST(Run2D, CosineInit) {
  Run2DConfig cfg;
  cfg.grid = small_grid(20, 20);
  cfg.init = Init2D::Cosine;
  cfg.n = 2;
  const FieldState2D s = initial_state2d({0.0, 0.0, 0.0}, cfg);
  const double cx = std::cos(2 * cfg.grid.x(3)), cy = std::cos(2 * cfg.grid.y(7));
  EXPECT_NEAR(s.r(3, 7), 0.05 * cx * cx * cy * cy, 1e-15);
}

TEST(Run2D, PatternRunStaysNonnegative) {
  const Params p = fctest::base_set();
  Run2DConfig cfg;
  cfg.grid = small_grid(40, 40);
  cfg.t_end = 200.0;
  const Run2DResult r = run2d(p, interior_equilibrium(p).point, cfg);
  EXPECT_FALSE(r.negativity_flag);
  EXPECT_GE(r.min_value, -1e-12);
  EXPECT_EQ(r.snapshots.size(), 3u);
  EXPECT_NEAR(r.final_state().t, 200.0, 1e-9);
}

TEST(Run2D, RejectsBadConfig) {
  const Params p = fctest::base_set();
  Run2DConfig cfg;
  cfg.grid = small_grid(10, 10);
  cfg.t_end = -1.0;
  EXPECT_THROW(run2d(p, StatePoint{0.5, 0.5, 0.5}, cfg), ConfigError);
  cfg.t_end = 1.0;
  cfg.amplitude = -0.1;
  EXPECT_THROW(run2d(p, StatePoint{0.5, 0.5, 0.5}, cfg), ConfigError);
  cfg.amplitude = 0.05;
  Params q = p;
  q.d1 = -1.0;
  EXPECT_THROW(run2d(q, StatePoint{0.5, 0.5, 0.5}, cfg), DomainError);
}
