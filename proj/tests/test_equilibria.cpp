#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <random>

#include "common.hpp"
#include "foodchain/cubic.hpp"
#include "foodchain/equilibria.hpp"

using namespace foodchain;

namespace {

// Real eigenvalues of the companion matrix (imaginary part below tol).
std::vector<double> companion_real_roots(const CubicCoefficients& c, double tol) {
  Eigen::Matrix3d C = Eigen::Matrix3d::Zero();
  C(0, 0) = -c.c2 / c.c3;
  C(0, 1) = -c.c1 / c.c3;
  C(0, 2) = -c.c0 / c.c3;
  C(1, 0) = 1.0;
  C(2, 1) = 1.0;
  Eigen::EigenSolver<Eigen::Matrix3d> es(C);
  std::vector<double> out;
  for (int i = 0; i < 3; ++i) {
    if (std::abs(es.eigenvalues()(i).imag()) < tol) out.push_back(es.eigenvalues()(i).real());
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<double> expand(const std::vector<RealRoot>& rs) {
  std::vector<double> out;
  for (const RealRoot& r : rs)
    for (int k = 0; k < r.multiplicity; ++k) out.push_back(r.value);
  return out;
}

// Sign changes of a cubic on [lo, hi] over n samples, located by bisection.
std::vector<double> scan_roots(const CubicCoefficients& c, double lo, double hi, int n) {
  std::vector<double> out;
  double x0 = lo, f0 = c(lo);
  for (int i = 1; i <= n; ++i) {
    const double x1 = lo + (hi - lo) * double(i) / n, f1 = c(x1);
    if ((f0 < 0.0) != (f1 < 0.0)) {
      double a = x0, b = x1;
      for (int k = 0; k < 80; ++k) {
        const double mid = 0.5 * (a + b);
        ((c(a) < 0.0) == (c(mid) < 0.0) ? a : b) = mid;
      }
      out.push_back(0.5 * (a + b));
    }
    x0 = x1;
    f0 = f1;
  }
  return out;
}

Jacobian3 finite_difference_jacobian(const StatePoint& s, const Params& p) {
  Jacobian3 J;
  const double x[3] = {s.u, s.v, s.r};
  for (int j = 0; j < 3; ++j) {
    const double h = 1e-6 * std::max(1.0, std::abs(x[j]));
    double xp[3] = {x[0], x[1], x[2]}, xm[3] = {x[0], x[1], x[2]};
    xp[j] += h;
    xm[j] -= h;
    const Rates fp = reaction({xp[0], xp[1], xp[2]}, p), fm = reaction({xm[0], xm[1], xm[2]}, p);
    J(0, j) = (fp.fu - fm.fu) / (2 * h);
    J(1, j) = (fp.fv - fm.fv) / (2 * h);
    J(2, j) = (fp.fr - fm.fr) / (2 * h);
  }
  return J;
}

double max_abs_diff(const Jacobian3& a, const Jacobian3& b, double& scale) {
  double d = 0.0;
  scale = 0.0;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      d = std::max(d, std::abs(a(i, j) - b(i, j)));
      scale = std::max(scale, std::abs(a(i, j)));
    }
  return d;
}

}  // namespace

TEST(Cubic, TripleRootAtZero) {
  const auto r = cubic_real_roots({1, 0, 0, 0});
  ASSERT_EQ(r.size(), 1u);
  EXPECT_EQ(r[0].multiplicity, 3);
  EXPECT_NEAR(r[0].value, 0.0, 1e-12);
}

TEST(Cubic, FactoredRoots) {
  const auto r = expand(cubic_real_roots({1, -6, 11, -6}));
  ASSERT_EQ(r.size(), 3u);
  EXPECT_NEAR(r[0], 1.0, 1e-14);
  EXPECT_NEAR(r[1], 2.0, 1e-14);
  EXPECT_NEAR(r[2], 3.0, 1e-14);
}

TEST(Cubic, DoubleRootReportedWithMultiplicity) {
  // (x - 1)² (x + 2)
  const auto r = cubic_real_roots({1, 0, -3, 2});
  ASSERT_EQ(r.size(), 2u);
  EXPECT_NEAR(r[0].value, -2.0, 1e-12);
  EXPECT_NEAR(r[1].value, 1.0, 1e-7);
  EXPECT_EQ(r[1].multiplicity, 2);
}

TEST(Cubic, ZeroLeadingCoefficientThrows) {
  EXPECT_THROW(cubic_real_roots({0, 1, 2, 3}), DomainError);
}

TEST(Cubic, MatchesCompanionMatrixOnRandomCubics) {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> U(-5.0, 5.0);
  double worst = 0.0;
  int compared = 0;
  for (int i = 0; i < 1000; ++i) {
    CubicCoefficients c{U(rng), U(rng), U(rng), U(rng)};
    if (std::abs(c.c3) < 1e-3) continue;
    const auto ours = expand(cubic_real_roots(c));
    const auto ref = companion_real_roots(c, 1e-6);
    if (ours.size() != ref.size()) continue;  // nearly-double roots: split decided at rounding level
    for (std::size_t k = 0; k < ours.size(); ++k) worst = std::max(worst, std::abs(ours[k] - ref[k]));
    ++compared;
    for (double x : ours) {
      EXPECT_LE(std::abs(c(x)), 1e-13 * c.scale() * std::max(1.0, std::pow(std::abs(x), 3)));
    }
  }
  EXPECT_GT(compared, 990);
  EXPECT_LT(worst, 1e-9);
}

TEST(Cubic, MaxRealPartMatchesEigenvalues) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> U(-3.0, 3.0);
  for (int i = 0; i < 500; ++i) {
    CubicCoefficients c{1.0, U(rng), U(rng), U(rng)};
    Eigen::Matrix3d C = Eigen::Matrix3d::Zero();
    C(0, 0) = -c.c2;
    C(0, 1) = -c.c1;
    C(0, 2) = -c.c0;
    C(1, 0) = C(2, 1) = 1.0;
    const double ref = Eigen::EigenSolver<Eigen::Matrix3d>(C).eigenvalues().real().maxCoeff();
    EXPECT_NEAR(cubic_max_real_part(c), ref, 1e-7);
  }
}

TEST(Boundary, PredatorFreeAlwaysExists) {
  std::mt19937_64 rng(1);
  for (int i = 0; i < 50; ++i) {
    const auto eq = boundary_equilibria(fctest::random_with_e8(rng));
    EXPECT_EQ(eq[1].label, "E1");
    EXPECT_TRUE(eq[1].exists);
    EXPECT_EQ(eq[1].point.u, 1.0);
  }
}

TEST(Boundary, TopPredatorOnlyLevel) {
  const auto eq = boundary_equilibria(fctest::base_set());
  EXPECT_EQ(eq[3].label, "E3");
  EXPECT_NEAR(eq[3].point.r, 0.1 * 0.1 / 0.37, 1e-15);
  EXPECT_NEAR(eq[3].point.r, 0.027027027027027, 1e-14);
}

TEST(Boundary, E4DegeneratesWhenW2EqualsA2) {
  Params p = fctest::base_set();
  p.a2 = p.w2;
  EXPECT_FALSE(boundary_equilibria(p)[4].exists);
}

TEST(Boundary, AlleeStatesAbsentWithoutThreshold) {
  const auto eq = boundary_equilibria(fctest::base_set(0.0));
  EXPECT_FALSE(eq[2].exists);
  EXPECT_FALSE(eq[6].exists);
}

TEST(Boundary, ExistingStatesHaveZeroResidual) {
  std::mt19937_64 rng(9);
  for (int i = 0; i < 200; ++i) {
    const Params p = fctest::random_with_e8(rng);
    for (const Equilibrium& e : all_equilibria(p)) {
      if (!e.exists) continue;
      EXPECT_LT(reaction(e.point, p).max_abs(), 1e-10) << e.label;
      for (const StatePoint& alt : e.alternatives) EXPECT_LT(reaction(alt, p).max_abs(), 1e-10);
    }
  }
}

TEST(E7, RequiresPositiveThreshold) { EXPECT_FALSE(coexistence_with_allee(fctest::base_set(0.0)).exists); }

TEST(E7, RequiresW1BelowOne) {
  Params p = fctest::base_set();
  p.w1 = 1.2;
  const Equilibrium e = coexistence_with_allee(p);
  EXPECT_FALSE(e.exists);
  EXPECT_NE(e.note.find("w1"), std::string::npos);
}

TEST(E7, RootsMatchSignChangeScan) {
  const Params p = fctest::base_set();
  const CubicCoefficients c = allee_coexistence_cubic(p);
  const double lo = std::max(0.0, 1.0 - p.w1);
  const auto scanned = scan_roots(c, lo, 1.0, 1'000'000);
  const Equilibrium e = coexistence_with_allee(p);
  std::vector<double> ours;
  if (e.exists) {
    ours.push_back(e.point.u);
    for (const auto& a : e.alternatives) ours.push_back(a.u);
  }
  std::sort(ours.begin(), ours.end());
  ASSERT_EQ(ours.size(), scanned.size());
  for (std::size_t i = 0; i < ours.size(); ++i) EXPECT_NEAR(ours[i], scanned[i], 1e-9);
  if (e.exists) {
    EXPECT_LT(reaction(e.point, p).max_abs(), 1e-10);
  }
}

TEST(E8, ResidualAndWindow) {
  const Params p = fctest::base_set();
  const Equilibrium e = interior_equilibrium(p);
  ASSERT_TRUE(e.exists);
  EXPECT_GT(e.point.u, 1.0 - p.w1);
  EXPECT_LT(e.point.u, 1.0);
  EXPECT_LT(reaction(e.point, p).max_abs(), 1e-10);
  // Two admissible roots for this set; the one used is the ODE-stable one.
  EXPECT_EQ(e.alternatives.size(), 1u);
  EXPECT_TRUE(ode_stable(jacobian(e.point, p)));
  EXPECT_NEAR(e.point.u, 0.54639, 1e-5);
}

TEST(E8, AbsentWhenW1AtLeastOne) {
  Params p = fctest::base_set();
  p.w1 = 1.0;
  EXPECT_FALSE(interior_equilibrium(p).exists);
  p.w1 = 1.5;
  EXPECT_FALSE(interior_equilibrium(p).exists);
}

TEST(E8, SatisfiesAllThreeNullclines) {
  std::mt19937_64 rng(17);
  for (int i = 0; i < 200; ++i) {
    const Params p = fctest::random_with_e8(rng);
    for (const StatePoint& s : interior_candidates(p)) {
      EXPECT_NEAR(1.0 - s.u - p.w1 * s.v / (s.u + s.v), 0.0, 1e-10);
      EXPECT_NEAR(-p.a2 + p.w2 * s.u / (s.u + s.v) - p.w3 * s.r / (s.v + s.r), 0.0, 1e-10);
      EXPECT_NEAR(p.c - p.w4 * s.r / (s.v + p.D3), 0.0, 1e-12);
    }
  }
}

TEST(Jacobian, MatchesFiniteDifferencesAtE8) {
  const Params p = fctest::base_set();
  const StatePoint s = interior_equilibrium(p).point;
  double scale = 0.0;
  const double d = max_abs_diff(jacobian(s, p), finite_difference_jacobian(s, p), scale);
  EXPECT_LT(d / scale, 1e-5);
}

TEST(Jacobian, MatchesFiniteDifferencesOnRandomSets) {
  std::mt19937_64 rng(99);
  for (int i = 0; i < 50; ++i) {
    const Params p = fctest::random_with_e8(rng);
    for (const StatePoint& s : interior_candidates(p)) {
      double scale = 0.0;
      const double d = max_abs_diff(jacobian(s, p), finite_difference_jacobian(s, p), scale);
      EXPECT_LT(d / scale, 1e-5);
    }
  }
}

TEST(Jacobian, StructuralZerosAndSign) {
  std::mt19937_64 rng(4);
  for (int i = 0; i < 100; ++i) {
    const Params p = fctest::random_with_e8(rng);
    const StatePoint s = interior_equilibrium(p).point;
    const Jacobian3 J = jacobian(s, p);
    EXPECT_EQ(J(0, 2), 0.0);
    EXPECT_EQ(J(2, 0), 0.0);
    if (s.r > p.m) {
      EXPECT_LT(J(2, 2), 0.0);
    }
  }
}

TEST(Jacobian, NegativeStateThrows) {
  EXPECT_THROW(jacobian({0.5, -0.1, 0.2}, fctest::base_set()), DomainError);
}

TEST(Jacobian, BoundaryExtensionIsFinite) {
  const Jacobian3 J = jacobian({0.0, 0.0, 0.0}, fctest::base_set());
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) EXPECT_TRUE(std::isfinite(J(i, j)));
}
