#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include <coexist/continuation.hpp>
#include <coexist/error.hpp>

namespace coexist {
namespace {

constexpr double pi = std::numbers::pi;

const std::vector<double> default_s{-0.10, -0.08, -0.06, -0.04, -0.02,
                                    0.02,  0.04,  0.06,  0.08,  0.10};

class IntervalBranch : public ::testing::Test {
protected:
  static void SetUpTestSuite() {
    mesh_ = new Mesh(build_mesh(make_interval(0.0, pi, 400)));
    spectrum_ = new SpectralData(analyze_spectrum(*mesh_));
  }
  static void TearDownTestSuite() {
    delete spectrum_;
    delete mesh_;
  }
  static const Mesh& mesh() { return *mesh_; }
  static const SpectralData& sp() { return *spectrum_; }
  static const Vector& u0() { return spectrum_->principal.vector; }
  static double lambda0() { return spectrum_->principal.lambda; }

  static BranchSeed seed(const NonlinearityModel& m, BifurcationDiagnostics& keep) {
    keep = diagnose(sp(), m, mesh());
    return seed_from(sp(), keep);
  }

  static Mesh* mesh_;
  static SpectralData* spectrum_;
};
Mesh* IntervalBranch::mesh_ = nullptr;
SpectralData* IntervalBranch::spectrum_ = nullptr;

TEST_F(IntervalBranch, TrivialSolutionHasZeroResidual) {
  const Vector zero(mesh().size(), 0.0);
  for (const auto& m : {NonlinearityModel::psi_k(3, 1.0), NonlinearityModel::linear(2.0),
                        NonlinearityModel::psi_k(5, -1.0)})
    for (double lambda = lambda0() - 1.0; lambda <= lambda0() + 1.0; lambda += 0.125)
      for (double v : residual(zero, lambda, m, sp().laplacian, mesh()))
        EXPECT_EQ(v, 0.0);
}

TEST_F(IntervalBranch, KernelDirectionSolvesLinearModel) {
  Vector U = u0();
  blas::scale(0.3, U);
  const Vector F = residual(U, lambda0(), NonlinearityModel::linear(1.7), sp().laplacian, mesh());
  EXPECT_LE(l2_norm(mesh(), F), 0.3 * sp().principal.residual + 1e-14);
}

TEST_F(IntervalBranch, Psi4ResidualAtSmallAmplitude) {
  Vector U = u0();
  blas::scale(0.1, U);
  const Vector F = residual(U, lambda0(), NonlinearityModel::psi_k(4, 1.0), sp().laplacian, mesh());
  Vector expected(U.size());
  for (std::size_t i = 0; i < U.size(); ++i)
    expected[i] = 1e-3 * std::pow(u0()[i], 3);
  Vector diff = F;
  blas::axpy(-1.0, expected, diff);
  EXPECT_LE(l2_norm(mesh(), diff), 0.1 * sp().principal.residual + 1e-14);
  EXPECT_NEAR(l2_norm(mesh(), F), l2_norm(mesh(), expected), 1e-9);
}

TEST_F(IntervalBranch, JacobianAtTrivialStateAnnihilatesKernel) {
  const Vector zero(mesh().size(), 0.0);
  const Vector Ju = jacobian_apply(zero, lambda0(), NonlinearityModel::psi_k(4, 1.0),
                                   sp().laplacian, mesh(), u0());
  EXPECT_LE(l2_norm(mesh(), Ju), 1e-8);
}

TEST_F(IntervalBranch, FreeJacobianIsShiftedLaplacian) {
  std::mt19937 rng(3);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  Vector U(mesh().size()), d(mesh().size());
  for (std::size_t i = 0; i < U.size(); ++i) {
    U[i] = dist(rng);
    d[i] = dist(rng);
  }
  const Vector J = jacobian_apply(U, 1.3, NonlinearityModel::free(), sp().laplacian, mesh(), d);
  const Vector ref = sp().laplacian.shifted(1.3) * d;
  for (std::size_t i = 0; i < U.size(); ++i)
    EXPECT_EQ(J[i], ref[i]);
}

TEST_F(IntervalBranch, JacobianMatchesCentralDifferences) {
  // The Laplacian part is linear and cancels exactly in the difference, so
  // the check is run on a coarse mesh where rounding in L U stays small.
  const Mesh coarse = build_mesh(make_interval(0.0, pi, 40));
  const SparseOperator L = assemble_laplacian(coarse);
  std::mt19937 rng(11);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  const std::vector<double> poly{0.4, -0.9, 1.2, 0.0, 0.3};
  const NonlinearityModel models[] = {NonlinearityModel::psi_k(3, 1.0),
                                      NonlinearityModel::psi_k(4, -2.0),
                                      NonlinearityModel::polynomial(poly)};
  const double eps = 1e-6;
  for (int trial = 0; trial < 100; ++trial) {
    const auto& m = models[trial % 3];
    Vector U(coarse.size()), d(coarse.size());
    for (std::size_t i = 0; i < U.size(); ++i) {
      U[i] = dist(rng);
      d[i] = dist(rng);
    }
    const double lambda = 1.0 + dist(rng);
    Vector up = U, um = U;
    blas::axpy(eps, d, up);
    blas::axpy(-eps, d, um);
    const Vector Fp = residual(up, lambda, m, L, coarse);
    const Vector Fm = residual(um, lambda, m, L, coarse);
    const Vector J = jacobian_apply(U, lambda, m, L, coarse, d);
    for (std::size_t i = 0; i < U.size(); ++i)
      EXPECT_NEAR((Fp[i] - Fm[i]) / (2 * eps), J[i], 1e-6);
  }
}

TEST_F(IntervalBranch, Psi4AmplitudeSolveFollowsLocalExpansion) {
  BifurcationDiagnostics d;
  const auto m = NonlinearityModel::psi_k(4, 1.0);
  const BranchSeed s = seed(m, d);
  const BranchPoint plus = solve_at_amplitude(0.1, m, s, mesh());
  EXPECT_NEAR(plus.lambda, 1.0 + 0.5 * (3.0 / pi) * 0.01, 5e-4);
  EXPECT_NEAR(plus.lambda, 1.004775, 5e-4);
  EXPECT_LE(plus.residual, 1e-10);
  EXPECT_NEAR(inner_product(mesh(), plus.U, u0()), 0.1, 1e-10);

  const BranchPoint minus = solve_at_amplitude(-0.1, m, s, mesh());
  EXPECT_NEAR(minus.lambda, plus.lambda, 1e-8);
  for (std::size_t i = 0; i < plus.U.size(); ++i)
    EXPECT_NEAR(minus.U[i], -plus.U[i], 1e-8);
}

TEST_F(IntervalBranch, LinearModelStaysOnEigenLine) {
  BifurcationDiagnostics d;
  const auto m = NonlinearityModel::linear(2.0);
  const BranchSeed s = seed(m, d);
  for (double amp = -0.5; amp <= 0.5; amp += 0.125) {
    if (amp == 0.0)
      continue;
    const BranchPoint p = solve_at_amplitude(amp, m, s, mesh());
    EXPECT_NEAR(p.lambda, lambda0(), 1e-8);
    EXPECT_NEAR(inner_product(mesh(), p.U, u0()), amp, 1e-10);
  }
}

TEST_F(IntervalBranch, AmplitudeSolveErrors) {
  BifurcationDiagnostics d;
  const auto m = NonlinearityModel::psi_k(4, 1.0);
  const BranchSeed s = seed(m, d);
  EXPECT_THROW(solve_at_amplitude(0.0, m, s, mesh()), std::invalid_argument);
  try {
    solve_at_amplitude(0.1, m, s, mesh(), {.tol = 1e-10, .max_iters = 0});
    FAIL() << "expected ConvergenceError";
  } catch (const ConvergenceError& e) {
    EXPECT_GT(e.residual(), 1e-10);
    EXPECT_EQ(e.iterations(), 0);
  }
}

TEST_F(IntervalBranch, Psi4BranchIsSupercriticalForPositiveEta) {
  BifurcationDiagnostics d;
  const auto m = NonlinearityModel::psi_k(4, 1.0);
  const Branch b = trace_branch(m, mesh(), seed(m, d), default_s);
  ASSERT_EQ(b.points.size(), 10u);
  EXPECT_TRUE(b.truncations.empty());
  for (std::size_t i = 0; i < b.points.size(); ++i) {
    EXPECT_GT(b.points[i].lambda, lambda0());
    EXPECT_NE(b.points[i].s, 0.0);
    if (i > 0) {
      EXPECT_LT(b.points[i - 1].s, b.points[i].s);
    }
    EXPECT_NEAR(inner_product(mesh(), b.points[i].U, u0()), b.points[i].s, 1e-10);
  }
  ASSERT_TRUE(b.fit.has_value());
  EXPECT_NEAR(b.fit->a, 0.0, 1e-3);
  EXPECT_NEAR(b.fit->b, 0.5 * 3.0 / pi, 0.02 * 0.5 * 3.0 / pi);
}

TEST_F(IntervalBranch, Psi4BranchIsSubcriticalForNegativeEta) {
  BifurcationDiagnostics d;
  const auto m = NonlinearityModel::psi_k(4, -1.0);
  const Branch b = trace_branch(m, mesh(), seed(m, d), default_s);
  ASSERT_EQ(b.points.size(), 10u);
  for (const auto& p : b.points)
    EXPECT_LT(p.lambda, lambda0());
}

TEST_F(IntervalBranch, Psi3BranchIsTranscritical) {
  BifurcationDiagnostics d;
  const auto m = NonlinearityModel::psi_k(3, 1.0);
  const Branch b = trace_branch(m, mesh(), seed(m, d), default_s);
  ASSERT_EQ(b.points.size(), 10u);
  for (const auto& p : b.points)
    EXPECT_EQ(p.lambda > lambda0(), p.s > 0.0);
  ASSERT_TRUE(b.fit.has_value());
  EXPECT_NEAR(b.fit->a, 0.677265, 0.01 * 0.677265);
  EXPECT_TRUE(check_consistency(*b.fit, d.mu_s, d.mu_ss).ok());
}

TEST_F(IntervalBranch, LinearBranchFitVanishes) {
  BifurcationDiagnostics d;
  const auto m = NonlinearityModel::linear(-0.5);
  const Branch b = trace_branch(m, mesh(), seed(m, d), default_s);
  ASSERT_TRUE(b.fit.has_value());
  EXPECT_NEAR(b.fit->a, 0.0, 1e-6);
  EXPECT_NEAR(b.fit->b, 0.0, 1e-6);
}

TEST_F(IntervalBranch, FailedNewtonTruncatesBranch) {
  BifurcationDiagnostics d;
  const auto m = NonlinearityModel::psi_k(4, 1.0);
  const Branch b = trace_branch(m, mesh(), seed(m, d), default_s,
                                {.tol = 1e-10, .max_iters = 0});
  EXPECT_TRUE(b.points.empty());
  EXPECT_EQ(b.truncations.size(), 2u);
  EXPECT_FALSE(b.fit.has_value());

  const std::vector<double> with_zero{-0.1, 0.0, 0.1};
  EXPECT_THROW(trace_branch(m, mesh(), seed(m, d), with_zero), std::invalid_argument);
}

TEST(FitLocalExpansion, RecoversExactQuadratic) {
  std::vector<BranchPoint> pts;
  for (double s : default_s)
    pts.push_back({s, 2.0 + 0.3 * s - 1.7 * s * s, {}, 0.0, 0});
  const BranchFit fit = fit_local_expansion(pts, 2.0);
  EXPECT_NEAR(fit.a, 0.3, 1e-12);
  EXPECT_NEAR(fit.b, -1.7, 1e-10);
  EXPECT_LT(fit.rms, 1e-14);
}

TEST(FitLocalExpansion, NeedsFivePointsOnBothSides) {
  std::vector<BranchPoint> pts;
  for (double s : {0.02, 0.04, 0.06, 0.08, 0.1, 0.12})
    pts.push_back({s, 1.0 + s, {}, 0.0, 0});
  EXPECT_THROW(fit_local_expansion(pts, 1.0), std::invalid_argument);
  pts.resize(3);
  pts.push_back({-0.02, 1.0, {}, 0.0, 0});
  EXPECT_THROW(fit_local_expansion(pts, 1.0), std::invalid_argument);
}

TEST(ConsistencyCheck, Bounds) {
  const ConsistencyCheck c = check_consistency({0.6775, 0.48, 0.0}, 0.677265, 0.954930);
  EXPECT_DOUBLE_EQ(c.a_bound, 0.01 * 0.677265);
  EXPECT_DOUBLE_EQ(c.b_bound, 0.02 * 0.954930);
  EXPECT_TRUE(c.ok());
  EXPECT_FALSE(check_consistency({0.0, 0.1, 0.0}, 0.0, 0.954930).ok());
  EXPECT_DOUBLE_EQ(check_consistency({0.0, 0.0, 0.0}, 0.0, 0.0).b_bound, 5e-3);
}

} // namespace
} // namespace coexist
