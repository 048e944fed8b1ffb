#include <gtest/gtest.h>

#include <random>
#include <stdexcept>

#include <coexist/nonlinearity.hpp>

namespace coexist {
namespace {

std::vector<NonlinearityModel> sample_models() {
  const std::vector<double> poly{0.5, -1.25, 2.0, 0.0, -0.75, 0.1};
  std::vector<NonlinearityModel> models{
      NonlinearityModel::free(), NonlinearityModel::linear(-2.0),
      NonlinearityModel::linear(3.0), NonlinearityModel::polynomial(poly)};
  for (int k = 2; k <= 7; ++k)
    models.push_back(NonlinearityModel::psi_k(k, k % 2 ? 1.5 : -0.7));
  return models;
}

TEST(DerivativeAtZero, PsiKLadder) {
  const auto psi3 = NonlinearityModel::psi_k(3, 1.0);
  EXPECT_EQ(psi3.derivative_at_zero(1), 0.0);
  EXPECT_EQ(psi3.derivative_at_zero(2), -2.0);
  EXPECT_EQ(psi3.derivative_at_zero(3), 0.0);

  const auto psi4 = NonlinearityModel::psi_k(4, 1.0);
  EXPECT_EQ(psi4.derivative_at_zero(1), 0.0);
  EXPECT_EQ(psi4.derivative_at_zero(2), 0.0);
  EXPECT_EQ(psi4.derivative_at_zero(3), -6.0);

  for (int k = 5; k <= 7; ++k)
    for (int order = 1; order <= 3; ++order)
      EXPECT_EQ(NonlinearityModel::psi_k(k, 2.5).derivative_at_zero(order), 0.0);
}

TEST(DerivativeAtZero, LinearFreeAndPolynomial) {
  const auto lin = NonlinearityModel::linear(3.0);
  EXPECT_EQ(lin.derivative_at_zero(1), 3.0);
  EXPECT_EQ(lin.derivative_at_zero(2), 0.0);
  EXPECT_EQ(lin.derivative_at_zero(3), 0.0);
  EXPECT_EQ(lin.v_l(), 3.0);

  const auto free = NonlinearityModel::free();
  for (int order = 1; order <= 3; ++order)
    EXPECT_EQ(free.derivative_at_zero(order), 0.0);

  const std::vector<double> c{1.5, -2.0, 0.25};
  const auto poly = NonlinearityModel::polynomial(c);
  EXPECT_EQ(poly.derivative_at_zero(1), 1.5);
  EXPECT_EQ(poly.derivative_at_zero(2), -4.0);
  EXPECT_EQ(poly.derivative_at_zero(3), 1.5);
}

TEST(DerivativeAtZero, PsiTwoIsLinearWithNegatedEta) {
  const auto psi2 = NonlinearityModel::psi_k(2, 0.8);
  EXPECT_EQ(psi2.v_l(), -0.8);
  EXPECT_EQ(psi2.derivative_at_zero(1), -0.8);
  EXPECT_EQ(psi2.value(2.0), -1.6);
}

TEST(DerivativeAtZero, RejectsUnsupportedOrders) {
  const auto m = NonlinearityModel::psi_k(4, 1.0);
  EXPECT_THROW(m.derivative_at_zero(0), std::invalid_argument);
  EXPECT_THROW(m.derivative_at_zero(4), std::invalid_argument);
  EXPECT_THROW(NonlinearityModel::psi_k(1, 1.0), std::invalid_argument);
  EXPECT_NO_THROW(NonlinearityModel::psi_k(9, 1.0));
  const std::vector<double> too_long(7, 1.0);
  EXPECT_THROW(NonlinearityModel::polynomial(too_long), std::invalid_argument);
}

TEST(Apply, PointwiseExamples) {
  const Vector zero(5, 0.0);
  for (const auto& m : sample_models())
    for (double v : m.apply(zero))
      EXPECT_EQ(v, 0.0);

  EXPECT_EQ(NonlinearityModel::psi_k(4, 2.0).apply(Vector{0.5})[0], -0.25);
  EXPECT_EQ(NonlinearityModel::linear(3.0).apply(Vector{2.0})[0], 6.0);
}

TEST(ApplyDerivative, PointwiseExamples) {
  for (double v : NonlinearityModel::psi_k(4, 1.0).apply_derivative(Vector(4, 0.0)))
    EXPECT_EQ(v, 0.0);
  EXPECT_EQ(NonlinearityModel::psi_k(3, 1.0).apply_derivative(Vector{2.0})[0], -4.0);
  for (const auto& m : sample_models())
    EXPECT_EQ(m.apply_derivative(Vector{0.0})[0], m.derivative_at_zero(1));
}

TEST(ApplyDerivative, MatchesCentralDifferences) {
  std::mt19937 rng(2024);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  const double eps = 1e-5;
  for (const auto& m : sample_models()) {
    Vector U(200);
    for (double& u : U)
      u = dist(rng);
    Vector plus = U, minus = U;
    for (std::size_t i = 0; i < U.size(); ++i) {
      plus[i] += eps;
      minus[i] -= eps;
    }
    const Vector gp = m.apply(plus), gm = m.apply(minus), dg = m.apply_derivative(U);
    for (std::size_t i = 0; i < U.size(); ++i)
      EXPECT_NEAR((gp[i] - gm[i]) / (2 * eps), dg[i], 1e-6);
  }
}

TEST(Apply, EvenKGivesOddInteraction) {
  std::mt19937 rng(99);
  std::uniform_real_distribution<double> dist(-2.0, 2.0);
  for (int k : {2, 4, 6}) {
    const auto m = NonlinearityModel::psi_k(k, 1.3);
    for (int t = 0; t < 100; ++t) {
      const double u = dist(rng);
      EXPECT_EQ(m.value(-u), -m.value(u));
    }
  }
}

} // namespace
} // namespace coexist
