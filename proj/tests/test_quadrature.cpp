#include <cmath>

#include <gtest/gtest.h>

#include "polydd/errors.hpp"
#include "polydd/quadrature.hpp"

namespace {

using namespace polydd;

double ref_power_integral(int d) {  // ∫_{-1}^{1} x^d dx
  return d % 2 ? 0.0 : 2.0 / (d + 1);
}

TEST(GaussLegendre, ExactUpToTwoMMinusOne) {
  for (int m = 1; m <= 10; ++m) {
    const Rule1D r = gauss_legendre(m);
    ASSERT_EQ(static_cast<int>(r.nodes.size()), m);
    for (int d = 0; d <= 2 * m - 1; ++d) {
      double s = 0;
      for (size_t q = 0; q < r.nodes.size(); ++q)
        s += r.weights[q] * std::pow(r.nodes[q], d);
      EXPECT_NEAR(s, ref_power_integral(d), 1e-13) << "m=" << m << " d=" << d;
    }
  }
}

TEST(GaussLegendre, WeightsPositiveNodesInside) {
  for (int m = 1; m <= 10; ++m) {
    const Rule1D r = gauss_legendre(m);
    for (size_t q = 0; q < r.nodes.size(); ++q) {
      EXPECT_GT(r.weights[q], 0.0);
      EXPECT_LT(std::abs(r.nodes[q]), 1.0);
    }
  }
}

TEST(GaussLobatto, EndpointsAndExactness) {
  for (int m = 2; m <= 9; ++m) {
    const Rule1D r = gauss_lobatto(m);
    ASSERT_EQ(static_cast<int>(r.nodes.size()), m);
    EXPECT_DOUBLE_EQ(r.nodes.front(), -1.0);
    EXPECT_DOUBLE_EQ(r.nodes.back(), 1.0);
    const double wend = 2.0 / (m * (m - 1.0));
    EXPECT_NEAR(r.weights.front(), wend, 1e-14);
    EXPECT_NEAR(r.weights.back(), wend, 1e-14);
    for (int d = 0; d <= 2 * m - 3; ++d) {
      double s = 0;
      for (size_t q = 0; q < r.nodes.size(); ++q)
        s += r.weights[q] * std::pow(r.nodes[q], d);
      EXPECT_NEAR(s, ref_power_integral(d), 1e-13) << "m=" << m << " d=" << d;
    }
  }
}

TEST(GaussLobatto, RejectsTooFewNodes) {
  EXPECT_THROW(gauss_lobatto(1), parameter_error);
}

TEST(TriangleRule, FactorialMoments) {
  // ∫_T x^a y^b over the unit triangle = a! b! / (a+b+2)!
  auto fact = [](int n) {
    double f = 1;
    for (int i = 2; i <= n; ++i) f *= i;
    return f;
  };
  for (int deg = 1; deg <= 10; ++deg) {
    const TriangleRule r = triangle_rule(deg);
    double wsum = 0;
    for (double w : r.w) wsum += w;
    EXPECT_NEAR(wsum, 0.5, 1e-14);
    for (int a = 0; a <= deg; ++a)
      for (int b = 0; a + b <= deg; ++b) {
        double s = 0;
        for (size_t q = 0; q < r.w.size(); ++q)
          s += r.w[q] * std::pow(r.x[q], a) * std::pow(r.y[q], b);
        const double exact = fact(a) * fact(b) / fact(a + b + 2);
        EXPECT_NEAR(s, exact, 1e-14 * std::max(1.0, std::abs(exact)))
            << "deg=" << deg << " a=" << a << " b=" << b;
      }
  }
}

}  // namespace
