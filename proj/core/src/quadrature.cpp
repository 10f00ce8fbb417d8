#include "polydd/quadrature.hpp"

#include <cmath>
#include <cstddef>

#include "polydd/errors.hpp"

namespace polydd {

namespace {

// Legendre P_m and P'_m at x by the three-term recurrence.
void legendre(int m, double x, double& p, double& dp) {
  double p0 = 1.0, p1 = x;
  if (m == 0) { p = p0; dp = 0.0; return; }
  for (int n = 1; n < m; ++n) {
    double p2 = ((2 * n + 1) * x * p1 - n * p0) / (n + 1);
    p0 = p1;
    p1 = p2;
  }
  p = p1;
  dp = m * (x * p1 - p0) / (x * x - 1.0);
}

}  // namespace

Rule1D gauss_legendre(int m) {
  if (m < 1) throw parameter_error("gauss_legendre: need at least one node");
  Rule1D rule;
  rule.nodes.resize(m);
  rule.weights.resize(m);
  for (int i = 0; i < (m + 1) / 2; ++i) {
    // Chebyshev initial guess, Newton on P_m
    double x = -std::cos(M_PI * (i + 0.75) / (m + 0.5));
    double p, dp;
    for (int it = 0; it < 100; ++it) {
      legendre(m, x, p, dp);
      double dx = p / dp;
      x -= dx;
      if (std::abs(dx) < 1e-15) break;
    }
    legendre(m, x, p, dp);
    double w = 2.0 / ((1.0 - x * x) * dp * dp);
    rule.nodes[i] = x;
    rule.weights[i] = w;
    rule.nodes[m - 1 - i] = -x;
    rule.weights[m - 1 - i] = w;
  }
  if (m % 2 == 1) rule.nodes[m / 2] = 0.0;
  return rule;
}

Rule1D gauss_lobatto(int m) {
  if (m < 2) throw parameter_error("gauss_lobatto: need at least two nodes");
  Rule1D rule;
  rule.nodes.resize(m);
  rule.weights.resize(m);
  rule.nodes[0] = -1.0;
  rule.nodes[m - 1] = 1.0;
  double pe, dpe;
  legendre(m - 1, 1.0, pe, dpe);
  (void)dpe;
  double wend = 2.0 / (m * (m - 1));
  rule.weights[0] = rule.weights[m - 1] = wend;
  // interior nodes are the roots of P'_{m-1}
  for (int i = 1; i < m - 1; ++i) {
    double x = -std::cos(M_PI * i / (m - 1));  // close for Lobatto interiors
    for (int it = 0; it < 100; ++it) {
      double p, dp;
      legendre(m - 1, x, p, dp);
      // f = P'_{m-1};  f' from the Legendre ODE: (1-x^2) P'' = 2x P' - n(n+1) P
      double f = dp;
      double df = (2.0 * x * dp - (m - 1) * m * p) / (1.0 - x * x);
      double dx = f / df;
      x -= dx;
      if (std::abs(dx) < 1e-15) break;
    }
    double p, dp;
    legendre(m - 1, x, p, dp);
    rule.nodes[i] = x;
    rule.weights[i] = 2.0 / (m * (m - 1) * p * p);
  }
  if (m % 2 == 1) rule.nodes[m / 2] = 0.0;
  return rule;
}

TriangleRule triangle_rule(int degree) {
  if (degree < 0) throw parameter_error("triangle_rule: negative degree");
  // Duffy map (u,v) -> (u(1-v), uv) sends the unit square to the triangle
  // with Jacobian u; the pullback of a degree-d polynomial has degree <= d+1
  // in u and <= d in v.
  int mu = (degree + 3) / 2 + 1;
  int mv = degree / 2 + 1;
  Rule1D ru = gauss_legendre(mu);
  Rule1D rv = gauss_legendre(mv);
  TriangleRule out;
  out.x.reserve(static_cast<size_t>(mu) * mv);
  out.y.reserve(static_cast<size_t>(mu) * mv);
  out.w.reserve(static_cast<size_t>(mu) * mv);
  for (int i = 0; i < mu; ++i) {
    double u = 0.5 * (ru.nodes[i] + 1.0);
    double wu = 0.5 * ru.weights[i];
    for (int j = 0; j < mv; ++j) {
      double v = 0.5 * (rv.nodes[j] + 1.0);
      double wv = 0.5 * rv.weights[j];
      out.x.push_back(u * (1.0 - v));
      out.y.push_back(u * v);
      out.w.push_back(wu * wv * u);
    }
  }
  return out;
}

}  // namespace polydd
