#pragma once

#include <vector>

namespace polydd {

/// One-dimensional rule on [-1, 1], nodes ascending.
struct Rule1D {
  std::vector<double> nodes;
  std::vector<double> weights;
};

/// m-point Gauss-Legendre rule, exact for degree 2m-1.
Rule1D gauss_legendre(int m);

/// m-point Gauss-Lobatto rule (endpoints included), m >= 2,
/// exact for degree 2m-3. Nodes resolved to ~1e-15 by Newton iteration.
Rule1D gauss_lobatto(int m);

/// Rule on the reference triangle (0,0),(1,0),(0,1), exact for total
/// degree `degree` (Duffy-collapsed tensor Gauss rule). Weights sum to 1/2.
struct TriangleRule {
  std::vector<double> x;
  std::vector<double> y;
  std::vector<double> w;
};
TriangleRule triangle_rule(int degree);

}  // namespace polydd
