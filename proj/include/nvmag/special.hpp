#pragma once

#include <span>
#include <vector>

namespace nvmag {

// Bessel function of the first kind, order one. Miller backward recurrence
// normalized by J0 + 2*sum(J_2k) = 1; absolute error below 1e-14 on [0, 200].
double bessel_j1(double x);

// Gauss-Legendre rule on [-1, 1].
struct GaussLegendreRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

// Nodes are found by Newton iteration on P_n; results are cached per order
// and the returned reference stays valid for the process lifetime.
const GaussLegendreRule& gauss_legendre(int order);

}  // namespace nvmag
