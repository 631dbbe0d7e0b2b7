#include <cmath>

#include "doctest.h"
#include "nvmag/errors.hpp"
#include "nvmag/special.hpp"

using nvmag::bessel_j1;

TEST_CASE("J1 at reference points") {
  CHECK(bessel_j1(0.0) == 0.0);
  CHECK(std::abs(bessel_j1(1.0) - 0.44005058574493355) < 1e-15);
  for (double zero : {3.8317059702075125, 7.015586669815619, 10.173468135062722, 13.323691936314223}) {
    CHECK(std::abs(bessel_j1(zero)) < 1e-14);
  }
}

TEST_CASE("J1 is odd") {
  for (double x : {0.3, 2.5, 17.0, 44.4}) CHECK(bessel_j1(-x) == -bessel_j1(x));
}

TEST_CASE("J1 matches the power series for small arguments") {
  for (double x : {1e-9, 1e-5, 1e-3, 0.05, 0.2}) {
    double term = x / 2.0;
    double sum = 0.0;
    for (int m = 0; m < 12; ++m) {
      sum += term;
      term *= -(x * x / 4.0) / ((m + 1.0) * (m + 2.0));
    }
    CHECK(std::abs(bessel_j1(x) - sum) < 1e-17 + 1e-15 * std::abs(sum));
  }
}

TEST_CASE("J1 agrees with the standard library on [0, 50] to 1e-12") {
  double worst = 0.0;
  for (int i = 0; i <= 50000; ++i) {
    const double x = i * 1e-3;
    worst = std::max(worst, std::abs(bessel_j1(x) - std::cyl_bessel_j(1.0, x)));
  }
  CHECK(worst < 1e-12);
}

TEST_CASE("J1 approaches the large-argument asymptote") {
  const double x = 180.0;
  const double pi = 3.14159265358979323846;
  const double mu = 4.0;
  const double chi = x - 0.75 * pi;
  const double p = 1.0 - (mu - 1.0) * (mu - 9.0) / (2.0 * std::pow(8.0 * x, 2));
  const double q = (mu - 1.0) / (8.0 * x) - (mu - 1.0) * (mu - 9.0) * (mu - 25.0) / (6.0 * std::pow(8.0 * x, 3));
  const double asymptote = std::sqrt(2.0 / (pi * x)) * (p * std::cos(chi) - q * std::sin(chi));
  CHECK(std::abs(bessel_j1(x) - asymptote) < 1e-10);
}

TEST_CASE("Gauss-Legendre rules are exact for polynomials of degree 2n-1") {
  for (int n : {1, 2, 5, 16, 64, 128}) {
    const auto& rule = nvmag::gauss_legendre(n);
    REQUIRE(rule.nodes.size() == static_cast<std::size_t>(n));
    double weights = 0.0;
    for (double w : rule.weights) weights += w;
    CHECK(std::abs(weights - 2.0) < 1e-13);
    for (int degree = 0; degree <= std::min(2 * n - 1, 40); ++degree) {
      double sum = 0.0;
      for (int i = 0; i < n; ++i) sum += rule.weights[i] * std::pow(rule.nodes[i], degree);
      const double exact = degree % 2 ? 0.0 : 2.0 / (degree + 1);
      CHECK(std::abs(sum - exact) < 1e-13);
    }
    for (int i = 0; i < n; ++i) CHECK(rule.nodes[i] == -rule.nodes[n - 1 - i]);
  }
}

TEST_CASE("Gauss-Legendre order must be positive") {
  CHECK_THROWS_AS(nvmag::gauss_legendre(0), nvmag::Error);
}
