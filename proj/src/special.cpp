#include "nvmag/special.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <numbers>

#include "nvmag/errors.hpp"

namespace nvmag {

double bessel_j1(double x) {
  if (x < 0.0) return -bessel_j1(-x);
  if (x == 0.0) return 0.0;
  if (x < 1e-8) return 0.5 * x;

  // Start well above x so the recurrence is stable for the minimal solution.
  const int start = 2 * ((static_cast<int>(x) + 20 + static_cast<int>(std::sqrt(40.0 * (x + 1.0)))) / 2);
  constexpr double kBig = 1e200;
  constexpr double kRescale = 1e-200;

  const double two_over_x = 2.0 / x;
  double above = 0.0;  // f_{j+1}
  double current = 1e-30;  // f_j
  double even_sum = 0.0;
  double order_one = 0.0;
  for (int j = start; j > 0; --j) {
    const double below = j * two_over_x * current - above;  // f_{j-1}
    above = current;
    current = below;
    if (std::abs(current) > kBig) {
      current *= kRescale;
      above *= kRescale;
      even_sum *= kRescale;
      order_one *= kRescale;
    }
    const int index = j - 1;
    if (index == 1) order_one = current;
    if (index > 0 && index % 2 == 0) even_sum += current;
  }
  const double norm = current + 2.0 * even_sum;  // f_0 + 2 sum f_2k
  return order_one / norm;
}

namespace {

GaussLegendreRule build_rule(int order) {
  GaussLegendreRule rule;
  rule.nodes.resize(order);
  rule.weights.resize(order);
  const int half = (order + 1) / 2;
  for (int i = 0; i < half; ++i) {
    double z = std::cos(std::numbers::pi * (i + 0.75) / (order + 0.5));
    double derivative = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p1 = 1.0;
      double p2 = 0.0;
      for (int j = 0; j < order; ++j) {
        const double p3 = p2;
        p2 = p1;
        p1 = ((2.0 * j + 1.0) * z * p2 - j * p3) / (j + 1.0);
      }
      derivative = order * (z * p1 - p2) / (z * z - 1.0);
      const double step = p1 / derivative;
      z -= step;
      if (std::abs(step) < 1e-16) break;
    }
    // Recompute the derivative at the converged root for the weight.
    double p1 = 1.0;
    double p2 = 0.0;
    for (int j = 0; j < order; ++j) {
      const double p3 = p2;
      p2 = p1;
      p1 = ((2.0 * j + 1.0) * z * p2 - j * p3) / (j + 1.0);
    }
    derivative = order * (z * p1 - p2) / (z * z - 1.0);
    const double weight = 2.0 / ((1.0 - z * z) * derivative * derivative);
    rule.nodes[i] = -z;
    rule.nodes[order - 1 - i] = z;
    rule.weights[i] = weight;
    rule.weights[order - 1 - i] = weight;
  }
  if (order % 2 == 1) rule.nodes[order / 2] = 0.0;
  return rule;
}

}  // namespace

const GaussLegendreRule& gauss_legendre(int order) {
  if (order < 1) throw Error(ErrorCode::InvalidArgument, "Gauss-Legendre order must be positive");
  static std::mutex mutex;
  static std::map<int, GaussLegendreRule> cache;
  std::lock_guard lock(mutex);
  auto it = cache.find(order);
  if (it == cache.end()) it = cache.emplace(order, build_rule(order)).first;
  return it->second;
}

}  // namespace nvmag
