#include "nvmag/nelder_mead.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "nvmag/errors.hpp"

namespace nvmag {

void SimplexSettings::validate() const {
  if (!(reflection > 0.0)) throw Error(ErrorCode::InvalidArgument, "reflection must be positive");
  if (!(expansion > 1.0)) throw Error(ErrorCode::InvalidArgument, "expansion must exceed 1");
  if (!(contraction > 0.0 && contraction < 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "contraction must lie in (0, 1)");
  }
  if (!(shrink > 0.0 && shrink < 1.0)) throw Error(ErrorCode::InvalidArgument, "shrink must lie in (0, 1)");
  if (max_iterations < 1) throw Error(ErrorCode::InvalidArgument, "max_iterations must be positive");
  if (!(x_tolerance >= 0.0) || !(f_tolerance >= 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "tolerances must be non-negative");
  }
}

SimplexResult nelder_mead(const Objective& objective, const Eigen::VectorXd& start,
                          const SimplexSettings& settings, const std::optional<Eigen::VectorXd>& steps) {
  settings.validate();
  const auto dim = start.size();
  if (dim < 1) throw Error(ErrorCode::InvalidArgument, "Nelder-Mead needs at least one parameter");
  if (steps && steps->size() != dim) {
    throw Error(ErrorCode::InvalidArgument, "step vector size does not match the start point");
  }

  int evaluations = 0;
  auto evaluate = [&](const Eigen::VectorXd& x) {
    const double value = objective(x);
    ++evaluations;
    if (!std::isfinite(value)) throw Error(ErrorCode::ObjectiveNotFinite, "objective returned a non-finite value");
    return value;
  };

  const auto n = static_cast<std::size_t>(dim);
  std::vector<Eigen::VectorXd> vertices(n + 1, start);
  for (Eigen::Index i = 0; i < dim; ++i) {
    double step = steps ? (*steps)(i) : (start(i) != 0.0 ? 0.05 * start(i) : 0.00025);
    vertices[static_cast<std::size_t>(i) + 1](i) += step;
  }
  std::vector<double> values(n + 1);
  for (std::size_t i = 0; i <= n; ++i) values[i] = evaluate(vertices[i]);

  std::vector<std::size_t> order(n + 1);
  auto sort_simplex = [&]() {
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    std::vector<Eigen::VectorXd> v2(n + 1);
    std::vector<double> f2(n + 1);
    for (std::size_t i = 0; i <= n; ++i) {
      v2[i] = std::move(vertices[order[i]]);
      f2[i] = values[order[i]];
    }
    vertices = std::move(v2);
    values = std::move(f2);
  };

  const double rho = settings.reflection;
  const double chi = settings.expansion;
  const double psi = settings.contraction;
  const double sigma = settings.shrink;

  SimplexResult result;
  sort_simplex();
  int iteration = 0;
  for (; iteration < settings.max_iterations; ++iteration) {
    double x_spread = 0.0;
    double f_spread = 0.0;
    for (std::size_t i = 1; i <= n; ++i) {
      x_spread = std::max(x_spread, (vertices[i] - vertices[0]).cwiseAbs().maxCoeff());
      f_spread = std::max(f_spread, std::abs(values[i] - values[0]));
    }
    if (x_spread <= settings.x_tolerance && f_spread <= settings.f_tolerance) {
      result.converged = true;
      break;
    }

    Eigen::VectorXd centroid = Eigen::VectorXd::Zero(dim);
    for (std::size_t i = 0; i < n; ++i) centroid += vertices[i];
    centroid /= static_cast<double>(n);
    const Eigen::VectorXd& worst = vertices[n];

    const Eigen::VectorXd reflected = (1.0 + rho) * centroid - rho * worst;
    const double f_reflected = evaluate(reflected);
    bool do_shrink = false;

    if (f_reflected < values[0]) {
      const Eigen::VectorXd expanded = (1.0 + rho * chi) * centroid - rho * chi * worst;
      const double f_expanded = evaluate(expanded);
      if (f_expanded < f_reflected) {
        vertices[n] = expanded;
        values[n] = f_expanded;
      } else {
        vertices[n] = reflected;
        values[n] = f_reflected;
      }
    } else if (f_reflected < values[n - 1]) {
      vertices[n] = reflected;
      values[n] = f_reflected;
    } else if (f_reflected < values[n]) {
      const Eigen::VectorXd outside = (1.0 + psi * rho) * centroid - psi * rho * worst;
      const double f_outside = evaluate(outside);
      if (f_outside <= f_reflected) {
        vertices[n] = outside;
        values[n] = f_outside;
      } else {
        do_shrink = true;
      }
    } else {
      const Eigen::VectorXd inside = (1.0 - psi) * centroid + psi * worst;
      const double f_inside = evaluate(inside);
      if (f_inside < values[n]) {
        vertices[n] = inside;
        values[n] = f_inside;
      } else {
        do_shrink = true;
      }
    }

    if (do_shrink) {
      for (std::size_t i = 1; i <= n; ++i) {
        vertices[i] = vertices[0] + sigma * (vertices[i] - vertices[0]);
        values[i] = evaluate(vertices[i]);
      }
    }
    sort_simplex();
  }

  result.argmin = vertices[0];
  result.value = values[0];
  result.iterations = iteration;
  result.evaluations = evaluations;
  return result;
}

}  // namespace nvmag
