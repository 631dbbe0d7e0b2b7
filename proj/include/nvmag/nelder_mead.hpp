#pragma once

#include <functional>
#include <optional>

#include <Eigen/Core>

namespace nvmag {

struct SimplexSettings {
  double reflection = 1.0;
  double expansion = 2.0;
  double contraction = 0.5;
  double shrink = 0.5;
  int max_iterations = 4000;
  // Convergence needs both: every vertex within x_tolerance (max-norm) of the
  // best one, and every objective value within f_tolerance of the best.
  double x_tolerance = 1e-6;
  double f_tolerance = 1e-10;

  void validate() const;
};

struct SimplexResult {
  Eigen::VectorXd argmin;
  double value = 0.0;
  int iterations = 0;
  int evaluations = 0;
  bool converged = false;  // false when max_iterations ran out
};

using Objective = std::function<double(const Eigen::VectorXd&)>;

// Downhill simplex minimisation. The initial simplex is `start` plus one vertex
// per coordinate displaced by `steps[i]`; without explicit steps, 5% of the
// coordinate (0.00025 for zero coordinates) is used. Throws ObjectiveNotFinite
// as soon as the objective returns NaN or infinity.
SimplexResult nelder_mead(const Objective& objective, const Eigen::VectorXd& start,
                          const SimplexSettings& settings,
                          const std::optional<Eigen::VectorXd>& steps = std::nullopt);

}  // namespace nvmag
