#pragma once

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "nvmag/nelder_mead.hpp"
#include "nvmag/pattern.hpp"

namespace nvmag {

// One NV's ODMR result: the field lies on a cone of half-angle alpha about the axis.
struct ConeConstraint {
  NVOrientation axis;
  double alpha = 0.0;        // rad, [0, pi]
  double alpha_sigma = 0.0;  // rad, 0 if unknown
  double field = 0.0;        // G
  double field_sigma = 0.0;  // G, 0 if unknown

  void validate() const;
};

struct ReconSettings {
  double condition_bound = 1e8;  // on the Gram matrix of the axes
  double residual_gate = 1e-2;   // sum of squared cosine misfits
  int max_constraints = 6;       // 2^n branch combinations are searched
  int bootstrap_samples = 200;
  std::uint64_t seed = 1;
  SimplexSettings simplex{1.0, 2.0, 0.5, 0.5, 4000, 1e-12, 1e-18};
};

struct TriangleVertex {
  std::size_t first = 0;
  std::size_t second = 0;
  bool intersects = false;  // false: the two cones do not meet (NoIntersection)
  Eigen::Vector3d vertex = Eigen::Vector3d::Zero();
};

struct TriangleDiagnostic {
  std::vector<TriangleVertex> pairs;
  double spread = 0.0;  // largest great-circle distance between vertices, rad
};

struct VectorFieldResult {
  Eigen::Vector3d direction = Eigen::Vector3d::UnitZ();  // upper hemisphere member of the pair
  Eigen::Vector3d mirror = -Eigen::Vector3d::UnitZ();    // ODMR cannot tell B from -B
  double theta = 0.0;
  double phi = 0.0;
  double mirror_theta = 0.0;
  double mirror_phi = 0.0;
  double magnitude_mean = 0.0;
  double magnitude_std = 0.0;
  double residual = 0.0;  // sum_i (n_i . b - cos alpha_i)^2 for the chosen branches
  // Per constraint: 0 selects alpha, 1 selects pi - alpha (for `direction`).
  std::vector<int> branch_choice;
  std::vector<double> selected_alpha;
  std::vector<double> combination_residuals;  // indexed by the branch bit pattern
  std::optional<TriangleDiagnostic> triangle;  // present for exactly three constraints
  std::optional<double> direction_sigma;       // bootstrap RMS angle, rad
};

// Field direction from three or more cones: every branch combination is solved
// linearly, normalised, refined on the sphere by Nelder-Mead and the lowest
// residual wins. Errors: DegenerateAxes, NoSolution, InvalidArgument.
VectorFieldResult solve_direction(const std::vector<ConeConstraint>& constraints,
                                  const ReconSettings& settings = {});

// Inverse-variance weighted mean when every constraint carries a field sigma,
// arithmetic mean otherwise; sample standard deviation of the magnitudes.
std::pair<double, double> aggregate_magnitude(const std::vector<ConeConstraint>& constraints);

// Pairwise cone intersections for exactly three constraints, using the
// selected branch of each cone and keeping the candidate nearest `reference`.
TriangleDiagnostic triangle_diagnostic(const std::vector<ConeConstraint>& constraints,
                                       const std::vector<int>& branch_choice,
                                       const Eigen::Vector3d& reference);

double great_circle_distance(const Eigen::Vector3d& a, const Eigen::Vector3d& b);

}  // namespace nvmag
