#include "nvmag/vector_recon.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include <Eigen/Dense>

#include "nvmag/errors.hpp"

namespace nvmag {

namespace {

constexpr double kPi = std::numbers::pi;

// +1 when v is in the canonical (upper) hemisphere, ties broken on y then x.
double hemisphere_sign(const Eigen::Vector3d& v) {
  if (v.z() != 0.0) return v.z() > 0.0 ? 1.0 : -1.0;
  if (v.y() != 0.0) return v.y() > 0.0 ? 1.0 : -1.0;
  return v.x() >= 0.0 ? 1.0 : -1.0;
}

struct Refined {
  Eigen::Vector3d direction;
  double residual;
};

double cone_residual(const Eigen::MatrixXd& axes, const Eigen::VectorXd& cosines, const Eigen::Vector3d& b) {
  return (axes * b - cosines).squaredNorm();
}

// Minimises the cone misfit on the unit sphere in a tangent chart around the
// seed. The chart is built from the seed's hemisphere-canonical sign, so a
// negated seed yields the exactly negated trajectory.
Refined refine_on_sphere(const Eigen::MatrixXd& axes, const Eigen::VectorXd& cosines, const Eigen::Vector3d& seed,
                         const SimplexSettings& settings) {
  const double sign = hemisphere_sign(seed);
  const Eigen::Vector3d canonical = sign * seed;
  Eigen::Index smallest = 0;
  canonical.cwiseAbs().minCoeff(&smallest);
  const Eigen::Vector3d helper = Eigen::Vector3d::Unit(smallest);
  const Eigen::Vector3d e1 = sign * helper.cross(canonical).normalized();
  const Eigen::Vector3d e2 = sign * canonical.cross(helper.cross(canonical).normalized());

  auto point = [&](const Eigen::VectorXd& x) { return Eigen::Vector3d((seed + x(0) * e1 + x(1) * e2).normalized()); };
  auto objective = [&](const Eigen::VectorXd& x) { return cone_residual(axes, cosines, point(x)); };
  Eigen::VectorXd steps(2);
  steps << 1e-2, 1e-2;
  const SimplexResult result = nelder_mead(objective, Eigen::VectorXd::Zero(2), settings, steps);
  return {point(result.argmin), result.value};
}

Eigen::Vector3d linear_seed(const Eigen::MatrixXd& axes, const Eigen::VectorXd& cosines) {
  Eigen::Vector3d b;
  if (axes.rows() == 3) {
    b = axes.fullPivLu().solve(cosines);
  } else {
    b = axes.colPivHouseholderQr().solve(cosines);
  }
  const double norm = b.norm();
  if (!(norm > 1e-12) || !std::isfinite(norm)) return Eigen::Vector3d::UnitZ();
  return b / norm;
}

void spherical_angles(const Eigen::Vector3d& v, double& theta, double& phi) {
  theta = std::acos(std::clamp(v.z(), -1.0, 1.0));
  phi = std::atan2(v.y(), v.x());
  if (phi < 0.0) phi += 2.0 * kPi;
  if (phi >= 2.0 * kPi) phi = 0.0;
}

}  // namespace

void ConeConstraint::validate() const {
  if (!(alpha >= 0.0 && alpha <= kPi)) throw Error(ErrorCode::InvalidArgument, "cone angle must lie in [0, pi]");
  if (!(field >= 0.0)) throw Error(ErrorCode::InvalidArgument, "field magnitude must be non-negative");
  if (!(alpha_sigma >= 0.0) || !(field_sigma >= 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "uncertainties must be non-negative");
  }
}

double great_circle_distance(const Eigen::Vector3d& a, const Eigen::Vector3d& b) {
  return std::atan2(a.cross(b).norm(), a.dot(b));
}

std::pair<double, double> aggregate_magnitude(const std::vector<ConeConstraint>& constraints) {
  if (constraints.empty()) throw Error(ErrorCode::InvalidArgument, "need at least one constraint");
  const bool weighted = std::all_of(constraints.begin(), constraints.end(),
                                    [](const ConeConstraint& c) { return c.field_sigma > 0.0; });
  double sum = 0.0;
  double weights = 0.0;
  for (const auto& c : constraints) {
    const double w = weighted ? 1.0 / (c.field_sigma * c.field_sigma) : 1.0;
    sum += w * c.field;
    weights += w;
  }
  const double mean = sum / weights;
  if (constraints.size() < 2) return {mean, 0.0};
  double arithmetic = 0.0;
  for (const auto& c : constraints) arithmetic += c.field;
  arithmetic /= static_cast<double>(constraints.size());
  double squares = 0.0;
  for (const auto& c : constraints) squares += (c.field - arithmetic) * (c.field - arithmetic);
  return {mean, std::sqrt(squares / static_cast<double>(constraints.size() - 1))};
}

TriangleDiagnostic triangle_diagnostic(const std::vector<ConeConstraint>& constraints,
                                       const std::vector<int>& branch_choice, const Eigen::Vector3d& reference) {
  if (constraints.size() != 3 || branch_choice.size() != 3) {
    throw Error(ErrorCode::InvalidArgument, "triangle diagnostic needs exactly three constraints");
  }
  TriangleDiagnostic out;
  std::vector<Eigen::Vector3d> vertices;
  for (std::size_t i = 0; i < 3; ++i) {
    for (std::size_t j = i + 1; j < 3; ++j) {
      TriangleVertex tv{i, j, false, Eigen::Vector3d::Zero()};
      const Eigen::Vector3d ni = constraints[i].axis.axis();
      const Eigen::Vector3d nj = constraints[j].axis.axis();
      const double ci = (branch_choice[i] ? -1.0 : 1.0) * std::cos(constraints[i].alpha);
      const double cj = (branch_choice[j] ? -1.0 : 1.0) * std::cos(constraints[j].alpha);
      // x = a ni + b nj + t (ni x nj), with ni.x = ci and nj.x = cj
      const double g = ni.dot(nj);
      const double det = 1.0 - g * g;
      const Eigen::Vector3d normal = ni.cross(nj);
      if (det > 1e-14) {
        const double a = (ci - g * cj) / det;
        const double b = (cj - g * ci) / det;
        const Eigen::Vector3d in_plane = a * ni + b * nj;
        const double t_squared = (1.0 - in_plane.squaredNorm()) / normal.squaredNorm();
        if (t_squared >= 0.0) {
          const double t = std::sqrt(t_squared);
          const Eigen::Vector3d plus = in_plane + t * normal;
          const Eigen::Vector3d minus = in_plane - t * normal;
          tv.vertex = great_circle_distance(plus, reference) <= great_circle_distance(minus, reference) ? plus : minus;
          tv.intersects = true;
          vertices.push_back(tv.vertex);
        }
      }
      out.pairs.push_back(tv);
    }
  }
  for (std::size_t a = 0; a < vertices.size(); ++a) {
    for (std::size_t b = a + 1; b < vertices.size(); ++b) {
      out.spread = std::max(out.spread, great_circle_distance(vertices[a], vertices[b]));
    }
  }
  return out;
}

VectorFieldResult solve_direction(const std::vector<ConeConstraint>& constraints, const ReconSettings& settings) {
  const std::size_t n = constraints.size();
  if (n < 3) throw Error(ErrorCode::InvalidArgument, "need at least three cone constraints");
  if (n > static_cast<std::size_t>(settings.max_constraints)) {
    std::ostringstream msg;
    msg << "at most " << settings.max_constraints << " constraints are supported";
    throw Error(ErrorCode::InvalidArgument, msg.str());
  }
  for (const auto& c : constraints) c.validate();

  Eigen::MatrixXd axes(static_cast<Eigen::Index>(n), 3);
  Eigen::VectorXd cosines(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    axes.row(static_cast<Eigen::Index>(i)) = constraints[i].axis.axis().transpose();
    cosines(static_cast<Eigen::Index>(i)) = std::cos(constraints[i].alpha);
  }

  const Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> gram(axes.transpose() * axes);
  const double smallest = gram.eigenvalues().minCoeff();
  const double largest = gram.eigenvalues().maxCoeff();
  if (!(smallest > 0.0) || largest / smallest > settings.condition_bound) {
    throw Error(ErrorCode::DegenerateAxes, "NV axes do not span three dimensions");
  }

  VectorFieldResult result;
  const std::size_t combinations = std::size_t{1} << n;
  result.combination_residuals.resize(combinations);
  Eigen::Vector3d best_direction = Eigen::Vector3d::UnitZ();
  std::size_t best_mask = 0;
  double best_residual = std::numeric_limits<double>::infinity();
  for (std::size_t mask = 0; mask < combinations; ++mask) {
    Eigen::VectorXd signed_cosines = cosines;
    for (std::size_t i = 0; i < n; ++i) {
      if (mask & (std::size_t{1} << i)) signed_cosines(static_cast<Eigen::Index>(i)) = -cosines(static_cast<Eigen::Index>(i));
    }
    const Refined refined = refine_on_sphere(axes, signed_cosines, linear_seed(axes, signed_cosines), settings.simplex);
    result.combination_residuals[mask] = refined.residual;
    if (refined.residual < best_residual) {
      best_residual = refined.residual;
      best_direction = refined.direction;
      best_mask = mask;
    }
  }
  if (!(best_residual <= settings.residual_gate)) {
    std::ostringstream msg;
    msg << "best cone misfit " << best_residual << " exceeds the gate " << settings.residual_gate;
    throw Error(ErrorCode::NoSolution, msg.str());
  }

  // Report the upper-hemisphere member; negating flips every branch.
  const double sign = hemisphere_sign(best_direction);
  if (sign < 0.0) best_mask = (combinations - 1) ^ best_mask;
  result.direction = sign * best_direction;
  result.mirror = -result.direction;
  result.residual = best_residual;
  spherical_angles(result.direction, result.theta, result.phi);
  spherical_angles(result.mirror, result.mirror_theta, result.mirror_phi);
  for (std::size_t i = 0; i < n; ++i) {
    const int choice = (best_mask >> i) & 1U;
    result.branch_choice.push_back(choice);
    result.selected_alpha.push_back(choice ? kPi - constraints[i].alpha : constraints[i].alpha);
  }
  std::tie(result.magnitude_mean, result.magnitude_std) = aggregate_magnitude(constraints);
  if (n == 3) result.triangle = triangle_diagnostic(constraints, result.branch_choice, result.direction);

  const bool have_sigmas = std::any_of(constraints.begin(), constraints.end(),
                                       [](const ConeConstraint& c) { return c.alpha_sigma > 0.0; });
  if (have_sigmas && settings.bootstrap_samples > 0) {
    std::mt19937_64 engine(settings.seed);
    double squares = 0.0;
    for (int s = 0; s < settings.bootstrap_samples; ++s) {
      Eigen::VectorXd perturbed(static_cast<Eigen::Index>(n));
      for (std::size_t i = 0; i < n; ++i) {
        std::normal_distribution<double> noise(0.0, constraints[i].alpha_sigma);
        const double alpha = result.selected_alpha[i] + (constraints[i].alpha_sigma > 0.0 ? noise(engine) : 0.0);
        perturbed(static_cast<Eigen::Index>(i)) = std::cos(alpha);
      }
      const Refined sample = refine_on_sphere(axes, perturbed, linear_seed(axes, perturbed), settings.simplex);
      const double angle = great_circle_distance(sample.direction, result.direction);
      squares += angle * angle;
    }
    result.direction_sigma = std::sqrt(squares / settings.bootstrap_samples);
  }
  return result;
}

}  // namespace nvmag
