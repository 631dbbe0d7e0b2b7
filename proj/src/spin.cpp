#include "nvmag/spin.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "nvmag/errors.hpp"

namespace nvmag {

namespace {

using cd = std::complex<double>;

Matrix9cd kron(const Eigen::Matrix3cd& a, const Eigen::Matrix3cd& b) {
  Matrix9cd out;
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) out.block<3, 3>(3 * i, 3 * j) = a(i, j) * b;
  }
  return out;
}

}  // namespace

void SpinParams::validate() const {
  if (!(zero_field_splitting > 0.0)) throw Error(ErrorCode::InvalidArgument, "D must be positive");
  if (!(gamma_e > 0.0)) throw Error(ErrorCode::InvalidArgument, "gamma_e must be positive");
  for (double v : {hyperfine_parallel, hyperfine_perpendicular, quadrupole, gamma_n}) {
    if (!std::isfinite(v)) throw Error(ErrorCode::InvalidArgument, "spin parameters must be finite");
  }
}

Eigen::Matrix3cd spin_x() {
  const double r = 1.0 / std::numbers::sqrt2;
  Eigen::Matrix3cd m = Eigen::Matrix3cd::Zero();
  m(0, 1) = m(1, 0) = m(1, 2) = m(2, 1) = r;
  return m;
}

Eigen::Matrix3cd spin_y() {
  const double r = 1.0 / std::numbers::sqrt2;
  Eigen::Matrix3cd m = Eigen::Matrix3cd::Zero();
  m(0, 1) = cd(0.0, -r);
  m(1, 0) = cd(0.0, r);
  m(1, 2) = cd(0.0, -r);
  m(2, 1) = cd(0.0, r);
  return m;
}

Eigen::Matrix3cd spin_z() {
  Eigen::Matrix3cd m = Eigen::Matrix3cd::Zero();
  m(0, 0) = 1.0;
  m(2, 2) = -1.0;
  return m;
}

Eigen::Matrix3d electron_hamiltonian(double b_parallel, double b_perpendicular, const SpinParams& params) {
  const double d = params.zero_field_splitting;
  const double zeeman = params.gamma_e * b_parallel;
  const double transverse = params.gamma_e * b_perpendicular / std::numbers::sqrt2;
  Eigen::Matrix3d h;
  h << d + zeeman, transverse, 0.0,
       transverse, 0.0, transverse,
       0.0, transverse, d - zeeman;
  return h;
}

Eigen::Matrix3cd electron_hamiltonian(const Eigen::Vector3d& field_nv, const SpinParams& params) {
  const Eigen::Matrix3cd sz = spin_z();
  return params.zero_field_splitting * sz * sz +
         params.gamma_e * (field_nv.x() * spin_x() + field_nv.y() * spin_y() + field_nv.z() * sz);
}

Matrix9cd full_hamiltonian(const Eigen::Vector3d& field_nv, const SpinParams& params) {
  const Eigen::Matrix3cd sx = spin_x();
  const Eigen::Matrix3cd sy = spin_y();
  const Eigen::Matrix3cd sz = spin_z();
  const Eigen::Matrix3cd one = Eigen::Matrix3cd::Identity();
  const Eigen::Matrix3cd field_dot = field_nv.x() * sx + field_nv.y() * sy + field_nv.z() * sz;

  Matrix9cd h = kron(params.zero_field_splitting * sz * sz + params.gamma_e * field_dot, one);
  h += params.hyperfine_perpendicular * (kron(sx, sx) + kron(sy, sy));
  h += params.hyperfine_parallel * kron(sz, sz);
  h += kron(one, params.quadrupole * sz * sz + params.gamma_n * field_dot);
  return h;
}

TransitionPair transition_frequencies(const Eigen::Vector3d& field_nv, const SpinParams& params) {
  const Eigen::SelfAdjointEigenSolver<Eigen::Matrix3cd> solver(electron_hamiltonian(field_nv, params));
  const Eigen::Vector3d energies = solver.eigenvalues();
  const Eigen::Matrix3cd vectors = solver.eigenvectors();
  int zero_state = 0;
  for (int i = 1; i < 3; ++i) {
    if (std::norm(vectors(1, i)) > std::norm(vectors(1, zero_state))) zero_state = i;
  }
  std::array<double, 2> lines{};
  int next = 0;
  for (int i = 0; i < 3; ++i) {
    if (i != zero_state) lines[static_cast<std::size_t>(next++)] = energies(i) - energies(zero_state);
  }
  std::sort(lines.begin(), lines.end());
  return {lines[0], lines[1]};
}

TransitionPair transition_frequencies(double field, double alpha, const SpinParams& params) {
  if (!(field >= 0.0)) throw Error(ErrorCode::InvalidArgument, "field magnitude must be non-negative");
  return transition_frequencies(Eigen::Vector3d(field * std::sin(alpha), 0.0, field * std::cos(alpha)),
                                params);
}

namespace {

double magnitude_radicand(const TransitionPair& pair, double d) {
  const double w1 = pair.omega1;
  const double w2 = pair.omega2;
  return w1 * w1 + w2 * w2 - w1 * w2 - d * d;
}

}  // namespace

double invert_magnitude(const TransitionPair& pair, double zero_field_splitting, double gamma_e) {
  const double d = zero_field_splitting;
  double radicand = magnitude_radicand(pair, d);
  if (radicand < 0.0) {
    if (radicand < -kRadicandTolerance * d * d) {
      std::ostringstream msg;
      msg << "no real field produces (" << pair.omega1 << ", " << pair.omega2 << ") MHz";
      throw Error(ErrorCode::InconsistentFrequencies, msg.str());
    }
    radicand = 0.0;
  }
  return std::sqrt(radicand / 3.0) / gamma_e;
}

std::array<double, 2> invert_polar_angle(const TransitionPair& pair, double zero_field_splitting) {
  const double d = zero_field_splitting;
  const double w1 = pair.omega1;
  const double w2 = pair.omega2;
  const double field_term = magnitude_radicand(pair, d);
  if (std::abs(field_term) <= kRadicandTolerance * d * d) {
    throw Error(ErrorCode::DegenerateField, "zero field: the cone angle is undefined");
  }
  const double numerator = (2.0 * w1 - w2 - d) * (w1 - 2.0 * w2 + d) * (w1 + w2 + d);
  double cos_squared = numerator / (9.0 * d * field_term);
  constexpr double kTol = 1e-9;
  if (cos_squared < -kTol || cos_squared > 1.0 + kTol || !std::isfinite(cos_squared)) {
    std::ostringstream msg;
    msg << "cos^2(alpha) = " << cos_squared << " lies outside [0, 1]";
    throw Error(ErrorCode::InconsistentFrequencies, msg.str());
  }
  cos_squared = std::clamp(cos_squared, 0.0, 1.0);
  const double alpha = std::acos(std::sqrt(cos_squared));
  return {alpha, std::numbers::pi - alpha};
}

FieldEstimate estimate_field(const TransitionPair& pair, const SpinParams& params) {
  FieldEstimate estimate;
  const double d = params.zero_field_splitting;
  estimate.magnitude = invert_magnitude(pair, d, params.gamma_e);
  estimate.alpha_candidates = invert_polar_angle(pair, d);

  // Central differences; step small against the line positions but large
  // against rounding of the ~GHz frequencies.
  const double h = 1e-4;
  auto gradient = [&](auto&& f) {
    TransitionPair up1 = pair, dn1 = pair, up2 = pair, dn2 = pair;
    up1.omega1 += h;
    dn1.omega1 -= h;
    up2.omega2 += h;
    dn2.omega2 -= h;
    return Eigen::Vector2d((f(up1) - f(dn1)) / (2 * h), (f(up2) - f(dn2)) / (2 * h));
  };
  Eigen::Matrix2d covariance;
  covariance << pair.sigma1 * pair.sigma1, pair.covariance, pair.covariance, pair.sigma2 * pair.sigma2;
  if (covariance.isZero(0.0)) return estimate;

  const Eigen::Vector2d grad_b =
      gradient([&](const TransitionPair& p) { return invert_magnitude(p, d, params.gamma_e); });
  estimate.magnitude_sigma = std::sqrt(std::max(0.0, grad_b.dot(covariance * grad_b)));
  try {
    const Eigen::Vector2d grad_a =
        gradient([&](const TransitionPair& p) { return invert_polar_angle(p, d)[0]; });
    estimate.alpha_sigma = std::sqrt(std::max(0.0, grad_a.dot(covariance * grad_a)));
  } catch (const Error&) {
    // The perturbed pair left the admissible region (alpha at 0 or pi/2);
    // fall back to a one-sided estimate.
    const double a0 = estimate.alpha_candidates[0];
    double worst = 0.0;
    for (double s1 : {-1.0, 1.0}) {
      for (double s2 : {-1.0, 1.0}) {
        TransitionPair p = pair;
        p.omega1 += s1 * pair.sigma1;
        p.omega2 += s2 * pair.sigma2;
        try {
          worst = std::max(worst, std::abs(invert_polar_angle(p, d)[0] - a0));
        } catch (const Error&) {
        }
      }
    }
    estimate.alpha_sigma = worst;
  }
  return estimate;
}

}  // namespace nvmag
