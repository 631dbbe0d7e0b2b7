#pragma once

#include <array>
#include <complex>

#include <Eigen/Core>

namespace nvmag {

using Matrix9cd = Eigen::Matrix<std::complex<double>, 9, 9>;

// Ground-state spin parameters. All frequencies are ordinary frequencies in
// MHz and field scales in MHz/G. The hyperfine, quadrupole and nuclear Zeeman
// defaults are literature values for 14N, not quantities measured here.
struct SpinParams {
  double zero_field_splitting = 2870.0;  // D
  double gamma_e = 2.8025;               // g_e mu_B / h
  double hyperfine_parallel = -2.16;     // A_par
  double hyperfine_perpendicular = -2.70;  // A_perp
  double quadrupole = -4.945;            // Q
  double gamma_n = 3.077e-4;             // g_N mu_N / h

  void validate() const;
};

// mI = 0 line positions of the ms = 0 -> -1 and ms = 0 -> +1 transitions.
struct TransitionPair {
  double omega1 = 0.0;
  double omega2 = 0.0;
  double sigma1 = 0.0;
  double sigma2 = 0.0;
  double covariance = 0.0;  // cov(omega1, omega2)
};

struct FieldEstimate {
  double magnitude = 0.0;                         // G
  std::array<double, 2> alpha_candidates{};       // {alpha, pi - alpha}, alpha <= pi/2
  double magnitude_sigma = 0.0;                   // G
  double alpha_sigma = 0.0;                       // rad, same for both candidates
};

// Spin-1 operators in the {+1, 0, -1} basis.
Eigen::Matrix3cd spin_x();
Eigen::Matrix3cd spin_y();
Eigen::Matrix3cd spin_z();

// D Sz^2 + gamma_e (B_par Sz + B_perp Sx), in MHz.
Eigen::Matrix3d electron_hamiltonian(double b_parallel, double b_perpendicular, const SpinParams& params);

// Electron Hamiltonian for a field vector given in the NV frame (z along the axis).
Eigen::Matrix3cd electron_hamiltonian(const Eigen::Vector3d& field_nv, const SpinParams& params);

// Electron (S=1) x 14N (I=1) Hamiltonian, index = 3 * electron + nuclear, with
// both factors in the {+1, 0, -1} basis.
Matrix9cd full_hamiltonian(const Eigen::Vector3d& field_nv, const SpinParams& params);

// Diagonalises the electron Hamiltonian for a field of magnitude `field`
// at angle `alpha` from the NV axis and returns the two transition
// frequencies out of the eigenstate with the largest ms = 0 weight, ascending.
TransitionPair transition_frequencies(double field, double alpha, const SpinParams& params);
TransitionPair transition_frequencies(const Eigen::Vector3d& field_nv, const SpinParams& params);

// Relative (to D^2) tolerance used when clamping radicands.
inline constexpr double kRadicandTolerance = 1e-9;

// B = sqrt((w1^2 + w2^2 - w1 w2 - D^2) / 3) / gamma_e.
double invert_magnitude(const TransitionPair& pair, double zero_field_splitting, double gamma_e);

// Both branches of arccos(+-sqrt(...)); the first element is <= pi/2.
std::array<double, 2> invert_polar_angle(const TransitionPair& pair, double zero_field_splitting);

// Magnitude and cone angle with first-order propagation of the pair's covariance.
FieldEstimate estimate_field(const TransitionPair& pair, const SpinParams& params);

}  // namespace nvmag
