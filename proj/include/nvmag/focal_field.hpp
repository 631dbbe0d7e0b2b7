#pragma once

#include <complex>
#include <vector>

#include <Eigen/Core>

namespace nvmag {

using ComplexAmplitude = std::complex<double>;

// Focusing optics for the azimuthally polarized excitation beam. The stored
// wavelength is the vacuum wavelength; the wave number in the immersion
// medium is 2*pi*n/lambda.
struct OpticalConfig {
  double wavelength_nm = 532.0;
  double numerical_aperture = 1.40;
  double immersion_index = 1.518;
  double pupil_amplitude = 1.0;
  int quadrature_nodes = 64;
  // Allowed change under node doubling, relative to field_scale().
  double convergence_tolerance = 1e-9;

  void validate() const;
  double wavenumber() const;  // rad/nm, in the medium
  // Upper bound of |E_phi|: the integral of the absolute integrand.
  double field_scale() const;
};

// arcsin(NA / n), the largest focusing angle admitted by the objective.
double max_aperture_angle(const OpticalConfig& config);

// E_phi(r, z) = 2A * int_0^alpha sqrt(cos t) sin t J1(k r sin t) exp(i k z cos t) dt,
// evaluated by Gauss-Legendre quadrature with config.quadrature_nodes nodes.
// Throws QuadratureNotConverged when doubling the node count moves the result
// by more than convergence_tolerance * field_scale().
ComplexAmplitude azimuthal_field(double r_nm, double z_nm, const OpticalConfig& config);

// Same integral at an explicit node count, without the convergence check.
ComplexAmplitude azimuthal_field_at_order(double r_nm, double z_nm, const OpticalConfig& config,
                                          int nodes);

// Field vector E_phi(rho, z) * phi_hat at `point`, for a beam whose axis passes
// through `beam_center`. Zero on the axis.
Eigen::Vector3cd field_vector_at(const Eigen::Vector3d& point, const Eigen::Vector2d& beam_center,
                                 double z_nm, const OpticalConfig& config);

// |E_phi(rho, z)|^2 tabulated on a uniform radial grid and interpolated with a
// six-point Lagrange stencil. Used by the fitting loop, where the emitter
// position moves continuously and exact re-evaluation per pixel is too slow.
class RadialIntensityTable {
 public:
  RadialIntensityTable(const OpticalConfig& config, double rho_max_nm, double spacing_nm = 1.0,
                       double z_nm = 0.0);

  double operator()(double rho_nm) const;
  double rho_max() const { return spacing_ * static_cast<double>(values_.size() - 4); }
  double peak() const { return peak_; }

 private:
  OpticalConfig config_;
  double spacing_;
  double z_;
  double peak_ = 0.0;
  std::vector<double> values_;
};

}  // namespace nvmag
