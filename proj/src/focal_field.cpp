#include "nvmag/focal_field.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "nvmag/errors.hpp"
#include "nvmag/special.hpp"

namespace nvmag {

void OpticalConfig::validate() const {
  if (!(wavelength_nm > 0.0) || !std::isfinite(wavelength_nm)) {
    throw Error(ErrorCode::InvalidOptics, "wavelength must be positive");
  }
  if (!(numerical_aperture > 0.0) || !(numerical_aperture < immersion_index)) {
    std::ostringstream msg;
    msg << "numerical aperture " << numerical_aperture << " must lie in (0, n = " << immersion_index
        << ")";
    throw Error(ErrorCode::InvalidOptics, msg.str());
  }
  if (quadrature_nodes < 8) {
    throw Error(ErrorCode::InvalidOptics, "quadrature_nodes must be at least 8");
  }
  if (!std::isfinite(pupil_amplitude)) {
    throw Error(ErrorCode::InvalidOptics, "pupil amplitude must be finite");
  }
  if (!(convergence_tolerance > 0.0)) {
    throw Error(ErrorCode::InvalidOptics, "convergence tolerance must be positive");
  }
}

double OpticalConfig::wavenumber() const {
  return 2.0 * std::numbers::pi * immersion_index / wavelength_nm;
}

double OpticalConfig::field_scale() const {
  const double cos_alpha = std::cos(max_aperture_angle(*this));
  return 2.0 * std::abs(pupil_amplitude) * (2.0 / 3.0) * (1.0 - std::pow(cos_alpha, 1.5));
}

double max_aperture_angle(const OpticalConfig& config) {
  if (!(config.numerical_aperture > 0.0) || !(config.numerical_aperture < config.immersion_index)) {
    std::ostringstream msg;
    msg << "numerical aperture " << config.numerical_aperture << " must lie in (0, n = "
        << config.immersion_index << ")";
    throw Error(ErrorCode::InvalidOptics, msg.str());
  }
  return std::asin(config.numerical_aperture / config.immersion_index);
}

ComplexAmplitude azimuthal_field_at_order(double r_nm, double z_nm, const OpticalConfig& config,
                                          int nodes) {
  if (r_nm == 0.0) return {0.0, 0.0};
  const double alpha = max_aperture_angle(config);
  const double k = config.wavenumber();
  const auto& rule = gauss_legendre(nodes);
  const double half = 0.5 * alpha;
  double re = 0.0;
  double im = 0.0;
  for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
    const double theta = half * (rule.nodes[i] + 1.0);
    const double s = std::sin(theta);
    const double c = std::cos(theta);
    const double radial = std::sqrt(c) * s * bessel_j1(k * r_nm * s) * rule.weights[i];
    if (z_nm == 0.0) {
      re += radial;
    } else {
      const double phase = k * z_nm * c;
      re += radial * std::cos(phase);
      im += radial * std::sin(phase);
    }
  }
  const double scale = 2.0 * config.pupil_amplitude * half;
  return {scale * re, scale * im};
}

ComplexAmplitude azimuthal_field(double r_nm, double z_nm, const OpticalConfig& config) {
  if (r_nm < 0.0) throw Error(ErrorCode::InvalidArgument, "radial coordinate must be non-negative");
  config.validate();
  const ComplexAmplitude coarse = azimuthal_field_at_order(r_nm, z_nm, config, config.quadrature_nodes);
  const ComplexAmplitude fine =
      azimuthal_field_at_order(r_nm, z_nm, config, 2 * config.quadrature_nodes);
  const double change = std::abs(fine - coarse);
  if (change > config.convergence_tolerance * config.field_scale()) {
    std::ostringstream msg;
    msg << "node doubling changed E_phi(" << r_nm << ", " << z_nm << ") by " << change;
    throw Error(ErrorCode::QuadratureNotConverged, msg.str());
  }
  return coarse;
}

Eigen::Vector3cd field_vector_at(const Eigen::Vector3d& point, const Eigen::Vector2d& beam_center,
                                 double z_nm, const OpticalConfig& config) {
  const double dx = point.x() - beam_center.x();
  const double dy = point.y() - beam_center.y();
  const double rho = std::hypot(dx, dy);
  if (rho == 0.0) return Eigen::Vector3cd::Zero();
  const ComplexAmplitude amplitude = azimuthal_field(rho, z_nm, config);
  const Eigen::Vector3d phi_hat(-dy / rho, dx / rho, 0.0);
  return phi_hat.cast<std::complex<double>>() * amplitude;
}

RadialIntensityTable::RadialIntensityTable(const OpticalConfig& config, double rho_max_nm,
                                           double spacing_nm, double z_nm)
    : config_(config), spacing_(spacing_nm), z_(z_nm) {
  config_.validate();
  if (!(spacing_nm > 0.0) || !(rho_max_nm >= 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "radial table needs positive spacing and range");
  }
  // Three extra samples past rho_max keep the stencil inside the table.
  const auto count = static_cast<std::size_t>(std::ceil(rho_max_nm / spacing_nm)) + 4;
  values_.resize(count);
  for (std::size_t i = 0; i < count; ++i) {
    values_[i] = std::norm(azimuthal_field(spacing_ * static_cast<double>(i), z_, config_));
    peak_ = std::max(peak_, values_[i]);
  }
}

double RadialIntensityTable::operator()(double rho_nm) const {
  const double u = rho_nm / spacing_;
  const auto base = static_cast<long>(std::floor(u));
  if (base + 3 >= static_cast<long>(values_.size())) {
    return std::norm(azimuthal_field(rho_nm, z_, config_));
  }
  const double t = u - static_cast<double>(base);
  if (t == 0.0) return values_[static_cast<std::size_t>(base)];
  // |E|^2 is even in rho, so negative indices mirror across the axis.
  double result = 0.0;
  for (int j = -2; j <= 3; ++j) {
    double weight = 1.0;
    for (int m = -2; m <= 3; ++m) {
      if (m != j) weight *= (t - m) / static_cast<double>(j - m);
    }
    result += weight * values_[static_cast<std::size_t>(std::abs(base + j))];
  }
  return result;
}

}  // namespace nvmag
