#include "nvmag/pattern.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <sstream>
#include <unordered_map>

#include "nvmag/errors.hpp"

namespace nvmag {

namespace {
constexpr double kPi = std::numbers::pi;
constexpr double kUnitTolerance = 1e-9;
}  // namespace

NVOrientation NVOrientation::make(double theta, double phi) {
  if (!std::isfinite(theta) || !std::isfinite(phi) || theta < 0.0 || theta > kPi) {
    std::ostringstream msg;
    msg << "orientation (" << theta << ", " << phi << ") needs theta in [0, pi]";
    throw Error(ErrorCode::InvalidArgument, msg.str());
  }
  double wrapped = std::fmod(phi, 2.0 * kPi);
  if (wrapped < 0.0) wrapped += 2.0 * kPi;
  if (wrapped >= 2.0 * kPi) wrapped = 0.0;
  return {theta, wrapped};
}

NVOrientation NVOrientation::from_degrees(double theta_deg, double phi_deg) {
  return make(theta_deg * kPi / 180.0, phi_deg * kPi / 180.0);
}

NVOrientation NVOrientation::from_axis(const Eigen::Vector3d& axis) {
  const double norm = axis.norm();
  if (!(norm > 0.0)) throw Error(ErrorCode::InvalidArgument, "zero axis vector");
  const Eigen::Vector3d unit = axis / norm;
  return make(std::acos(std::clamp(unit.z(), -1.0, 1.0)), std::atan2(unit.y(), unit.x()));
}

Eigen::Vector3d NVOrientation::axis() const {
  const double s = std::sin(theta);
  return {s * std::cos(phi), s * std::sin(phi), std::cos(theta)};
}

void ScanGrid::validate() const {
  if (width_px <= 0 || height_px <= 0) {
    throw Error(ErrorCode::InvalidArgument, "scan grid dimensions must be positive");
  }
  if (!(pitch_nm > 0.0) || !std::isfinite(pitch_nm)) {
    throw Error(ErrorCode::InvalidArgument, "scan grid pitch must be positive");
  }
  if (static_cast<std::int64_t>(width_px) * height_px > kMaxScanPixels) {
    throw Error(ErrorCode::InvalidArgument, "scan grid exceeds the pixel limit");
  }
  if (!origin_nm.allFinite()) throw Error(ErrorCode::InvalidArgument, "scan grid origin not finite");
}

Eigen::Vector2d ScanGrid::position(int col, int row) const {
  return origin_nm + pitch_nm * Eigen::Vector2d(col, row);
}

Eigen::Vector2d ScanGrid::center() const {
  return origin_nm + 0.5 * pitch_nm * Eigen::Vector2d(width_px - 1, height_px - 1);
}

ScanGrid ScanGrid::centered(int width_px, int height_px, double pitch_nm) {
  ScanGrid grid{width_px, height_px, pitch_nm, Eigen::Vector2d::Zero()};
  grid.origin_nm = -0.5 * pitch_nm * Eigen::Vector2d(width_px - 1, height_px - 1);
  grid.validate();
  return grid;
}

void ScanImage::validate() const {
  grid.validate();
  if (values.size() != grid.pixel_count()) {
    throw Error(ErrorCode::InvalidArgument, "scan image size does not match its grid");
  }
  for (double v : values) {
    if (!std::isfinite(v) || v < 0.0) {
      throw Error(ErrorCode::InvalidArgument, "scan image values must be finite and non-negative");
    }
  }
}

double dipole_projection_factor(const Eigen::Vector3d& axis, const Eigen::Vector3d& azimuthal_dir) {
  if (std::abs(axis.norm() - 1.0) > kUnitTolerance ||
      std::abs(azimuthal_dir.norm() - 1.0) > kUnitTolerance) {
    throw Error(ErrorCode::NonUnitVector, "axis and field direction must be unit vectors");
  }
  const double along = azimuthal_dir.dot(axis);
  return 1.0 - along * along;
}

double orientation_factor(const NVOrientation& orientation, const Eigen::Vector2d& beam_offset_nm) {
  const double rho = beam_offset_nm.norm();
  if (rho == 0.0) return 0.0;
  const double phi = std::fmod(orientation.phi, kPi);
  const double s = std::sin(orientation.theta);
  // phi_hat . n with phi_hat = (-dy, dx, 0) / rho
  const double along =
      s * (-beam_offset_nm.y() * std::cos(phi) + beam_offset_nm.x() * std::sin(phi)) / rho;
  return 1.0 - along * along;
}

double excitation_at(const NVOrientation& orientation, const Eigen::Vector2d& beam_offset_nm,
                     const OpticalConfig& optics, double z_nm) {
  const double rho = beam_offset_nm.norm();
  if (rho == 0.0) return 0.0;
  return std::norm(azimuthal_field(rho, z_nm, optics)) * orientation_factor(orientation, beam_offset_nm);
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t index) {
  // splitmix64 finalizer applied to a combination of both inputs
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

ScanImage simulate_pattern(const NVOrientation& orientation, const ScanGrid& grid,
                           const OpticalConfig& optics, const PatternParams& params) {
  grid.validate();
  optics.validate();
  if (!(params.amplitude >= 0.0) || !(params.background >= 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "amplitude and background must be non-negative");
  }
  const Eigen::Vector2d nv = params.nv_position.value_or(grid.center());

  ScanImage image{grid, std::vector<double>(grid.pixel_count(), params.background)};
  std::unordered_map<double, double> intensity_by_rho;
  for (int row = 0; row < grid.height_px; ++row) {
    for (int col = 0; col < grid.width_px; ++col) {
      const Eigen::Vector2d offset = grid.position(col, row) - nv;
      const double rho = offset.norm();
      if (rho == 0.0 || params.amplitude == 0.0) continue;
      auto [it, inserted] = intensity_by_rho.try_emplace(rho, 0.0);
      if (inserted) it->second = std::norm(azimuthal_field(rho, params.z_nm, optics));
      const auto index = static_cast<std::size_t>(row) * grid.width_px + col;
      image.values[index] =
          params.background + params.amplitude * it->second * orientation_factor(orientation, offset);
    }
  }

  if (params.noise_seed) {
    for (std::size_t i = 0; i < image.values.size(); ++i) {
      const double mean = image.values[i];
      if (mean <= 0.0) continue;
      std::mt19937_64 engine(mix_seed(*params.noise_seed, i));
      std::poisson_distribution<long long> draw(mean);
      image.values[i] = static_cast<double>(draw(engine));
    }
  }
  return image;
}

}  // namespace nvmag
