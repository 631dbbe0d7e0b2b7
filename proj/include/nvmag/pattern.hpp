#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include <Eigen/Core>

#include "nvmag/focal_field.hpp"

namespace nvmag {

// Orientation of the N->V axis in the lab frame: polar angle from +z and
// azimuth in the x-y plane, both in radians.
struct NVOrientation {
  double theta = 0.0;
  double phi = 0.0;

  // Validates theta in [0, pi] and wraps phi into [0, 2*pi).
  static NVOrientation make(double theta, double phi);
  static NVOrientation from_degrees(double theta_deg, double phi_deg);
  static NVOrientation from_axis(const Eigen::Vector3d& axis);

  Eigen::Vector3d axis() const;
};

inline constexpr std::int64_t kMaxScanPixels = 4096 * 4096;

// Pixel (col, row) sits at origin + pitch * (col, row) in sample coordinates (nm).
struct ScanGrid {
  int width_px = 31;
  int height_px = 31;
  double pitch_nm = 50.0;
  Eigen::Vector2d origin_nm{-750.0, -750.0};

  void validate() const;
  std::size_t pixel_count() const { return static_cast<std::size_t>(width_px) * height_px; }
  Eigen::Vector2d position(int col, int row) const;
  Eigen::Vector2d center() const;

  // A width x height grid with the given pitch, centred on the origin of the sample frame.
  static ScanGrid centered(int width_px, int height_px, double pitch_nm);
};

struct ScanImage {
  ScanGrid grid;
  std::vector<double> values;  // row-major, height_px rows of width_px values

  double at(int col, int row) const { return values[static_cast<std::size_t>(row) * grid.width_px + col]; }
  void validate() const;
};

// Sum of squared projections of the azimuthal field direction onto the two
// excitation dipoles spanning the plane normal to the NV axis: 1 - (phi_hat . n)^2.
// Both inputs must be unit vectors within 1e-9 (NonUnitVector otherwise).
double dipole_projection_factor(const Eigen::Vector3d& axis, const Eigen::Vector3d& azimuthal_dir);

// Excitation rate, up to the amplitude factor, for a beam displaced by
// `beam_offset` from the emitter: |E_phi(rho, z)|^2 times the dipole factor.
double excitation_at(const NVOrientation& orientation, const Eigen::Vector2d& beam_offset_nm,
                     const OpticalConfig& optics, double z_nm = 0.0);

// Dipole factor for the azimuthal direction of `beam_offset`, with the azimuth
// reduced modulo pi first; patterns at phi and phi + pi therefore agree bitwise
// whenever phi + pi is exactly representable. Returns 0 for a zero offset.
double orientation_factor(const NVOrientation& orientation, const Eigen::Vector2d& beam_offset_nm);

struct PatternParams {
  double amplitude = 1.0;
  double background = 0.0;
  // Emitter position in sample coordinates; defaults to the grid centre.
  std::optional<Eigen::Vector2d> nv_position;
  // Poisson shot noise, seeded per pixel from (seed, pixel index).
  std::optional<std::uint64_t> noise_seed;
  double z_nm = 0.0;
};

// Images are indexed by the beam displacement relative to the emitter. A stage
// that moves the sample produces the point mirror of this image.
ScanImage simulate_pattern(const NVOrientation& orientation, const ScanGrid& grid,
                           const OpticalConfig& optics, const PatternParams& params);

// Deterministic 64-bit mixer used to derive per-item seeds.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t index);

}  // namespace nvmag
