#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <vector>

#include <Eigen/Core>

#include "nvmag/focal_field.hpp"
#include "nvmag/nelder_mead.hpp"
#include "nvmag/pattern.hpp"

namespace nvmag {

// Below this polar angle the azimuth of a fitted axis is not identifiable.
inline constexpr double kPhiIdentifiableTheta = 5.0 * 3.14159265358979323846 / 180.0;

struct OrientationFit {
  double theta = 0.0;       // [0, pi/2] after folding the axis/anti-axis pair
  double phi = 0.0;         // [0, pi)
  double mirror_phi = 0.0;  // phi + pi, the partner the pattern cannot distinguish
  Eigen::Vector2d center_nm = Eigen::Vector2d::Zero();
  double amplitude = 0.0;
  double background = 0.0;
  double residual = 0.0;  // SSE / sum((data - mean)^2)
  int n_starts_used = 0;
  int n_starts_converged = 0;
  int best_start = 0;
  int iterations = 0;  // of the winning start
  bool converged = false;
  bool phi_identifiable = true;
};

struct ResidualResult {
  double residual = 0.0;
  double amplitude = 0.0;
  double background = 0.0;
};

// Noiseless unit-amplitude model of a scan, with |E_phi|^2 tabulated once for
// the grid. The orientation enters only through the dipole factor.
class PatternTemplate {
 public:
  PatternTemplate(const ScanGrid& grid, const OpticalConfig& optics, double margin_px = 4.0);

  // Template values for an emitter at `center_nm` (sample frame), row-major.
  void fill(double theta, double phi, const Eigen::Vector2d& center_nm, std::vector<double>& out) const;

  const ScanGrid& grid() const { return grid_; }
  const RadialIntensityTable& table() const { return table_; }

 private:
  ScanGrid grid_;
  RadialIntensityTable table_;
};

// Best non-negative (amplitude, background) for image ~ a * template + b in
// closed form, and the normalised SSE. Throws DegenerateTemplate when the
// template or the image is constant on the grid.
ResidualResult linear_residual(const std::vector<double>& model, const std::vector<double>& data);

ResidualResult pattern_residual(double theta, double phi, const Eigen::Vector2d& center_nm,
                                const ScanImage& image, const OpticalConfig& optics);

ResidualResult pattern_residual(double theta, double phi, const Eigen::Vector2d& center_nm,
                                const ScanImage& image, const PatternTemplate& model);

struct FitOptions {
  int n_starts = 12;
  std::uint64_t seed = 1;
  SimplexSettings simplex;
  double center_spread_px = 2.0;
  // Worker threads for independent starts; 0 picks hardware concurrency.
  unsigned threads = 0;
};

// Multi-start Nelder-Mead over (theta, phi, center). The result is folded to
// theta <= pi/2, phi in [0, pi); the pattern cannot separate phi from phi + pi.
OrientationFit fit_orientation(const ScanImage& image, const OpticalConfig& optics, const FitOptions& options);

// Folds an arbitrary axis direction into the canonical (theta, phi) range.
NVOrientation canonical_orientation(const Eigen::Vector3d& axis);

// Smallest angle between two axes under the pattern equivalences: sign flip of
// the axis and the phi -> phi + pi mirror.
double equivalent_axis_error(const NVOrientation& a, const NVOrientation& b);

// The four NV axes of a [111]-cut crystal: +z and three axes at arccos(-1/3)
// from it, the first at `crystal_azimuth`.
std::array<NVOrientation, 4> tetrahedral_axes(double crystal_azimuth);

struct TetrahedralMatch {
  int index = 0;
  NVOrientation ideal;
  NVOrientation unfolded;  // the member of the fitted equivalence class nearest the ideal axis
  double deviation = 0.0;  // rad
};

TetrahedralMatch match_tetrahedral(const NVOrientation& fitted, double crystal_azimuth);

}  // namespace nvmag
