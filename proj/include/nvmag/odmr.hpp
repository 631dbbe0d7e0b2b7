#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include <Eigen/Core>

#include "nvmag/nelder_mead.hpp"
#include "nvmag/pattern.hpp"
#include "nvmag/spin.hpp"

namespace nvmag {

struct Spectrum {
  std::vector<double> frequencies;  // MHz, strictly increasing
  std::vector<double> contrast;     // 1 = no dip
  double linewidth = 0.0;           // MHz FWHM used for synthesis, 0 if unknown

  void validate() const;
};

struct Sweep {
  double start = 2700.0;  // MHz
  double stop = 3040.0;   // MHz
  int points = 3401;

  void validate() const;
};

// One ms = 0 -> ms = +-1 line with the nuclear projection preserved.
struct OdmrTransition {
  double frequency = 0.0;  // MHz
  int electron_target = 0;  // +1 or -1
  int nuclear = 0;          // mI
};

// Components of a lab-frame field in the NV frame: z along the axis, x along
// the projection of lab +z (lab +x when the axis is vertical).
Eigen::Vector3d field_in_nv_frame(const Eigen::Vector3d& field_lab, const NVOrientation& orientation);

// The six allowed lines from the full electron-nuclear Hamiltonian, sorted by
// frequency. Eigenstates are labelled by their dominant |ms, mI> component.
std::array<OdmrTransition, 6> allowed_transitions(const Eigen::Vector3d& field_nv, const SpinParams& params);

// contrast(f) = 1 - sum_i depth * L(f; f_i, linewidth), L a unit-height Lorentzian
// with FWHM `linewidth`.
Spectrum simulate_odmr_spectrum(const Eigen::Vector3d& field_lab, const NVOrientation& orientation,
                                const SpinParams& params, double linewidth, double contrast_depth,
                                const Sweep& sweep);

// Adds independent Gaussian noise of standard deviation `sigma` to the contrast.
Spectrum add_contrast_noise(Spectrum spectrum, double sigma, std::uint64_t seed);

struct TripletFit {
  double center = 0.0;
  double spacing = 0.0;
  double linewidth = 0.0;
  std::array<double, 3> depths{};
  double residual_rms = 0.0;  // only set by fit_single_triplet
};

struct OdmrFit {
  TransitionPair pair;                 // middle-line centres with covariance
  std::array<TripletFit, 2> triplets;  // low-frequency group first
  std::array<double, 6> centers{};     // all dip centres, ascending within each group
  double baseline = 1.0;
  double residual_rms = 0.0;
  int points_used = 0;
  int evaluations = 0;
};

// Fits two three-Lorentzian groups (one linewidth and one spacing per group,
// free depths solved linearly) and returns the middle-dip centres.
// Errors: FitFailed (no dips, non-convergence), TripletsOverlap (groups not
// separable: centres closer than 3 linewidths or outer lines interleaved).
OdmrFit fit_odmr_spectrum(const Spectrum& spectrum, const SimplexSettings& settings = {});

// A single three-Lorentzian group over the whole spectrum; used to read a
// zero-field spectrum where both branches coincide.
TripletFit fit_single_triplet(const Spectrum& spectrum, const SimplexSettings& settings = {});

}  // namespace nvmag
