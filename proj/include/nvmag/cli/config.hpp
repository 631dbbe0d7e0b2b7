#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "json.hpp"
#include "nvmag/focal_field.hpp"
#include "nvmag/nelder_mead.hpp"
#include "nvmag/odmr.hpp"
#include "nvmag/spin.hpp"
#include "nvmag/vector_recon.hpp"

namespace nvmag::cli {

struct FitSection {
  int n_starts = 12;
  std::uint64_t seed = 1;
  double crystal_azimuth_deg = 0.0;
  SimplexSettings simplex;
};

struct PatternSection {
  int width_px = 31;
  int height_px = 31;
  double pitch_nm = 50.0;
  double peak_counts = 1e4;  // amplitude is scaled so the brightest ring pixel reaches this
  double background = 100.0;
  int pgm_bits = 16;
};

struct OdmrSection {
  double linewidth_mhz = 1.0;
  double contrast_depth = 0.02;
  Sweep sweep;
  double noise_sigma = 0.0;
};

struct ReconSection {
  double condition_bound = 1e8;
  double residual_gate = 1e-2;
  int bootstrap_samples = 200;
};

// Effective configuration; every section is optional in the file and falls
// back to the defaults above. Unknown keys are rejected; "_comment" is allowed
// anywhere.
struct RunConfig {
  OpticalConfig optics;
  SpinParams spin;
  FitSection fit;
  PatternSection pattern;
  OdmrSection odmr;
  ReconSection recon;

  void validate() const;
  nlohmann::json to_json() const;
  // FNV-1a 64 of the canonical JSON dump of the effective configuration.
  std::string hash() const;
  ReconSettings recon_settings() const;
};

RunConfig parse_config(const nlohmann::json& document);
RunConfig load_config(const std::filesystem::path& path);

}  // namespace nvmag::cli
