#include "nvmag/cli/config.hpp"

#include <cstdio>
#include <set>
#include <sstream>

#include "nvmag/errors.hpp"
#include "nvmag/io.hpp"

namespace nvmag::cli {

using nlohmann::json;

namespace {

// Reads the keys of one object, rejecting anything not consumed.
class SectionReader {
 public:
  SectionReader(const json& object, std::string path) : object_(object), path_(std::move(path)) {
    if (!object_.is_object()) throw Error(ErrorCode::ConfigError, "'" + path_ + "' must be an object");
  }

  template <typename T>
  void read(const std::string& key, T& target) {
    known_.insert(key);
    const auto it = object_.find(key);
    if (it == object_.end()) return;
    try {
      if constexpr (std::is_integral_v<T>) {
        if (!it->is_number_integer()) throw Error(ErrorCode::ConfigError, "");
      } else if constexpr (std::is_floating_point_v<T>) {
        if (!it->is_number()) throw Error(ErrorCode::ConfigError, "");
      }
      target = it->get<T>();
    } catch (const std::exception&) {
      throw Error(ErrorCode::ConfigError, "key '" + qualified(key) + "' has the wrong type");
    }
  }

  const json* child(const std::string& key) {
    known_.insert(key);
    const auto it = object_.find(key);
    return it == object_.end() ? nullptr : &*it;
  }

  std::string qualified(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  void finish() const {
    for (const auto& [key, value] : object_.items()) {
      if (key == "_comment") continue;
      if (!known_.count(key)) throw Error(ErrorCode::ConfigError, "unknown key '" + qualified(key) + "'");
    }
  }

 private:
  const json& object_;
  std::string path_;
  std::set<std::string> known_;
};

}  // namespace

void RunConfig::validate() const {
  try {
    optics.validate();
    spin.validate();
    fit.simplex.validate();
    odmr.sweep.validate();
  } catch (const Error& e) {
    throw Error(ErrorCode::ConfigError, e.what());
  }
  if (fit.n_starts < 1) throw Error(ErrorCode::ConfigError, "fit.n_starts must be at least 1");
  if (pattern.width_px < 1 || pattern.height_px < 1 || !(pattern.pitch_nm > 0.0)) {
    throw Error(ErrorCode::ConfigError, "pattern grid must have positive size and pitch");
  }
  if (!(pattern.peak_counts >= 0.0) || !(pattern.background >= 0.0)) {
    throw Error(ErrorCode::ConfigError, "pattern.peak_counts and pattern.background must be non-negative");
  }
  if (pattern.pgm_bits != 8 && pattern.pgm_bits != 16) throw Error(ErrorCode::ConfigError, "pattern.pgm_bits must be 8 or 16");
  if (!(odmr.linewidth_mhz > 0.0)) throw Error(ErrorCode::ConfigError, "odmr.linewidth_MHz must be positive");
  if (!(odmr.contrast_depth > 0.0 && odmr.contrast_depth < 1.0)) {
    throw Error(ErrorCode::ConfigError, "odmr.contrast_depth must lie in (0, 1)");
  }
  if (!(odmr.noise_sigma >= 0.0)) throw Error(ErrorCode::ConfigError, "odmr.noise_sigma must be non-negative");
  if (!(recon.condition_bound > 1.0) || !(recon.residual_gate > 0.0) || recon.bootstrap_samples < 0) {
    throw Error(ErrorCode::ConfigError, "recon settings out of range");
  }
}

json RunConfig::to_json() const {
  return {
      {"optics",
       {{"wavelength_nm", optics.wavelength_nm},
        {"numerical_aperture", optics.numerical_aperture},
        {"immersion_index", optics.immersion_index},
        {"pupil_amplitude", optics.pupil_amplitude},
        {"quadrature_nodes", optics.quadrature_nodes},
        {"convergence_tolerance", optics.convergence_tolerance}}},
      {"spin",
       {{"D_MHz", spin.zero_field_splitting},
        {"gamma_e_MHz_per_G", spin.gamma_e},
        {"A_par_MHz", spin.hyperfine_parallel},
        {"A_perp_MHz", spin.hyperfine_perpendicular},
        {"Q_MHz", spin.quadrupole},
        {"gamma_n_MHz_per_G", spin.gamma_n}}},
      {"fit",
       {{"n_starts", fit.n_starts},
        {"seed", fit.seed},
        {"crystal_azimuth_deg", fit.crystal_azimuth_deg},
        {"simplex",
         {{"reflection", fit.simplex.reflection},
          {"expansion", fit.simplex.expansion},
          {"contraction", fit.simplex.contraction},
          {"shrink", fit.simplex.shrink},
          {"max_iterations", fit.simplex.max_iterations},
          {"x_tolerance", fit.simplex.x_tolerance},
          {"f_tolerance", fit.simplex.f_tolerance}}}}},
      {"pattern",
       {{"width_px", pattern.width_px},
        {"height_px", pattern.height_px},
        {"pitch_nm", pattern.pitch_nm},
        {"peak_counts", pattern.peak_counts},
        {"background", pattern.background},
        {"pgm_bits", pattern.pgm_bits}}},
      {"odmr",
       {{"linewidth_MHz", odmr.linewidth_mhz},
        {"contrast_depth", odmr.contrast_depth},
        {"sweep_start_MHz", odmr.sweep.start},
        {"sweep_stop_MHz", odmr.sweep.stop},
        {"sweep_points", odmr.sweep.points},
        {"noise_sigma", odmr.noise_sigma}}},
      {"recon",
       {{"condition_bound", recon.condition_bound},
        {"residual_gate", recon.residual_gate},
        {"bootstrap_samples", recon.bootstrap_samples}}},
  };
}

std::string RunConfig::hash() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : to_json().dump()) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buffer[17];
  std::snprintf(buffer, sizeof buffer, "%016llx", static_cast<unsigned long long>(h));
  return buffer;
}

ReconSettings RunConfig::recon_settings() const {
  ReconSettings settings;
  settings.condition_bound = recon.condition_bound;
  settings.residual_gate = recon.residual_gate;
  settings.bootstrap_samples = recon.bootstrap_samples;
  settings.seed = fit.seed;
  return settings;
}

RunConfig parse_config(const json& document) {
  RunConfig config;
  SectionReader root(document, "");
  if (const json* node = root.child("optics")) {
    SectionReader s(*node, "optics");
    s.read("wavelength_nm", config.optics.wavelength_nm);
    s.read("numerical_aperture", config.optics.numerical_aperture);
    s.read("immersion_index", config.optics.immersion_index);
    s.read("pupil_amplitude", config.optics.pupil_amplitude);
    s.read("quadrature_nodes", config.optics.quadrature_nodes);
    s.read("convergence_tolerance", config.optics.convergence_tolerance);
    s.finish();
  }
  if (const json* node = root.child("spin")) {
    SectionReader s(*node, "spin");
    s.read("D_MHz", config.spin.zero_field_splitting);
    s.read("gamma_e_MHz_per_G", config.spin.gamma_e);
    s.read("A_par_MHz", config.spin.hyperfine_parallel);
    s.read("A_perp_MHz", config.spin.hyperfine_perpendicular);
    s.read("Q_MHz", config.spin.quadrupole);
    s.read("gamma_n_MHz_per_G", config.spin.gamma_n);
    s.finish();
  }
  if (const json* node = root.child("fit")) {
    SectionReader s(*node, "fit");
    s.read("n_starts", config.fit.n_starts);
    s.read("seed", config.fit.seed);
    s.read("crystal_azimuth_deg", config.fit.crystal_azimuth_deg);
    if (const json* simplex = s.child("simplex")) {
      SectionReader m(*simplex, "fit.simplex");
      m.read("reflection", config.fit.simplex.reflection);
      m.read("expansion", config.fit.simplex.expansion);
      m.read("contraction", config.fit.simplex.contraction);
      m.read("shrink", config.fit.simplex.shrink);
      m.read("max_iterations", config.fit.simplex.max_iterations);
      m.read("x_tolerance", config.fit.simplex.x_tolerance);
      m.read("f_tolerance", config.fit.simplex.f_tolerance);
      m.finish();
    }
    s.finish();
  }
  if (const json* node = root.child("pattern")) {
    SectionReader s(*node, "pattern");
    s.read("width_px", config.pattern.width_px);
    s.read("height_px", config.pattern.height_px);
    s.read("pitch_nm", config.pattern.pitch_nm);
    s.read("peak_counts", config.pattern.peak_counts);
    s.read("background", config.pattern.background);
    s.read("pgm_bits", config.pattern.pgm_bits);
    s.finish();
  }
  if (const json* node = root.child("odmr")) {
    SectionReader s(*node, "odmr");
    s.read("linewidth_MHz", config.odmr.linewidth_mhz);
    s.read("contrast_depth", config.odmr.contrast_depth);
    s.read("sweep_start_MHz", config.odmr.sweep.start);
    s.read("sweep_stop_MHz", config.odmr.sweep.stop);
    s.read("sweep_points", config.odmr.sweep.points);
    s.read("noise_sigma", config.odmr.noise_sigma);
    s.finish();
  }
  if (const json* node = root.child("recon")) {
    SectionReader s(*node, "recon");
    s.read("condition_bound", config.recon.condition_bound);
    s.read("residual_gate", config.recon.residual_gate);
    s.read("bootstrap_samples", config.recon.bootstrap_samples);
    s.finish();
  }
  root.finish();
  config.validate();
  return config;
}

RunConfig load_config(const std::filesystem::path& path) {
  const std::string text = read_text_file(path);
  json document;
  try {
    document = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::ConfigError, path.string() + ": " + e.what());
  }
  return parse_config(document);
}

}  // namespace nvmag::cli
