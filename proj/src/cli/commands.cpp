#include "nvmag/cli/commands.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <map>
#include <numbers>
#include <optional>

#include "CLI11.hpp"
#include "json.hpp"
#include "nvmag/cli/config.hpp"
#include "nvmag/io.hpp"
#include "nvmag/odmr.hpp"
#include "nvmag/orient_fit.hpp"
#include "nvmag/pattern.hpp"
#include "nvmag/spin.hpp"
#include "nvmag/vector_recon.hpp"

#ifndef NVMAG_VERSION
#define NVMAG_VERSION "0.0.0"
#endif

namespace nvmag::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

double to_deg(double rad) { return rad / kDeg; }

double round_to(double value, int decimals) {
  const double scale = std::pow(10.0, decimals);
  return std::round(value * scale) / scale;
}

struct Globals {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out_dir;
};

struct Context {
  RunConfig config;
  std::ostream& out;
  std::ostream& err;
  std::optional<fs::path> out_dir;

  json stamp() const {
    return {{"tool", "nvmag-cli"}, {"version", NVMAG_VERSION}, {"config_hash", config.hash()}, {"seed", config.fit.seed}};
  }

  void emit(const std::string& name, json report) const {
    report["provenance"] = stamp();
    const std::string text = report.dump(2) + "\n";
    out << text;
    if (out_dir) write_file_atomic(*out_dir / (name + ".json"), text);
  }
};

Context make_context(const Globals& globals, std::ostream& out, std::ostream& err) {
  Context ctx{globals.config_path.empty() ? RunConfig{} : load_config(globals.config_path), out, err, std::nullopt};
  if (globals.seed) ctx.config.fit.seed = *globals.seed;
  if (!globals.out_dir.empty()) {
    std::error_code ec;
    fs::create_directories(globals.out_dir, ec);
    if (ec || !fs::is_directory(globals.out_dir)) {
      throw Error(ErrorCode::IoError, "cannot create output directory " + globals.out_dir);
    }
    ctx.out_dir = fs::path(globals.out_dir);
  }
  return ctx;
}

FitOptions fit_options(const RunConfig& config) {
  FitOptions options;
  options.n_starts = config.fit.n_starts;
  options.seed = config.fit.seed;
  options.simplex = config.fit.simplex;
  return options;
}

json orientation_json(const OrientationFit& fit) {
  return {
      {"theta_deg", round_to(to_deg(fit.theta), 4)},
      {"phi_deg", round_to(to_deg(fit.phi), 4)},
      {"mirror_phi_deg", round_to(to_deg(fit.mirror_phi), 4)},
      {"phi_identifiable", fit.phi_identifiable},
      {"center_nm", {fit.center_nm.x(), fit.center_nm.y()}},
      {"amplitude", fit.amplitude},
      {"background", fit.background},
      {"residual", fit.residual},
      {"converged", fit.converged},
      {"n_starts", fit.n_starts_used},
      {"n_starts_converged", fit.n_starts_converged},
      {"iterations", fit.iterations},
  };
}

json tetrahedral_json(const TetrahedralMatch& match, double azimuth_deg) {
  return {
      {"lattice", "111"},
      {"crystal_azimuth_deg", azimuth_deg},
      {"nearest_axis", match.index},
      {"ideal_deg", {round_to(to_deg(match.ideal.theta), 4), round_to(to_deg(match.ideal.phi), 4)}},
      {"unfolded_deg", {round_to(to_deg(match.unfolded.theta), 4), round_to(to_deg(match.unfolded.phi), 4)}},
      {"deviation_deg", round_to(to_deg(match.deviation), 4)},
  };
}

json odmr_json(const OdmrFit& fit, const FieldEstimate& field) {
  json triplets = json::array();
  for (const auto& t : fit.triplets) {
    triplets.push_back({{"center_MHz", t.center}, {"spacing_MHz", t.spacing}, {"linewidth_MHz", t.linewidth},
                        {"depths", t.depths}});
  }
  return {
      {"omega1_MHz", fit.pair.omega1},
      {"omega2_MHz", fit.pair.omega2},
      {"sigma1_MHz", fit.pair.sigma1},
      {"sigma2_MHz", fit.pair.sigma2},
      {"covariance_MHz2", fit.pair.covariance},
      {"field_G", field.magnitude},
      {"field_sigma_G", field.magnitude_sigma},
      {"alpha_candidates_deg", {to_deg(field.alpha_candidates[0]), to_deg(field.alpha_candidates[1])}},
      {"alpha_sigma_deg", to_deg(field.alpha_sigma)},
      {"triplets", triplets},
      {"baseline", fit.baseline},
      {"residual_rms", fit.residual_rms},
  };
}

// Two-group fit; when the groups cannot be separated, a spectrum that is well
// described by one triplet at D is reported as a zero-field spectrum.
OdmrFit fit_spectrum(const Spectrum& spectrum, const SpinParams& spin) {
  try {
    return fit_odmr_spectrum(spectrum);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::TripletsOverlap) throw;
    TripletFit single;
    try {
      single = fit_single_triplet(spectrum);
    } catch (const Error&) {
      throw e;
    }
    double depth = 0.0;
    for (double d : single.depths) depth = std::max(depth, std::abs(d));
    const bool at_d = std::abs(single.center - spin.zero_field_splitting) <= std::max(single.linewidth, 1.0);
    const bool middle_present = std::abs(single.depths[1]) >= 0.5 * depth;
    if (at_d && middle_present && depth > 0.0 && single.residual_rms <= 0.05 * depth) {
      std::ostringstream msg;
      msg << "a single dip group at " << single.center << " MHz; the field is too weak to split the branches";
      throw Error(ErrorCode::DegenerateField, msg.str());
    }
    throw;
  }
}

// --- simulate-pattern -------------------------------------------------------

struct SimulateArgs {
  double theta_deg = 0.0;
  double phi_deg = 0.0;
  std::string name = "pattern";
  bool noise = false;
  std::optional<double> peak_counts;
  double nv_x_nm = 0.0;
  double nv_y_nm = 0.0;
};

int cmd_simulate_pattern(const Context& ctx, const SimulateArgs& args) {
  const auto& cfg = ctx.config;
  const NVOrientation orientation = NVOrientation::from_degrees(args.theta_deg, args.phi_deg);
  const ScanGrid grid = ScanGrid::centered(cfg.pattern.width_px, cfg.pattern.height_px, cfg.pattern.pitch_nm);
  grid.validate();

  const double peak_counts = args.peak_counts.value_or(cfg.pattern.peak_counts);
  if (!(peak_counts >= 0.0)) throw Error(ErrorCode::InvalidArgument, "peak counts must be non-negative");
  const RadialIntensityTable table(cfg.optics, 2.0 * cfg.optics.wavelength_nm / cfg.optics.numerical_aperture + 1000.0);

  PatternParams params;
  params.amplitude = peak_counts / table.peak();
  params.background = cfg.pattern.background;
  params.nv_position = grid.center() + Eigen::Vector2d(args.nv_x_nm, args.nv_y_nm);
  if (args.noise) params.noise_seed = cfg.fit.seed;
  const ScanImage image = simulate_pattern(orientation, grid, cfg.optics, params);

  const fs::path dir = ctx.out_dir.value_or(fs::path("."));
  GraymapScaling scaling;
  const std::string pgm = scan_image_to_pgm(image, cfg.pattern.pgm_bits, scaling);
  write_file_atomic(dir / (args.name + ".csv"), scan_image_to_csv(image));
  write_file_atomic(dir / (args.name + ".pgm"), pgm);

  json meta = {
      {"orientation_deg", {{"theta", args.theta_deg}, {"phi", args.phi_deg}}},
      {"grid", {{"width_px", grid.width_px}, {"height_px", grid.height_px}, {"pitch_nm", grid.pitch_nm},
                {"origin_nm", {grid.origin_nm.x(), grid.origin_nm.y()}}}},
      {"nv_position_nm", {params.nv_position->x(), params.nv_position->y()}},
      {"amplitude", params.amplitude},
      {"peak_counts", peak_counts},
      {"background", params.background},
      {"poisson_noise", args.noise},
      {"pgm", {{"bits", cfg.pattern.pgm_bits}, {"min", scaling.min}, {"max", scaling.max}, {"max_value", scaling.max_value}}},
      {"files", {(dir / (args.name + ".csv")).string(), (dir / (args.name + ".pgm")).string()}},
  };
  meta["provenance"] = ctx.stamp();
  const std::string text = meta.dump(2) + "\n";
  write_file_atomic(dir / (args.name + ".json"), text);
  ctx.out << text;
  return kExitOk;
}

// --- fit-orientation --------------------------------------------------------

struct FitArgs {
  std::string image;
  std::string crystal;
  std::optional<double> crystal_azimuth_deg;
};

int cmd_fit_orientation(const Context& ctx, const FitArgs& args) {
  const ScanImage image = scan_image_from_csv(read_text_file(args.image));
  const OrientationFit fit = fit_orientation(image, ctx.config.optics, fit_options(ctx.config));
  json report = {{"command", "fit-orientation"}, {"input", args.image}, {"orientation", orientation_json(fit)}};
  if (!args.crystal.empty()) {
    const double azimuth = args.crystal_azimuth_deg.value_or(ctx.config.fit.crystal_azimuth_deg);
    const TetrahedralMatch match = match_tetrahedral(NVOrientation{fit.theta, fit.phi}, azimuth * kDeg);
    report["crystal"] = tetrahedral_json(match, azimuth);
  }
  ctx.emit(fs::path(args.image).stem().string() + "_fit", report);
  return kExitOk;
}

// --- odmr -------------------------------------------------------------------

struct OdmrArgs {
  std::string spectrum;
  std::optional<double> field_g;
  std::optional<double> alpha_deg;
  std::optional<double> noise_sigma;
  std::string write_spectrum;
};

int cmd_odmr(const Context& ctx, const OdmrArgs& args) {
  const auto& cfg = ctx.config;
  Spectrum spectrum;
  json source;
  if (!args.spectrum.empty()) {
    if (args.field_g || args.alpha_deg) throw Error(ErrorCode::InvalidArgument, "use either --spectrum or --field/--alpha");
    spectrum = spectrum_from_csv(read_text_file(args.spectrum));
    source = {{"spectrum", args.spectrum}};
  } else {
    if (!args.field_g || !args.alpha_deg) {
      throw Error(ErrorCode::InvalidArgument, "either --spectrum or both --field and --alpha are required");
    }
    if (!(*args.field_g >= 0.0) || !(*args.alpha_deg >= 0.0 && *args.alpha_deg <= 180.0)) {
      throw Error(ErrorCode::InvalidArgument, "--field must be non-negative and --alpha within [0, 180]");
    }
    const double alpha = *args.alpha_deg * kDeg;
    const Eigen::Vector3d field(*args.field_g * std::sin(alpha), 0.0, *args.field_g * std::cos(alpha));
    spectrum = simulate_odmr_spectrum(field, NVOrientation{}, cfg.spin, cfg.odmr.linewidth_mhz, cfg.odmr.contrast_depth,
                                      cfg.odmr.sweep);
    const double sigma = args.noise_sigma.value_or(cfg.odmr.noise_sigma);
    if (sigma > 0.0) spectrum = add_contrast_noise(spectrum, sigma, cfg.fit.seed);
    source = {{"simulated", {{"field_G", *args.field_g}, {"alpha_deg", *args.alpha_deg}, {"noise_sigma", sigma}}}};
    if (!args.write_spectrum.empty()) {
      const fs::path target = ctx.out_dir ? *ctx.out_dir / args.write_spectrum : fs::path(args.write_spectrum);
      write_file_atomic(target, spectrum_to_csv(spectrum));
    }
  }
  const OdmrFit fit = fit_spectrum(spectrum, cfg.spin);
  const FieldEstimate field = estimate_field(fit.pair, cfg.spin);
  json report = {{"command", "odmr"}, {"source", source}, {"result", odmr_json(fit, field)}};
  ctx.emit("odmr", report);
  return kExitOk;
}

// --- reconstruct ------------------------------------------------------------

struct NamedConstraint {
  std::string name;
  ConeConstraint cone;
};

double number_field(const json& object, const std::string& key, const std::string& where, bool required,
                    double fallback = 0.0) {
  const auto it = object.find(key);
  if (it == object.end()) {
    if (required) throw Error(ErrorCode::InvalidArgument, where + ": missing '" + key + "'");
    return fallback;
  }
  if (!it->is_number()) throw Error(ErrorCode::InvalidArgument, where + ": '" + key + "' must be a number");
  return it->get<double>();
}

std::vector<NamedConstraint> parse_constraints(const std::string& path) {
  json doc;
  try {
    doc = json::parse(read_text_file(path));
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::ParseError, path + ": " + e.what());
  }
  if (!doc.is_object() || !doc.contains("constraints") || !doc["constraints"].is_array()) {
    throw Error(ErrorCode::InvalidArgument, path + ": expected an object with a 'constraints' array");
  }
  for (const auto& [key, value] : doc.items()) {
    if (key != "constraints" && key != "expected" && key != "_comment") {
      throw Error(ErrorCode::InvalidArgument, path + ": unknown key '" + key + "'");
    }
  }
  std::vector<NamedConstraint> out;
  for (const auto& item : doc["constraints"]) {
    const std::string where = path + ": constraint " + std::to_string(out.size());
    if (!item.is_object()) throw Error(ErrorCode::InvalidArgument, where + " must be an object");
    for (const auto& [key, value] : item.items()) {
      static const std::vector<std::string> allowed{"name",          "axis_deg", "alpha_deg",    "alpha_sigma_deg",
                                                    "field_G",       "field_sigma_G", "_comment"};
      if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
        throw Error(ErrorCode::InvalidArgument, where + ": unknown key '" + key + "'");
      }
    }
    NamedConstraint c;
    c.name = item.value("name", "NV" + std::to_string(out.size() + 1));
    if (!item.contains("axis_deg") || !item["axis_deg"].is_object()) {
      throw Error(ErrorCode::InvalidArgument, where + ": 'axis_deg' must be an object with theta and phi");
    }
    const json& axis = item["axis_deg"];
    c.cone.axis = NVOrientation::from_degrees(number_field(axis, "theta", where, true), number_field(axis, "phi", where, true));
    c.cone.alpha = number_field(item, "alpha_deg", where, true) * kDeg;
    c.cone.alpha_sigma = number_field(item, "alpha_sigma_deg", where, false) * kDeg;
    c.cone.field = number_field(item, "field_G", where, false);
    c.cone.field_sigma = number_field(item, "field_sigma_G", where, false);
    c.cone.validate();
    out.push_back(c);
  }
  return out;
}

json vector_json(const Eigen::Vector3d& v) { return {v.x(), v.y(), v.z()}; }

json reconstruction_json(const VectorFieldResult& r, const std::vector<std::string>& names) {
  json branches = json::array();
  for (std::size_t i = 0; i < r.branch_choice.size(); ++i) {
    branches.push_back({{"name", names[i]}, {"branch", r.branch_choice[i] ? "pi-alpha" : "alpha"},
                        {"selected_alpha_deg", to_deg(r.selected_alpha[i])}});
  }
  json report = {
      {"theta_B_deg", round_to(to_deg(r.theta), 2)},
      {"phi_B_deg", round_to(to_deg(r.phi), 2)},
      {"mirror_theta_B_deg", round_to(to_deg(r.mirror_theta), 2)},
      {"mirror_phi_B_deg", round_to(to_deg(r.mirror_phi), 2)},
      {"direction", vector_json(r.direction)},
      {"residual", r.residual},
      {"field_mean_G", r.magnitude_mean},
      {"field_std_G", r.magnitude_std},
      {"branches", branches},
  };
  if (r.direction_sigma) report["direction_sigma_deg"] = to_deg(*r.direction_sigma);
  if (r.triangle) {
    json vertices = json::array();
    for (const auto& p : r.triangle->pairs) {
      json v = {{"cones", {names[p.first], names[p.second]}}, {"intersects", p.intersects}};
      if (p.intersects) {
        double theta = std::acos(std::clamp(p.vertex.z(), -1.0, 1.0));
        double phi = std::atan2(p.vertex.y(), p.vertex.x());
        if (phi < 0.0) phi += 2.0 * std::numbers::pi;
        v["vertex_deg"] = {round_to(to_deg(theta), 2), round_to(to_deg(phi), 2)};
      }
      vertices.push_back(v);
    }
    report["triangle"] = {{"vertices", vertices}, {"spread_deg", to_deg(r.triangle->spread)}};
  }
  return report;
}

int cmd_reconstruct(const Context& ctx, const std::string& path) {
  const auto named = parse_constraints(path);
  if (named.size() < 3) {
    throw Error(ErrorCode::InvalidArgument, "reconstruction needs at least three constraints, got " +
                                                std::to_string(named.size()));
  }
  std::vector<ConeConstraint> cones;
  std::vector<std::string> names;
  for (const auto& c : named) {
    cones.push_back(c.cone);
    names.push_back(c.name);
  }
  const VectorFieldResult result = solve_direction(cones, ctx.config.recon_settings());
  json report = {{"command", "reconstruct"}, {"input", path}, {"result", reconstruction_json(result, names)}};
  ctx.emit("reconstruct", report);
  return kExitOk;
}

// --- pipeline ---------------------------------------------------------------

struct PipelineArgs {
  std::string scans;
  std::string spectra;
  std::string crystal;
};

std::map<std::string, fs::path> csv_files(const std::string& dir) {
  std::error_code ec;
  if (!fs::is_directory(dir, ec)) throw Error(ErrorCode::InvalidArgument, "not a directory: " + dir);
  std::map<std::string, fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".csv") files[entry.path().stem().string()] = entry.path();
  }
  return files;
}

struct PipelineItem {
  std::string name;
  NVOrientation axis;
  NVOrientation mirror;
  bool fixed_axis = false;  // crystal labelling resolved the phi/phi+pi ambiguity
  FieldEstimate field;
};

int cmd_pipeline(const Context& ctx, const PipelineArgs& args) {
  const auto& cfg = ctx.config;
  const auto scans = csv_files(args.scans);
  const auto spectra = csv_files(args.spectra);
  if (scans.empty() && spectra.empty()) throw Error(ErrorCode::InvalidArgument, "no CSV files in the scan or spectra directory");

  json per_file = json::array();
  std::vector<PipelineItem> items;
  const double azimuth = cfg.fit.crystal_azimuth_deg;
  for (const auto& [name, scan_path] : scans) {
    json entry = {{"name", name}, {"scan", scan_path.string()}};
    try {
      const auto spectrum_it = spectra.find(name);
      if (spectrum_it == spectra.end()) throw Error(ErrorCode::IoError, "no spectrum named " + name + ".csv");
      entry["spectrum"] = spectrum_it->second.string();
      const ScanImage image = scan_image_from_csv(read_text_file(scan_path));
      const OrientationFit fit = fit_orientation(image, cfg.optics, fit_options(cfg));
      entry["orientation"] = orientation_json(fit);
      PipelineItem item;
      item.name = name;
      item.axis = NVOrientation{fit.theta, fit.phi};
      item.mirror = NVOrientation::make(fit.theta, fit.mirror_phi);
      if (!args.crystal.empty()) {
        const TetrahedralMatch match = match_tetrahedral(item.axis, azimuth * kDeg);
        entry["crystal"] = tetrahedral_json(match, azimuth);
        item.axis = match.unfolded;
        item.fixed_axis = true;
      } else if (!fit.phi_identifiable) {
        item.fixed_axis = true;
      }
      const Spectrum spectrum = spectrum_from_csv(read_text_file(spectrum_it->second));
      const OdmrFit odmr = fit_spectrum(spectrum, cfg.spin);
      item.field = estimate_field(odmr.pair, cfg.spin);
      entry["odmr"] = odmr_json(odmr, item.field);
      entry["status"] = "ok";
      items.push_back(item);
    } catch (const Error& e) {
      entry["status"] = "error";
      entry["error"] = {{"code", std::string(to_string(e.code()))}, {"message", e.what()}};
    }
    per_file.push_back(entry);
  }
  for (const auto& [name, path] : spectra) {
    if (!scans.count(name)) {
      per_file.push_back({{"name", name},
                          {"spectrum", path.string()},
                          {"status", "error"},
                          {"error", {{"code", "IoError"}, {"message", "no scan named " + name + ".csv"}}}});
    }
  }

  json report = {{"command", "pipeline"}, {"scans", args.scans}, {"spectra", args.spectra}, {"files", per_file}};
  const auto settings = cfg.recon_settings();
  if (items.size() > static_cast<std::size_t>(settings.max_constraints)) items.resize(settings.max_constraints);
  if (items.size() < 3) {
    report["result"] = nullptr;
    report["error"] = {{"code", "NoSolution"},
                       {"message", "only " + std::to_string(items.size()) + " usable NV records; three are required"}};
    ctx.emit("pipeline", report);
    return kExitNumerical;
  }

  // Without crystal labels each fitted axis may be its phi + pi partner; the
  // mirror of the first free axis is fixed since flipping all of them only
  // mirrors the solution through the z axis.
  std::vector<std::size_t> free;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (!items[i].fixed_axis) free.push_back(i);
  }
  const std::size_t choices = free.empty() ? 1 : std::size_t{1} << (free.size() - 1);
  auto cones_for = [&](std::size_t mask) {
    std::vector<ConeConstraint> cones;
    for (std::size_t i = 0; i < items.size(); ++i) {
      const auto pos = std::find(free.begin(), free.end(), i);
      bool mirrored = false;
      if (pos != free.end() && pos != free.begin()) mirrored = (mask >> (pos - free.begin() - 1)) & 1U;
      const auto& it = items[i];
      cones.push_back({mirrored ? it.mirror : it.axis, it.field.alpha_candidates[0], it.field.alpha_sigma,
                       it.field.magnitude, it.field.magnitude_sigma});
    }
    return cones;
  };

  ReconSettings search = settings;
  search.bootstrap_samples = 0;
  std::optional<std::size_t> best_mask;
  double best_residual = std::numeric_limits<double>::infinity();
  json search_log = json::array();
  std::optional<Error> last_error;
  for (std::size_t mask = 0; mask < choices; ++mask) {
    try {
      const VectorFieldResult r = solve_direction(cones_for(mask), search);
      search_log.push_back({{"mirror_mask", mask}, {"residual", r.residual}});
      if (r.residual < best_residual) {
        best_residual = r.residual;
        best_mask = mask;
      }
    } catch (const Error& e) {
      search_log.push_back({{"mirror_mask", mask}, {"error", e.what()}});
      last_error = e;
    }
  }
  if (!best_mask) {
    report["result"] = nullptr;
    report["error"] = {{"code", std::string(to_string(last_error->code()))}, {"message", last_error->what()}};
    ctx.emit("pipeline", report);
    return kExitNumerical;
  }

  const auto cones = cones_for(*best_mask);
  std::vector<std::string> names;
  json used = json::array();
  for (std::size_t i = 0; i < items.size(); ++i) {
    names.push_back(items[i].name);
    used.push_back({{"name", items[i].name},
                    {"axis_deg", {round_to(to_deg(cones[i].axis.theta), 4), round_to(to_deg(cones[i].axis.phi), 4)}},
                    {"alpha_deg", to_deg(cones[i].alpha)},
                    {"alpha_sigma_deg", to_deg(cones[i].alpha_sigma)},
                    {"field_G", cones[i].field},
                    {"field_sigma_G", cones[i].field_sigma}});
  }
  const VectorFieldResult result = solve_direction(cones, settings);
  report["constraints"] = used;
  report["axis_search"] = search_log;
  report["result"] = reconstruction_json(result, names);
  if (args.crystal.empty()) {
    // The in-plane mirror of every axis at once gives an equally good fit.
    const Eigen::Vector3d alt(-result.direction.x(), -result.direction.y(), result.direction.z());
    report["result"]["axis_mirror_direction"] = vector_json(alt);
  }
  ctx.emit("pipeline", report);
  return kExitOk;
}

}  // namespace

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::IoError:
    case ErrorCode::ParseError:
      return kExitIo;
    default:
      return is_numerical(code) ? kExitNumerical : kExitUsage;
  }
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"NV-center vector magnetometry: focal-field patterns, orientation fits, ODMR inversion and field reconstruction",
               "nvmag-cli"};
  app.require_subcommand(1);
  app.set_version_flag("--version", NVMAG_VERSION);

  Globals globals;
  app.add_option("--config", globals.config_path, "JSON configuration file");
  app.add_option("--seed", globals.seed, "Seed for multi-start fitting, noise and bootstrap");
  app.add_option("--out", globals.out_dir, "Directory for output files");

  SimulateArgs sim;
  auto* simulate = app.add_subcommand("simulate-pattern", "Write a synthetic confocal scan (CSV, PGM, metadata JSON)");
  simulate->add_option("--theta", sim.theta_deg, "NV polar angle, degrees")->required();
  simulate->add_option("--phi", sim.phi_deg, "NV azimuth, degrees")->required();
  simulate->add_option("--name", sim.name, "Base name of the output files");
  simulate->add_flag("--noise", sim.noise, "Apply Poisson shot noise seeded by --seed");
  simulate->add_option("--peak-counts", sim.peak_counts, "Override pattern.peak_counts");
  simulate->add_option("--nv-x", sim.nv_x_nm, "Emitter offset from the grid centre, nm");
  simulate->add_option("--nv-y", sim.nv_y_nm, "Emitter offset from the grid centre, nm");

  FitArgs fit;
  auto* fit_cmd = app.add_subcommand("fit-orientation", "Fit the NV axis orientation to a scan CSV");
  fit_cmd->add_option("image", fit.image, "Scan CSV")->required();
  fit_cmd->add_option("--crystal", fit.crystal, "Label against the NV axes of a crystal cut")->check(CLI::IsMember({"111"}));
  fit_cmd->add_option("--crystal-azimuth", fit.crystal_azimuth_deg, "In-plane rotation of the crystal, degrees");

  OdmrArgs odmr;
  auto* odmr_cmd = app.add_subcommand("odmr", "Fit an ODMR spectrum and invert it to field magnitude and cone angle");
  odmr_cmd->add_option("--spectrum", odmr.spectrum, "Spectrum CSV");
  odmr_cmd->add_option("--field", odmr.field_g, "Simulate: field magnitude, G");
  odmr_cmd->add_option("--alpha", odmr.alpha_deg, "Simulate: angle between field and NV axis, degrees");
  odmr_cmd->add_option("--noise-sigma", odmr.noise_sigma, "Simulate: contrast noise standard deviation");
  odmr_cmd->add_option("--write-spectrum", odmr.write_spectrum, "Simulate: also write the spectrum CSV");

  std::string constraints_path;
  auto* recon_cmd = app.add_subcommand("reconstruct", "Reconstruct the field direction from cone constraints");
  recon_cmd->add_option("constraints", constraints_path, "Constraints JSON")->required();

  PipelineArgs pipe;
  auto* pipe_cmd = app.add_subcommand("pipeline", "Scans and spectra matched by file name to a field vector");
  pipe_cmd->add_option("--scans", pipe.scans, "Directory of scan CSV files")->required();
  pipe_cmd->add_option("--spectra", pipe.spectra, "Directory of spectrum CSV files")->required();
  pipe_cmd->add_option("--crystal", pipe.crystal, "Resolve axis mirrors against a crystal cut")->check(CLI::IsMember({"111"}));

  for (auto* sub : {simulate, fit_cmd, odmr_cmd, recon_cmd, pipe_cmd}) sub->fallthrough();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::Success& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kExitUsage;
  }

  try {
    const Context ctx = make_context(globals, out, err);
    if (simulate->parsed()) return cmd_simulate_pattern(ctx, sim);
    if (fit_cmd->parsed()) return cmd_fit_orientation(ctx, fit);
    if (odmr_cmd->parsed()) return cmd_odmr(ctx, odmr);
    if (recon_cmd->parsed()) return cmd_reconstruct(ctx, constraints_path);
    if (pipe_cmd->parsed()) return cmd_pipeline(ctx, pipe);
  } catch (const Error& e) {
    err << "nvmag-cli: " << e.what() << "\n";
    return exit_code_for(e.code());
  } catch (const fs::filesystem_error& e) {
    err << "nvmag-cli: IoError: " << e.what() << "\n";
    return kExitIo;
  } catch (const std::exception& e) {
    err << "nvmag-cli: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}

}  // namespace nvmag::cli
