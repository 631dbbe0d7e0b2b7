#include "nvmag/orient_fit.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <limits>
#include <numbers>
#include <random>
#include <thread>

#include <Eigen/Geometry>

#include "nvmag/errors.hpp"

namespace nvmag {

namespace {

constexpr double kPi = std::numbers::pi;

double angle_between(const Eigen::Vector3d& a, const Eigen::Vector3d& b) {
  // atan2 form stays accurate for nearly parallel vectors
  return std::atan2(a.cross(b).norm(), a.dot(b));
}

Eigen::Vector3d raw_axis(double theta, double phi) {
  const double s = std::sin(theta);
  return {s * std::cos(phi), s * std::sin(phi), std::cos(theta)};
}

Eigen::Vector2d intensity_centroid(const ScanImage& image) {
  const double floor = *std::min_element(image.values.begin(), image.values.end());
  double total = 0.0;
  Eigen::Vector2d sum = Eigen::Vector2d::Zero();
  for (int row = 0; row < image.grid.height_px; ++row) {
    for (int col = 0; col < image.grid.width_px; ++col) {
      const double w = image.at(col, row) - floor;
      total += w;
      sum += w * image.grid.position(col, row);
    }
  }
  return total > 0.0 ? Eigen::Vector2d(sum / total) : image.grid.center();
}

}  // namespace

PatternTemplate::PatternTemplate(const ScanGrid& grid, const OpticalConfig& optics, double margin_px)
    : grid_(grid),
      table_(optics,
             grid.pitch_nm * (std::hypot(grid.width_px - 1, grid.height_px - 1) + margin_px),
             std::min(1.0, grid.pitch_nm / 8.0)) {
  grid_.validate();
}

void PatternTemplate::fill(double theta, double phi, const Eigen::Vector2d& center_nm,
                           std::vector<double>& out) const {
  out.resize(grid_.pixel_count());
  const NVOrientation orientation{theta, phi};
  std::size_t index = 0;
  for (int row = 0; row < grid_.height_px; ++row) {
    for (int col = 0; col < grid_.width_px; ++col, ++index) {
      const Eigen::Vector2d offset = grid_.position(col, row) - center_nm;
      const double rho = offset.norm();
      out[index] = rho == 0.0 ? 0.0 : table_(rho) * orientation_factor(orientation, offset);
    }
  }
}

ResidualResult linear_residual(const std::vector<double>& model, const std::vector<double>& data) {
  if (model.size() != data.size() || data.empty()) {
    throw Error(ErrorCode::InvalidArgument, "model and data sizes differ");
  }
  const auto n = static_cast<double>(data.size());
  double mean_t = 0.0;
  double mean_y = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    mean_t += model[i];
    mean_y += data[i];
  }
  mean_t /= n;
  mean_y /= n;
  double stt = 0.0;
  double sty = 0.0;
  double syy = 0.0;
  double raw_tt = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const double dt = model[i] - mean_t;
    const double dy = data[i] - mean_y;
    stt += dt * dt;
    sty += dt * dy;
    syy += dy * dy;
    raw_tt += model[i] * model[i];
  }
  if (!(stt > 1e-14 * raw_tt) || raw_tt == 0.0) {
    throw Error(ErrorCode::DegenerateTemplate, "template is constant on the scan grid");
  }
  if (!(syy > 0.0)) throw Error(ErrorCode::DegenerateTemplate, "image is constant, residual undefined");

  double amplitude = std::max(0.0, sty / stt);
  double background = mean_y - amplitude * mean_t;
  if (background < 0.0) {
    background = 0.0;
    double raw_ty = 0.0;
    for (std::size_t i = 0; i < data.size(); ++i) raw_ty += model[i] * data[i];
    amplitude = std::max(0.0, raw_ty / raw_tt);
  }
  double sse = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const double r = data[i] - amplitude * model[i] - background;
    sse += r * r;
  }
  return {sse / syy, amplitude, background};
}

ResidualResult pattern_residual(double theta, double phi, const Eigen::Vector2d& center_nm,
                                const ScanImage& image, const PatternTemplate& model) {
  std::vector<double> values;
  model.fill(theta, phi, center_nm, values);
  return linear_residual(values, image.values);
}

ResidualResult pattern_residual(double theta, double phi, const Eigen::Vector2d& center_nm,
                                const ScanImage& image, const OpticalConfig& optics) {
  image.validate();
  return pattern_residual(theta, phi, center_nm, image, PatternTemplate(image.grid, optics));
}

NVOrientation canonical_orientation(const Eigen::Vector3d& axis) {
  Eigen::Vector3d unit = axis.normalized();
  if (unit.z() < 0.0) unit = -unit;
  const double theta = std::acos(std::clamp(unit.z(), -1.0, 1.0));
  double phi = std::atan2(unit.y(), unit.x());
  if (phi < 0.0) phi += 2.0 * kPi;
  if (phi >= kPi) phi -= kPi;
  if (phi >= kPi || phi < 0.0) phi = 0.0;
  return {theta, phi};
}

double equivalent_axis_error(const NVOrientation& a, const NVOrientation& b) {
  const Eigen::Vector3d va = a.axis();
  const Eigen::Vector3d vb = raw_axis(b.theta, b.phi);
  const Eigen::Vector3d vb_mirror = raw_axis(b.theta, b.phi + kPi);
  return std::min({angle_between(va, vb), angle_between(va, -vb), angle_between(va, vb_mirror),
                   angle_between(va, -vb_mirror)});
}

OrientationFit fit_orientation(const ScanImage& image, const OpticalConfig& optics, const FitOptions& options) {
  image.validate();
  optics.validate();
  options.simplex.validate();
  if (options.n_starts < 1) throw Error(ErrorCode::InvalidArgument, "n_starts must be at least 1");

  const ScanGrid& grid = image.grid;
  const PatternTemplate model(grid, optics);
  const Eigen::Vector2d centroid = intensity_centroid(image);

  // Draw every start up front so the result does not depend on scheduling.
  std::mt19937_64 engine(options.seed);
  std::uniform_real_distribution<double> theta_dist(0.0, kPi / 2.0);
  std::uniform_real_distribution<double> phi_dist(0.0, kPi);
  std::uniform_real_distribution<double> shift_dist(-options.center_spread_px, options.center_spread_px);
  std::vector<Eigen::VectorXd> starts;
  for (int i = 0; i < options.n_starts; ++i) {
    Eigen::VectorXd x(4);
    x(0) = theta_dist(engine);
    x(1) = phi_dist(engine);
    x(2) = (centroid.x() - grid.center().x()) / grid.pitch_nm + shift_dist(engine);
    x(3) = (centroid.y() - grid.center().y()) / grid.pitch_nm + shift_dist(engine);
    starts.push_back(x);
  }

  // Center is measured in pixels from the grid centre so all four parameters
  // have comparable scale for the simplex.
  auto center_of = [&](const Eigen::VectorXd& x) {
    return Eigen::Vector2d(grid.center() + grid.pitch_nm * Eigen::Vector2d(x(2), x(3)));
  };
  auto objective = [&](const Eigen::VectorXd& x) {
    std::vector<double> values;
    model.fill(x(0), x(1), center_of(x), values);
    try {
      return linear_residual(values, image.values).residual;
    } catch (const Error& e) {
      // A flat template explains nothing: same residual as amplitude 0.
      if (e.code() == ErrorCode::DegenerateTemplate) return 1.0;
      throw;
    }
  };

  Eigen::VectorXd steps(4);
  steps << 0.2, 0.3, 0.5, 0.5;
  std::vector<SimplexResult> results(starts.size());
  auto run_start = [&](std::size_t i) { results[i] = nelder_mead(objective, starts[i], options.simplex, steps); };

  unsigned threads = options.threads ? options.threads : std::max(1u, std::thread::hardware_concurrency());
  threads = std::min<unsigned>(threads, static_cast<unsigned>(starts.size()));
  if (threads <= 1) {
    for (std::size_t i = 0; i < starts.size(); ++i) run_start(i);
  } else {
    std::vector<std::future<void>> workers;
    for (unsigned t = 0; t < threads; ++t) {
      workers.push_back(std::async(std::launch::async, [&, t] {
        for (std::size_t i = t; i < starts.size(); i += threads) run_start(i);
      }));
    }
    for (auto& w : workers) w.get();
  }

  OrientationFit fit;
  fit.n_starts_used = static_cast<int>(starts.size());
  int best = -1;
  for (std::size_t i = 0; i < results.size(); ++i) {
    if (results[i].converged) ++fit.n_starts_converged;
    if (!results[i].converged) continue;
    if (best < 0 || results[i].value < results[static_cast<std::size_t>(best)].value) best = static_cast<int>(i);
  }
  if (best < 0) throw Error(ErrorCode::NoConvergence, "no Nelder-Mead start converged");

  const SimplexResult& winner = results[static_cast<std::size_t>(best)];
  const NVOrientation folded = canonical_orientation(raw_axis(winner.argmin(0), winner.argmin(1)));
  const Eigen::Vector2d center = center_of(winner.argmin);
  const ResidualResult linear = pattern_residual(folded.theta, folded.phi, center, image, model);

  fit.theta = folded.theta;
  fit.phi = folded.phi;
  fit.mirror_phi = folded.phi + kPi;
  fit.center_nm = center;
  fit.amplitude = linear.amplitude;
  fit.background = linear.background;
  fit.residual = linear.residual;
  fit.best_start = best;
  fit.iterations = winner.iterations;
  fit.converged = true;
  fit.phi_identifiable = folded.theta >= kPhiIdentifiableTheta;
  return fit;
}

std::array<NVOrientation, 4> tetrahedral_axes(double crystal_azimuth) {
  const double tilt = std::acos(-1.0 / 3.0);
  std::array<NVOrientation, 4> axes;
  axes[0] = {0.0, 0.0};
  for (int k = 0; k < 3; ++k) {
    axes[static_cast<std::size_t>(k) + 1] = NVOrientation::make(tilt, crystal_azimuth + k * 2.0 * kPi / 3.0);
  }
  return axes;
}

TetrahedralMatch match_tetrahedral(const NVOrientation& fitted, double crystal_azimuth) {
  const Eigen::Vector3d base = raw_axis(fitted.theta, fitted.phi);
  const Eigen::Vector3d mirror = raw_axis(fitted.theta, fitted.phi + kPi);
  const std::array<Eigen::Vector3d, 4> members{base, -base, mirror, -mirror};
  const auto axes = tetrahedral_axes(crystal_azimuth);

  TetrahedralMatch match;
  match.deviation = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < axes.size(); ++k) {
    const Eigen::Vector3d ideal = axes[k].axis();
    for (const auto& member : members) {
      const double deviation = angle_between(member, ideal);
      if (deviation < match.deviation) {
        match.deviation = deviation;
        match.index = static_cast<int>(k);
        match.ideal = axes[k];
        match.unfolded = NVOrientation::from_axis(member);
      }
    }
  }
  return match;
}

}  // namespace nvmag
