#include "nvmag/odmr.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>

#include <Eigen/Dense>

#include "nvmag/errors.hpp"

namespace nvmag {

void Spectrum::validate() const {
  if (frequencies.size() != contrast.size()) {
    throw Error(ErrorCode::InvalidArgument, "spectrum columns differ in length");
  }
  if (frequencies.size() < 2) throw Error(ErrorCode::InvalidArgument, "spectrum needs at least two points");
  for (std::size_t i = 0; i < frequencies.size(); ++i) {
    if (!std::isfinite(frequencies[i]) || !std::isfinite(contrast[i])) {
      throw Error(ErrorCode::InvalidArgument, "spectrum contains non-finite values");
    }
    if (i > 0 && !(frequencies[i] > frequencies[i - 1])) {
      throw Error(ErrorCode::InvalidArgument, "spectrum frequencies must be strictly increasing");
    }
  }
}

void Sweep::validate() const {
  if (!(stop > start) || points < 2) throw Error(ErrorCode::InvalidArgument, "sweep needs stop > start and >= 2 points");
}

Eigen::Vector3d field_in_nv_frame(const Eigen::Vector3d& field_lab, const NVOrientation& orientation) {
  const Eigen::Vector3d ez = orientation.axis();
  Eigen::Vector3d reference = Eigen::Vector3d::UnitZ() - ez.z() * ez;
  if (reference.norm() < 1e-9) reference = Eigen::Vector3d::UnitX() - ez.x() * ez;
  const Eigen::Vector3d ex = reference.normalized();
  const Eigen::Vector3d ey = ez.cross(ex);
  return {field_lab.dot(ex), field_lab.dot(ey), field_lab.dot(ez)};
}

std::array<OdmrTransition, 6> allowed_transitions(const Eigen::Vector3d& field_nv, const SpinParams& params) {
  params.validate();
  const Eigen::SelfAdjointEigenSolver<Matrix9cd> solver(full_hamiltonian(field_nv, params));
  const auto& energies = solver.eigenvalues();
  const auto& vectors = solver.eigenvectors();

  // Greedy one-to-one labelling by largest overlap with |ms, mI>.
  std::array<int, 9> level_of_basis{};
  std::array<bool, 9> basis_taken{};
  std::array<bool, 9> state_taken{};
  for (int round = 0; round < 9; ++round) {
    double best = -1.0;
    int best_basis = 0;
    int best_state = 0;
    for (int b = 0; b < 9; ++b) {
      if (basis_taken[static_cast<std::size_t>(b)]) continue;
      for (int s = 0; s < 9; ++s) {
        if (state_taken[static_cast<std::size_t>(s)]) continue;
        const double overlap = std::norm(vectors(b, s));
        if (overlap > best) {
          best = overlap;
          best_basis = b;
          best_state = s;
        }
      }
    }
    basis_taken[static_cast<std::size_t>(best_basis)] = true;
    state_taken[static_cast<std::size_t>(best_state)] = true;
    level_of_basis[static_cast<std::size_t>(best_basis)] = best_state;
  }

  // basis index = 3 * electron + nuclear, both ordered {+1, 0, -1}
  auto energy = [&](int ms, int mi) {
    return energies(level_of_basis[static_cast<std::size_t>(3 * (1 - ms) + (1 - mi))]);
  };
  std::array<OdmrTransition, 6> lines;
  std::size_t k = 0;
  for (int ms : {-1, 1}) {
    for (int mi : {1, 0, -1}) lines[k++] = {energy(ms, mi) - energy(0, mi), ms, mi};
  }
  std::sort(lines.begin(), lines.end(), [](const auto& a, const auto& b) { return a.frequency < b.frequency; });
  return lines;
}

namespace {

double lorentzian(double f, double center, double fwhm) {
  const double u = 2.0 * (f - center) / fwhm;
  return 1.0 / (1.0 + u * u);
}

}  // namespace

Spectrum simulate_odmr_spectrum(const Eigen::Vector3d& field_lab, const NVOrientation& orientation,
                                const SpinParams& params, double linewidth, double contrast_depth,
                                const Sweep& sweep) {
  if (!(linewidth > 0.0)) throw Error(ErrorCode::InvalidArgument, "linewidth must be positive");
  if (!(contrast_depth > 0.0 && contrast_depth < 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "contrast depth must lie in (0, 1)");
  }
  sweep.validate();
  const auto lines = allowed_transitions(field_in_nv_frame(field_lab, orientation), params);
  Spectrum spectrum;
  spectrum.linewidth = linewidth;
  spectrum.frequencies.resize(static_cast<std::size_t>(sweep.points));
  spectrum.contrast.resize(static_cast<std::size_t>(sweep.points));
  const double step = (sweep.stop - sweep.start) / (sweep.points - 1);
  for (int i = 0; i < sweep.points; ++i) {
    const double f = sweep.start + step * i;
    double dip = 0.0;
    for (const auto& line : lines) dip += contrast_depth * lorentzian(f, line.frequency, linewidth);
    spectrum.frequencies[static_cast<std::size_t>(i)] = f;
    spectrum.contrast[static_cast<std::size_t>(i)] = 1.0 - dip;
  }
  return spectrum;
}

Spectrum add_contrast_noise(Spectrum spectrum, double sigma, std::uint64_t seed) {
  std::mt19937_64 engine(seed);
  std::normal_distribution<double> noise(0.0, sigma);
  for (double& c : spectrum.contrast) c += noise(engine);
  return spectrum;
}

namespace {

struct Region {
  std::size_t begin = 0;
  std::size_t end = 0;  // inclusive
  double strength = 0.0;
};

struct Data {
  std::vector<double> f;
  std::vector<double> y;
};

// Nonlinear parameters of one group.
struct Group {
  double center;
  double spacing;
  double width;
};

struct LinearFit {
  double sse = 0.0;
  Eigen::VectorXd coefficients;  // baseline, then three depths per group
};

Eigen::MatrixXd design(const Data& data, const std::vector<Group>& groups) {
  const auto n = static_cast<Eigen::Index>(data.f.size());
  Eigen::MatrixXd x(n, 1 + 3 * static_cast<Eigen::Index>(groups.size()));
  for (Eigen::Index i = 0; i < n; ++i) {
    const double f = data.f[static_cast<std::size_t>(i)];
    x(i, 0) = 1.0;
    for (std::size_t g = 0; g < groups.size(); ++g) {
      for (int k = 0; k < 3; ++k) {
        const double center = groups[g].center + (k - 1) * groups[g].spacing;
        x(i, 1 + 3 * static_cast<Eigen::Index>(g) + k) = -lorentzian(f, center, groups[g].width);
      }
    }
  }
  return x;
}

LinearFit solve_linear(const Data& data, const std::vector<Group>& groups) {
  const Eigen::MatrixXd x = design(data, groups);
  const Eigen::Map<const Eigen::VectorXd> y(data.y.data(), static_cast<Eigen::Index>(data.y.size()));
  LinearFit fit;
  fit.coefficients = x.colPivHouseholderQr().solve(y);
  fit.sse = (x * fit.coefficients - y).squaredNorm();
  return fit;
}

Data slice(const Spectrum& spectrum, std::size_t begin, std::size_t end) {
  Data d;
  d.f.assign(spectrum.frequencies.begin() + static_cast<long>(begin), spectrum.frequencies.begin() + static_cast<long>(end) + 1);
  d.y.assign(spectrum.contrast.begin() + static_cast<long>(begin), spectrum.contrast.begin() + static_cast<long>(end) + 1);
  return d;
}

double median(std::vector<double> v) {
  const auto mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<long>(mid), v.end());
  return v[mid];
}

struct Detection {
  std::vector<double> smoothed;  // dip depth below the baseline, smoothed
  std::vector<Region> regions;   // significant dip regions, ascending
  double threshold = 0.0;
};

Detection detect_dips(const Spectrum& spectrum) {
  const std::size_t n = spectrum.contrast.size();
  const double baseline = median(spectrum.contrast);
  std::vector<double> dips(n);
  for (std::size_t i = 0; i < n; ++i) dips[i] = baseline - spectrum.contrast[i];

  std::vector<double> diffs;
  for (std::size_t i = 1; i < n; ++i) diffs.push_back(std::abs(spectrum.contrast[i] - spectrum.contrast[i - 1]));
  const double noise = 1.4826 * median(diffs) / std::sqrt(2.0);

  Detection det;
  det.smoothed.resize(n);
  constexpr long kHalf = 2;
  for (std::size_t i = 0; i < n; ++i) {
    const long lo = std::max<long>(0, static_cast<long>(i) - kHalf);
    const long hi = std::min<long>(static_cast<long>(n) - 1, static_cast<long>(i) + kHalf);
    double sum = 0.0;
    for (long j = lo; j <= hi; ++j) sum += dips[static_cast<std::size_t>(j)];
    det.smoothed[i] = sum / static_cast<double>(hi - lo + 1);
  }
  const double peak = *std::max_element(det.smoothed.begin(), det.smoothed.end());
  const double smoothed_noise = noise / std::sqrt(2.0 * kHalf + 1.0);
  if (!(peak > 6.0 * smoothed_noise) || !(peak > 1e-9)) {
    throw Error(ErrorCode::FitFailed, "no resonance dips above the noise floor");
  }
  det.threshold = std::max(5.0 * smoothed_noise, 0.15 * peak);

  std::vector<Region> regions;
  for (std::size_t i = 0; i < n;) {
    if (det.smoothed[i] <= det.threshold) {
      ++i;
      continue;
    }
    Region r;
    r.begin = i;
    while (i < n && det.smoothed[i] > det.threshold) {
      const double df = spectrum.frequencies[std::min(i + 1, n - 1)] - spectrum.frequencies[i > 0 ? i - 1 : 0];
      r.strength += det.smoothed[i] * 0.5 * df;
      ++i;
    }
    r.end = i - 1;
    regions.push_back(r);
  }
  double strongest = 0.0;
  for (const auto& r : regions) strongest = std::max(strongest, r.strength);
  for (const auto& r : regions) {
    if (r.strength >= 0.1 * strongest) det.regions.push_back(r);
  }
  return det;
}

// Initial (center, spacing, width) for the dips inside [begin, end].
std::vector<Group> initial_guesses(const Spectrum& spectrum, const Detection& det,
                                   const std::vector<Region>& regions) {
  const auto& f = spectrum.frequencies;
  const auto& s = det.smoothed;
  double weight = 0.0;
  double moment = 0.0;
  std::size_t peak = regions.front().begin;
  for (const auto& r : regions) {
    for (std::size_t i = r.begin; i <= r.end; ++i) {
      weight += s[i];
      moment += s[i] * f[i];
      if (s[i] > s[peak]) peak = i;
    }
  }
  const double center = moment / weight;

  // FWHM of the strongest local feature.
  const double half = 0.5 * s[peak];
  std::size_t left = peak;
  std::size_t right = peak;
  while (left > 0 && s[left] > half) --left;
  while (right + 1 < s.size() && s[right] > half) ++right;
  const double step = (f.back() - f.front()) / static_cast<double>(f.size() - 1);
  const double width = std::max(f[right] - f[left], 2.0 * step);

  // Resolved local maxima give the spacing directly.
  std::vector<double> maxima;
  for (const auto& r : regions) {
    for (std::size_t i = std::max<std::size_t>(r.begin, 1); i <= r.end && i + 1 < s.size(); ++i) {
      if (s[i] >= s[i - 1] && s[i] > s[i + 1]) {
        if (maxima.empty() || f[i] - maxima.back() > 0.5 * width) maxima.push_back(f[i]);
      }
    }
  }
  const double extent = f[regions.back().end] - f[regions.front().begin];
  double spacing = std::max(0.5 * (extent - width), 0.25 * width);
  if (maxima.size() >= 3) spacing = 0.5 * (maxima.back() - maxima.front());
  else if (maxima.size() == 2) spacing = maxima[1] - maxima[0];

  std::vector<Group> guesses;
  for (double ws : {1.0, 0.5}) {
    for (double ss : {1.0, 0.5, 1.5, 2.0}) guesses.push_back({center, spacing * ss, width * ws});
  }
  return guesses;
}

struct GroupFitResult {
  std::vector<Group> groups;
  LinearFit linear;
  SimplexResult simplex;
};

double total_variation(const Data& data) {
  const double mean = std::accumulate(data.y.begin(), data.y.end(), 0.0) / static_cast<double>(data.y.size());
  double v = 0.0;
  for (double y : data.y) v += (y - mean) * (y - mean);
  return v > 0.0 ? v : 1.0;
}

GroupFitResult refine(const Data& data, const std::vector<Group>& start, const SimplexSettings& settings) {
  const double scale = total_variation(data);
  auto unpack = [&](const Eigen::VectorXd& x) {
    std::vector<Group> groups(start.size());
    for (std::size_t g = 0; g < start.size(); ++g) {
      const auto o = static_cast<Eigen::Index>(3 * g);
      groups[g] = {x(o), std::exp(x(o + 1)), std::exp(x(o + 2))};
    }
    return groups;
  };
  auto objective = [&](const Eigen::VectorXd& x) { return solve_linear(data, unpack(x)).sse / scale; };

  Eigen::VectorXd x0(3 * static_cast<Eigen::Index>(start.size()));
  Eigen::VectorXd steps(x0.size());
  for (std::size_t g = 0; g < start.size(); ++g) {
    const auto o = static_cast<Eigen::Index>(3 * g);
    x0(o) = start[g].center;
    x0(o + 1) = std::log(start[g].spacing);
    x0(o + 2) = std::log(start[g].width);
    steps(o) = 0.3 * start[g].width;
    steps(o + 1) = 0.2;
    steps(o + 2) = 0.2;
  }
  GroupFitResult out;
  out.simplex = nelder_mead(objective, x0, settings, steps);
  out.groups = unpack(out.simplex.argmin);
  out.linear = solve_linear(data, out.groups);
  return out;
}

GroupFitResult fit_group(const Data& data, const std::vector<Group>& guesses, const SimplexSettings& settings) {
  std::vector<std::pair<double, std::size_t>> ranked;
  for (std::size_t i = 0; i < guesses.size(); ++i) ranked.emplace_back(solve_linear(data, {guesses[i]}).sse, i);
  std::sort(ranked.begin(), ranked.end());
  GroupFitResult best;
  bool have = false;
  for (std::size_t r = 0; r < std::min<std::size_t>(2, ranked.size()); ++r) {
    GroupFitResult candidate = refine(data, {guesses[ranked[r].second]}, settings);
    if (!have || candidate.linear.sse < best.linear.sse) {
      best = std::move(candidate);
      have = true;
    }
  }
  return best;
}

std::pair<std::size_t, std::size_t> window(const Spectrum& spectrum, const std::vector<Region>& regions,
                                           double margin, std::size_t lo_limit, std::size_t hi_limit) {
  const auto& f = spectrum.frequencies;
  const double lo_f = f[regions.front().begin] - margin;
  const double hi_f = f[regions.back().end] + margin;
  std::size_t begin = regions.front().begin;
  std::size_t end = regions.back().end;
  while (begin > lo_limit && f[begin - 1] >= lo_f) --begin;
  while (end < hi_limit && f[end + 1] <= hi_f) ++end;
  return {begin, end};
}

TripletFit to_triplet(const Group& g, const Eigen::VectorXd& coefficients, std::size_t group_index) {
  TripletFit t;
  t.center = g.center;
  t.spacing = g.spacing;
  t.linewidth = g.width;
  for (int k = 0; k < 3; ++k) t.depths[static_cast<std::size_t>(k)] = coefficients(1 + 3 * static_cast<Eigen::Index>(group_index) + k);
  return t;
}

}  // namespace

TripletFit fit_single_triplet(const Spectrum& spectrum, const SimplexSettings& settings) {
  spectrum.validate();
  const Detection det = detect_dips(spectrum);
  const auto guesses = initial_guesses(spectrum, det, det.regions);
  const auto [begin, end] = window(spectrum, det.regions, 10.0 * guesses.front().width, 0, spectrum.frequencies.size() - 1);
  const Data data = slice(spectrum, begin, end);
  const GroupFitResult fit = fit_group(data, guesses, settings);
  if (!fit.simplex.converged) throw Error(ErrorCode::FitFailed, "triplet fit did not converge");
  TripletFit out = to_triplet(fit.groups[0], fit.linear.coefficients, 0);
  out.residual_rms = std::sqrt(fit.linear.sse / static_cast<double>(data.f.size()));
  return out;
}

OdmrFit fit_odmr_spectrum(const Spectrum& spectrum, const SimplexSettings& settings) {
  spectrum.validate();
  const Detection det = detect_dips(spectrum);
  if (det.regions.size() < 2) {
    throw Error(ErrorCode::TripletsOverlap, "all dips form a single group");
  }

  // Split the dip regions at the widest gap.
  std::size_t split = 1;
  double widest = -1.0;
  for (std::size_t i = 1; i < det.regions.size(); ++i) {
    const double gap = spectrum.frequencies[det.regions[i].begin] - spectrum.frequencies[det.regions[i - 1].end];
    if (gap > widest) {
      widest = gap;
      split = i;
    }
  }
  const std::vector<Region> low(det.regions.begin(), det.regions.begin() + static_cast<long>(split));
  const std::vector<Region> high(det.regions.begin() + static_cast<long>(split), det.regions.end());
  const std::size_t boundary = (low.back().end + high.front().begin) / 2;
  const std::size_t last = spectrum.frequencies.size() - 1;

  const auto low_guesses = initial_guesses(spectrum, det, low);
  const auto high_guesses = initial_guesses(spectrum, det, high);
  const auto low_window = window(spectrum, low, 10.0 * low_guesses.front().width, 0, boundary);
  const auto high_window = window(spectrum, high, 10.0 * high_guesses.front().width, boundary + 1, last);

  const GroupFitResult low_fit = fit_group(slice(spectrum, low_window.first, low_window.second), low_guesses, settings);
  const GroupFitResult high_fit = fit_group(slice(spectrum, high_window.first, high_window.second), high_guesses, settings);

  // Joint refinement over both windows.
  Data joint = slice(spectrum, low_window.first, low_window.second);
  const Data upper = slice(spectrum, high_window.first, high_window.second);
  joint.f.insert(joint.f.end(), upper.f.begin(), upper.f.end());
  joint.y.insert(joint.y.end(), upper.y.begin(), upper.y.end());
  const GroupFitResult fit = refine(joint, {low_fit.groups[0], high_fit.groups[0]}, settings);
  if (!fit.simplex.converged) throw Error(ErrorCode::FitFailed, "joint Lorentzian fit did not converge");

  std::array<Group, 2> groups{fit.groups[0], fit.groups[1]};
  std::array<std::size_t, 2> order{0, 1};
  if (groups[1].center < groups[0].center) order = {1, 0};
  const Group& g1 = groups[order[0]];
  const Group& g2 = groups[order[1]];
  const double separation = g2.center - g1.center;
  if (separation < 3.0 * std::max(g1.width, g2.width) || separation < g1.spacing + g2.spacing) {
    std::ostringstream msg;
    msg << "triplets at " << g1.center << " and " << g2.center << " MHz are not separable";
    throw Error(ErrorCode::TripletsOverlap, msg.str());
  }

  // Covariance from the Jacobian of all 13 parameters at the optimum.
  const auto n = static_cast<Eigen::Index>(joint.f.size());
  const Eigen::MatrixXd x = design(joint, fit.groups);
  const Eigen::VectorXd& coef = fit.linear.coefficients;
  Eigen::MatrixXd jac(n, 13);
  jac.rightCols(7) = x;
  for (std::size_t g = 0; g < 2; ++g) {
    for (int p = 0; p < 3; ++p) {
      std::vector<Group> up = fit.groups;
      std::vector<Group> dn = fit.groups;
      double* u = p == 0 ? &up[g].center : (p == 1 ? &up[g].spacing : &up[g].width);
      double* d = p == 0 ? &dn[g].center : (p == 1 ? &dn[g].spacing : &dn[g].width);
      const double h = 1e-5 * fit.groups[g].width;
      *u += h;
      *d -= h;
      jac.col(static_cast<Eigen::Index>(3 * g) + p) = (design(joint, up) * coef - design(joint, dn) * coef) / (2.0 * h);
    }
  }
  const double dof = static_cast<double>(n - 13);
  const double variance = dof > 0 ? fit.linear.sse / dof : 0.0;
  const Eigen::MatrixXd normal = jac.transpose() * jac;
  const Eigen::MatrixXd covariance = variance * normal.completeOrthogonalDecomposition().pseudoInverse();

  OdmrFit out;
  const auto c1 = static_cast<Eigen::Index>(3 * order[0]);
  const auto c2 = static_cast<Eigen::Index>(3 * order[1]);
  out.pair.omega1 = g1.center;
  out.pair.omega2 = g2.center;
  out.pair.sigma1 = std::sqrt(std::max(0.0, covariance(c1, c1)));
  out.pair.sigma2 = std::sqrt(std::max(0.0, covariance(c2, c2)));
  out.pair.covariance = covariance(c1, c2);
  out.triplets = {to_triplet(g1, coef, order[0]), to_triplet(g2, coef, order[1])};
  for (std::size_t t = 0; t < 2; ++t) {
    for (int k = 0; k < 3; ++k) {
      out.centers[3 * t + static_cast<std::size_t>(k)] = out.triplets[t].center + (k - 1) * std::abs(out.triplets[t].spacing);
    }
  }
  out.baseline = coef(0);
  out.residual_rms = std::sqrt(fit.linear.sse / static_cast<double>(n));
  out.points_used = static_cast<int>(n);
  out.evaluations = low_fit.simplex.evaluations + high_fit.simplex.evaluations + fit.simplex.evaluations;
  return out;
}

}  // namespace nvmag
