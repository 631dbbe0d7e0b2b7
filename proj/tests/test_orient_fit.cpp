#include <algorithm>
#include <cmath>
#include <numbers>

#include "doctest.h"
#include "nvmag/errors.hpp"
#include "nvmag/orient_fit.hpp"
#include "oracles.hpp"

using namespace nvmag;

namespace {

const OpticalConfig kOptics;

ScanImage synthetic(const NVOrientation& o, const Eigen::Vector2d& shift = Eigen::Vector2d::Zero()) {
  const ScanGrid grid = ScanGrid::centered(31, 31, 50.0);
  PatternParams p;
  p.amplitude = 4e4;
  p.background = 100.0;
  p.nv_position = grid.center() + shift;
  return simulate_pattern(o, grid, kOptics, p);
}

}  // namespace

TEST_CASE("residual vanishes at the generating parameters") {
  const auto o = NVOrientation::from_degrees(70.16, 20.6);
  const Eigen::Vector2d shift(37.0, -12.5);
  const ScanImage image = synthetic(o, shift);
  const auto r = pattern_residual(o.theta, o.phi, image.grid.center() + shift, image, kOptics);
  CHECK(r.residual < 1e-12);
  CHECK(r.amplitude == doctest::Approx(4e4).epsilon(1e-6));
  CHECK(r.background == doctest::Approx(100.0).epsilon(1e-6));
}

TEST_CASE("the model cannot distinguish phi from phi + pi") {
  const auto o = NVOrientation::from_degrees(50.0, 33.0);
  const ScanImage image = synthetic(o);
  const PatternTemplate model(image.grid, kOptics);
  for (double phi : {0.4, 1.3, 2.9}) {
    const auto a = pattern_residual(0.8, phi, image.grid.center(), image, model);
    const auto b = pattern_residual(0.8, phi + std::numbers::pi, image.grid.center(), image, model);
    CHECK(a.residual == doctest::Approx(b.residual).epsilon(1e-13));
  }
}

TEST_CASE("constant images and templates are degenerate") {
  const ScanGrid grid = ScanGrid::centered(11, 11, 50.0);
  const ScanImage flat{grid, std::vector<double>(grid.pixel_count(), 5.0)};
  CHECK_THROWS_AS(pattern_residual(0.3, 0.2, grid.center(), flat, kOptics), Error);
  try {
    pattern_residual(0.3, 0.2, grid.center(), flat, kOptics);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::DegenerateTemplate);
  }
  CHECK_THROWS_AS(linear_residual(std::vector<double>(4, 1.0), {1.0, 2.0, 3.0, 4.0}), Error);
  CHECK_THROWS_AS(linear_residual({1.0, 2.0}, {1.0, 2.0, 3.0}), Error);
}

TEST_CASE("noiseless round trip and determinism") {
  const auto truth = NVOrientation::from_degrees(109.25, 260.51);
  const ScanImage image = synthetic(truth, Eigen::Vector2d(20.0, 30.0));
  FitOptions options;
  const OrientationFit a = fit_orientation(image, kOptics, options);
  CHECK(a.converged);
  CHECK(equivalent_axis_error(NVOrientation{a.theta, a.phi}, truth) < 0.5 * oracle::kDeg);
  CHECK(a.theta <= std::numbers::pi / 2.0);
  CHECK(a.phi >= 0.0);
  CHECK(a.phi < std::numbers::pi);
  CHECK(a.mirror_phi == doctest::Approx(a.phi + std::numbers::pi));
  CHECK((a.center_nm - image.grid.center() - Eigen::Vector2d(20.0, 30.0)).norm() < 1.0);
  CHECK(a.residual < 1e-6);

  options.threads = 1;
  const OrientationFit b = fit_orientation(image, kOptics, options);
  CHECK(a.theta == b.theta);
  CHECK(a.phi == b.phi);
  CHECK(a.residual == b.residual);
}

TEST_CASE("a pattern and its point mirror give the same axis") {
  const auto truth = NVOrientation::from_degrees(40.0, 120.0);
  ScanImage image = synthetic(truth);
  ScanImage rotated = image;
  std::reverse(rotated.values.begin(), rotated.values.end());
  const auto a = fit_orientation(image, kOptics, {});
  const auto b = fit_orientation(rotated, kOptics, {});
  CHECK(equivalent_axis_error(NVOrientation{a.theta, a.phi}, NVOrientation{b.theta, b.phi}) < 1e-3 * oracle::kDeg);
}

TEST_CASE("doughnut fit flags the azimuth as unidentifiable") {
  const ScanImage image = synthetic(NVOrientation::from_degrees(0.0, 0.0));
  const auto fit = fit_orientation(image, kOptics, {});
  CHECK(fit.theta < 2.0 * oracle::kDeg);
  CHECK_FALSE(fit.phi_identifiable);
}

TEST_CASE("canonical folding and equivalence") {
  const auto c = canonical_orientation(oracle::spherical(109.84 * oracle::kDeg, 20.6 * oracle::kDeg));
  CHECK(c.theta == doctest::Approx(70.16 * oracle::kDeg));
  CHECK(c.phi == doctest::Approx(20.6 * oracle::kDeg));
  const auto o = NVOrientation::from_degrees(30.0, 10.0);
  CHECK(equivalent_axis_error(o, NVOrientation::from_degrees(30.0, 190.0)) < 1e-12);
  CHECK(equivalent_axis_error(o, NVOrientation::from_degrees(150.0, 190.0)) < 1e-12);
  CHECK(equivalent_axis_error(o, NVOrientation::from_degrees(31.0, 10.0)) == doctest::Approx(oracle::kDeg));
}

TEST_CASE("tetrahedral axes and nearest-axis labelling") {
  const double azimuth = 20.6 * oracle::kDeg;
  const auto axes = tetrahedral_axes(azimuth);
  for (std::size_t i = 0; i < 4; ++i) {
    for (std::size_t j = i + 1; j < 4; ++j) CHECK(axes[i].axis().dot(axes[j].axis()) == doctest::Approx(-1.0 / 3.0));
  }
  // Measured axes, fitted (folded) form.
  const double fitted[3][2] = {{109.84, 20.60}, {109.25, 260.51}, {109.31, 140.74}};
  const int expected_index[3] = {1, 3, 2};
  for (int k = 0; k < 3; ++k) {
    const auto measured = NVOrientation::from_degrees(fitted[k][0], fitted[k][1]);
    const auto folded = canonical_orientation(measured.axis());
    const auto match = match_tetrahedral(folded, azimuth);
    CHECK(match.index == expected_index[k]);
    CHECK(oracle::angle_between(match.unfolded.axis(), measured.axis()) < 1e-12);
    // brute-force nearest axis over the equivalence class
    double best = 1e9;
    for (const auto& a : axes) {
      for (double phi_shift : {0.0, std::numbers::pi}) {
        const Eigen::Vector3d m = oracle::spherical(folded.theta, folded.phi + phi_shift);
        best = std::min(best, oracle::axis_angle(m, a.axis()));
      }
    }
    CHECK(match.deviation == doctest::Approx(best).epsilon(1e-12));
  }
  const auto vertical = match_tetrahedral(NVOrientation::from_degrees(0.37, 153.68), azimuth);
  CHECK(vertical.index == 0);
  CHECK(vertical.deviation == doctest::Approx(0.37 * oracle::kDeg));
}

TEST_CASE("fit options are validated") {
  const ScanImage image = synthetic(NVOrientation::from_degrees(10.0, 0.0));
  FitOptions bad;
  bad.n_starts = 0;
  CHECK_THROWS_AS(fit_orientation(image, kOptics, bad), Error);
}
