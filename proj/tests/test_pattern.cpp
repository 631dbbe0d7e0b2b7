#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"
#include "nvmag/errors.hpp"
#include "nvmag/pattern.hpp"
#include "oracles.hpp"

using namespace nvmag;

namespace {

const OpticalConfig kOptics;

Eigen::Vector3d azimuthal_direction(const Eigen::Vector2d& offset) {
  return Eigen::Vector3d(-offset.y(), offset.x(), 0.0).normalized();
}

}  // namespace

TEST_CASE("orientation construction") {
  const auto o = NVOrientation::from_degrees(109.84, -20.0);
  CHECK(o.phi == doctest::Approx(340.0 * oracle::kDeg));
  CHECK_THROWS_AS(NVOrientation::make(-0.1, 0.0), Error);
  CHECK_THROWS_AS(NVOrientation::make(4.0, 0.0), Error);
  std::mt19937_64 rng(3);
  for (int i = 0; i < 50; ++i) {
    const Eigen::Vector3d v = oracle::random_unit(rng);
    CHECK((NVOrientation::from_axis(v).axis() - v).norm() < 1e-14);
  }
}

TEST_CASE("dipole projection factor") {
  for (int k = 0; k < 8; ++k) {
    const double a = k * 0.7;
    CHECK(dipole_projection_factor(Eigen::Vector3d::UnitZ(), Eigen::Vector3d(std::cos(a), std::sin(a), 0.0)) ==
          doctest::Approx(1.0).epsilon(1e-15));
  }
  CHECK(dipole_projection_factor(Eigen::Vector3d::UnitX(), Eigen::Vector3d::UnitX()) == 0.0);
  CHECK_THROWS_AS(dipole_projection_factor(Eigen::Vector3d(1.0, 1.0, 0.0), Eigen::Vector3d::UnitX()), Error);
  CHECK_THROWS_AS(dipole_projection_factor(Eigen::Vector3d::UnitX(), Eigen::Vector3d(0.0, 0.5, 0.0)), Error);
}

TEST_CASE("dipole projection factor matches explicit dipole pairs") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> angle(0.0, 2.0 * std::numbers::pi);
  for (int trial = 0; trial < 20; ++trial) {
    const Eigen::Vector3d axis = oracle::random_unit(rng);
    const Eigen::Vector3d dir = oracle::random_unit(rng);
    const double ours = dipole_projection_factor(axis, dir);
    for (int r = 0; r < 100; ++r) CHECK(std::abs(ours - oracle::dipole_sum(axis, dir, angle(rng))) < 1e-12);
  }
}

TEST_CASE("amplitude zero gives a flat background image") {
  PatternParams p;
  p.amplitude = 0.0;
  p.background = 42.0;
  const auto image = simulate_pattern(NVOrientation::from_degrees(0.37, 153.68), ScanGrid::centered(15, 11, 40.0), kOptics, p);
  CHECK(std::all_of(image.values.begin(), image.values.end(), [](double v) { return v == 42.0; }));
}

TEST_CASE("centre pixel equals the background") {
  PatternParams p;
  p.amplitude = 5e4;
  p.background = 17.5;
  for (const auto& o : {NVOrientation::from_degrees(0.0, 0.0), NVOrientation::from_degrees(70.16, 20.6)}) {
    const auto image = simulate_pattern(o, ScanGrid::centered(31, 31, 50.0), kOptics, p);
    CHECK(image.at(15, 15) == 17.5);
  }
}

TEST_CASE("measured NV0 orientation gives a near-symmetric doughnut") {
  const auto o = NVOrientation::from_degrees(0.37, 153.68);
  // ring radius of the |E|^2 maximum
  double best_rho = 0.0;
  double best = 0.0;
  for (double rho = 50.0; rho < 600.0; rho += 1.0) {
    const double v = std::norm(azimuthal_field(rho, 0.0, kOptics));
    if (v > best) {
      best = v;
      best_rho = rho;
    }
  }
  double lo = 1e300;
  double hi = 0.0;
  for (int k = 0; k < 360; ++k) {
    const double a = k * oracle::kDeg;
    const double v = excitation_at(o, best_rho * Eigen::Vector2d(std::cos(a), std::sin(a)), kOptics);
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  CHECK(hi / lo < 1.05);
}

TEST_CASE("theta 0 pattern is invariant under quarter turns of the grid") {
  const auto image = simulate_pattern(NVOrientation::from_degrees(0.0, 0.0), ScanGrid::centered(21, 21, 50.0), kOptics, {});
  for (int row = 0; row < 21; ++row) {
    for (int col = 0; col < 21; ++col) {
      CHECK(image.at(col, row) == doctest::Approx(image.at(20 - row, col)).epsilon(1e-14));
    }
  }
}

TEST_CASE("in-plane axis gives two lobes matching explicit dipoles") {
  // Axis along lab x: the dipoles span y-z, so the null line is the y axis.
  const auto o = NVOrientation::from_degrees(90.0, 0.0);
  const ScanGrid grid = ScanGrid::centered(21, 21, 50.0);
  const auto image = simulate_pattern(o, grid, kOptics, {});
  for (int k = 0; k < 21; ++k) CHECK(std::abs(image.at(10, k)) < 1e-14 * image.at(14, 10));
  CHECK(image.at(14, 10) > 0.0);
  for (int row = 0; row < 21; ++row) {
    for (int col = 0; col < 21; ++col) {
      const Eigen::Vector2d offset = grid.position(col, row) - grid.center();
      if (offset.norm() == 0.0) continue;
      const double expected = std::norm(azimuthal_field(offset.norm(), 0.0, kOptics)) *
                              oracle::dipole_sum(o.axis(), azimuthal_direction(offset), 0.3);
      CHECK(std::abs(image.at(col, row) - expected) < 1e-12 * image.at(14, 10));
    }
  }
}

TEST_CASE("patterns at phi and phi + pi agree") {
  const ScanGrid grid = ScanGrid::centered(25, 25, 40.0);
  PatternParams p;
  p.amplitude = 1e4;
  p.background = 3.0;
  const auto a = simulate_pattern(NVOrientation::make(1.2, 0.75), grid, kOptics, p);
  const auto b = simulate_pattern(NVOrientation::make(1.2, 0.75 + std::numbers::pi), grid, kOptics, p);
  CHECK(a.values == b.values);

  const auto c = simulate_pattern(NVOrientation::from_degrees(109.25, 260.51), grid, kOptics, p);
  const auto d = simulate_pattern(NVOrientation::from_degrees(109.25, 80.51), grid, kOptics, p);
  for (std::size_t i = 0; i < c.values.size(); ++i) CHECK(c.values[i] == doctest::Approx(d.values[i]).epsilon(1e-13));
}

TEST_CASE("rotating the azimuth rotates the pattern rigidly") {
  const ScanGrid grid = ScanGrid::centered(21, 21, 50.0);
  const auto a = simulate_pattern(NVOrientation::from_degrees(60.0, 10.0), grid, kOptics, {});
  const auto b = simulate_pattern(NVOrientation::from_degrees(60.0, 100.0), grid, kOptics, {});
  const double peak = *std::max_element(a.values.begin(), a.values.end());
  for (int row = 0; row < 21; ++row) {
    for (int col = 0; col < 21; ++col) {
      // (x, y) -> (-y, x) about the centre pixel
      const int rc = 10 - (row - 10);
      const int rr = 10 + (col - 10);
      CHECK(std::abs(b.at(rc, rr) - a.at(col, row)) < 1e-12 * peak);
    }
  }
}

TEST_CASE("emitter offset translates the pattern") {
  const ScanGrid grid = ScanGrid::centered(21, 21, 50.0);
  const auto o = NVOrientation::from_degrees(35.0, 40.0);
  PatternParams shifted;
  shifted.nv_position = grid.center() + Eigen::Vector2d(100.0, -50.0);
  const auto a = simulate_pattern(o, grid, kOptics, {});
  const auto b = simulate_pattern(o, grid, kOptics, shifted);
  for (int row = 0; row < 15; ++row) {
    for (int col = 0; col < 15; ++col) CHECK(b.at(col + 2, row) == doctest::Approx(a.at(col, row + 1)).epsilon(1e-13));
  }
}

TEST_CASE("Poisson noise is reproducible per seed") {
  const ScanGrid grid = ScanGrid::centered(15, 15, 50.0);
  PatternParams p;
  p.amplitude = 1e4 / 0.3;
  p.background = 50.0;
  p.noise_seed = 99;
  const auto o = NVOrientation::from_degrees(45.0, 30.0);
  const auto a = simulate_pattern(o, grid, kOptics, p);
  const auto b = simulate_pattern(o, grid, kOptics, p);
  CHECK(a.values == b.values);
  p.noise_seed = 100;
  const auto c = simulate_pattern(o, grid, kOptics, p);
  CHECK(a.values != c.values);
  for (double v : a.values) CHECK(v == std::floor(v));
  CHECK(mix_seed(1, 0) != mix_seed(1, 1));
  CHECK(mix_seed(1, 0) != mix_seed(2, 0));
}

TEST_CASE("grid validation") {
  CHECK_THROWS_AS(ScanGrid::centered(0, 10, 50.0), Error);
  CHECK_THROWS_AS(ScanGrid::centered(10, 10, -1.0), Error);
  CHECK_THROWS_AS(ScanGrid::centered(5000, 5000, 1.0), Error);
  PatternParams p;
  p.amplitude = -1.0;
  CHECK_THROWS_AS(simulate_pattern({}, ScanGrid::centered(5, 5, 50.0), kOptics, p), Error);
}
