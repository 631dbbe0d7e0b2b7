#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <random>

#include "doctest.h"
#include "nvmag/errors.hpp"
#include "nvmag/orient_fit.hpp"
#include "nvmag/vector_recon.hpp"
#include "oracles.hpp"

using namespace nvmag;

namespace {

constexpr double kPi = std::numbers::pi;

std::vector<ConeConstraint> measured_constraints() {
  return {
      {NVOrientation::from_degrees(109.84, 20.60), 117.62 * oracle::kDeg, 0.02 * oracle::kDeg, 59.53, 0.26},
      {NVOrientation::from_degrees(109.25, 260.51), 106.96 * oracle::kDeg, 0.02 * oracle::kDeg, 59.48, 0.35},
      {NVOrientation::from_degrees(109.31, 140.74), 102.55 * oracle::kDeg, 0.01 * oracle::kDeg, 59.56, 0.36},
  };
}

std::vector<ConeConstraint> exact_constraints(const std::vector<NVOrientation>& axes, const Eigen::Vector3d& b) {
  std::vector<ConeConstraint> out;
  for (const auto& a : axes) out.push_back({a, std::acos(std::clamp(a.axis().dot(b), -1.0, 1.0)), 0.0, 50.0, 0.0});
  return out;
}

std::vector<NVOrientation> tetrahedral(double azimuth) {
  const auto t = tetrahedral_axes(azimuth);
  return {t.begin(), t.end()};
}

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::IoError;
}

double mirror_distance(const Eigen::Vector3d& a, const Eigen::Vector3d& b) { return oracle::axis_angle(a, b); }

}  // namespace

TEST_CASE("orthogonal axes") {
  const std::vector<ConeConstraint> c{{NVOrientation::from_degrees(90, 0), kPi / 2, 0, 1, 0},
                                      {NVOrientation::from_degrees(90, 90), kPi / 2, 0, 1, 0},
                                      {NVOrientation::from_degrees(0, 0), 0.0, 0, 1, 0}};
  const auto r = solve_direction(c);
  CHECK((r.direction - Eigen::Vector3d::UnitZ()).norm() < 1e-12);
  CHECK(r.residual < 1e-24);
  CHECK(r.mirror == -r.direction);
}

TEST_CASE("measured cones give the reference direction") {
  const auto r = solve_direction(measured_constraints());
  const Eigen::Vector3d reference = oracle::spherical(8.59 * oracle::kDeg, 182.56 * oracle::kDeg);
  CHECK(mirror_distance(r.direction, reference) < 1.0 * oracle::kDeg);
  REQUIRE(r.triangle);
  CHECK(r.triangle->spread < 1.3 * oracle::kDeg);
  CHECK(r.direction_sigma);
  CHECK(*r.direction_sigma > 0.0);
}

TEST_CASE("triangle vertices match the analytic two-cone intersection") {
  const auto c = measured_constraints();
  const auto r = solve_direction(c);
  for (const auto& pair : r.triangle->pairs) {
    REQUIRE(pair.intersects);
    const auto& a = c[pair.first];
    const auto& b = c[pair.second];
    const auto points = oracle::two_cone_intersection(a.axis.axis(), r.selected_alpha[pair.first], b.axis.axis(),
                                                      r.selected_alpha[pair.second]);
    REQUIRE(points.size() == 2);
    const double d = std::min(oracle::angle_between(points[0], pair.vertex), oracle::angle_between(points[1], pair.vertex));
    CHECK(d < 1e-10);
  }
}

TEST_CASE("exact tetrahedral data is recovered to 1e-8 rad") {
  std::mt19937_64 rng(17);
  const auto axes = tetrahedral(0.35);
  for (int trial = 0; trial < 50; ++trial) {
    const Eigen::Vector3d b = oracle::random_unit(rng);
    const auto r = solve_direction(exact_constraints(axes, b));
    CHECK(mirror_distance(r.direction, b) < 1e-8);
    CHECK(r.residual < 1e-14);
    for (double other : r.combination_residuals) CHECK(r.residual <= other);
    // bookkeeping: the selected angles reproduce the direction's cone angles
    for (std::size_t i = 0; i < axes.size(); ++i) {
      CHECK(std::abs(std::cos(r.selected_alpha[i]) - axes[i].axis().dot(r.direction)) < 1e-8);
    }
  }
}

TEST_CASE("exact triangle collapses to a point") {
  std::mt19937_64 rng(4);
  const auto t = tetrahedral(1.0);
  const std::vector<NVOrientation> axes{t[1], t[2], t[3]};
  for (int trial = 0; trial < 20; ++trial) {
    const auto r = solve_direction(exact_constraints(axes, oracle::random_unit(rng)));
    REQUIRE(r.triangle);
    CHECK(r.triangle->spread < 1e-8);
  }
}

TEST_CASE("antipodal pairing") {
  std::mt19937_64 rng(8);
  const auto axes = tetrahedral(0.2);
  for (int trial = 0; trial < 20; ++trial) {
    auto c = exact_constraints(axes, oracle::random_unit(rng));
    auto flipped = c;
    for (auto& k : flipped) k.alpha = kPi - k.alpha;
    const auto a = solve_direction(c);
    const auto b = solve_direction(flipped);
    CHECK((a.direction - b.direction).norm() < 1e-12);
    CHECK((a.mirror + b.direction).norm() < 1e-12);
    for (std::size_t i = 0; i < c.size(); ++i) {
      CHECK(a.branch_choice[i] + b.branch_choice[i] == 1);
      CHECK(a.selected_alpha[i] == doctest::Approx(b.selected_alpha[i]).epsilon(1e-12));
    }
  }
}

TEST_CASE("rotation equivariance") {
  const Eigen::Matrix3d rot = Eigen::AngleAxisd(0.7, Eigen::Vector3d(1, 2, 3).normalized()).toRotationMatrix();
  const auto base = measured_constraints();
  auto rotated = base;
  for (auto& c : rotated) c.axis = NVOrientation::from_axis(rot * c.axis.axis());
  const auto a = solve_direction(base);
  const auto b = solve_direction(rotated);
  CHECK(mirror_distance(rot * a.direction, b.direction) < 1e-6);
}

TEST_CASE("direction error grows with cone angle noise") {
  std::mt19937_64 rng(123);
  const auto axes = tetrahedral(0.5);
  double previous = 0.0;
  for (double level : {0.01, 0.1, 1.0}) {
    double sum = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
      const Eigen::Vector3d b = oracle::random_unit(rng);
      auto c = exact_constraints(axes, b);
      std::normal_distribution<double> noise(0.0, level * oracle::kDeg);
      for (auto& k : c) k.alpha = std::clamp(k.alpha + noise(rng), 0.0, kPi);
      ReconSettings s;
      s.bootstrap_samples = 0;
      sum += mirror_distance(solve_direction(c, s).direction, b);
    }
    const double mean = sum / 100.0;
    CHECK(mean >= previous);
    previous = mean;
  }
}

TEST_CASE("input validation and degenerate geometry") {
  auto c = measured_constraints();
  c.pop_back();
  CHECK(code_of([&] { solve_direction(c); }) == ErrorCode::InvalidArgument);

  std::vector<ConeConstraint> many(7, measured_constraints()[0]);
  CHECK(code_of([&] { solve_direction(many); }) == ErrorCode::InvalidArgument);

  const std::vector<ConeConstraint> coplanar{{NVOrientation::from_degrees(90, 0), 1.0, 0, 1, 0},
                                             {NVOrientation::from_degrees(90, 60), 1.0, 0, 1, 0},
                                             {NVOrientation::from_degrees(90, 120), 1.0, 0, 1, 0}};
  CHECK(code_of([&] { solve_direction(coplanar); }) == ErrorCode::DegenerateAxes);

  const std::vector<ConeConstraint> parallel{{NVOrientation::from_degrees(30, 10), 1.0, 0, 1, 0},
                                             {NVOrientation::from_degrees(30, 10), 1.2, 0, 1, 0},
                                             {NVOrientation::from_degrees(150, 190), 0.4, 0, 1, 0}};
  CHECK(code_of([&] { solve_direction(parallel); }) == ErrorCode::DegenerateAxes);

  const std::vector<ConeConstraint> impossible{{NVOrientation::from_degrees(90, 0), 0.0, 0, 1, 0},
                                               {NVOrientation::from_degrees(90, 90), 0.0, 0, 1, 0},
                                               {NVOrientation::from_degrees(0, 0), 0.0, 0, 1, 0}};
  CHECK(code_of([&] { solve_direction(impossible); }) == ErrorCode::NoSolution);

  auto bad = measured_constraints();
  bad[0].alpha = 4.0;
  CHECK(code_of([&] { solve_direction(bad); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("bootstrap is reproducible for a fixed seed") {
  const auto a = solve_direction(measured_constraints());
  const auto b = solve_direction(measured_constraints());
  CHECK(*a.direction_sigma == *b.direction_sigma);
  ReconSettings other;
  other.seed = 2;
  CHECK(*solve_direction(measured_constraints(), other).direction_sigma != *a.direction_sigma);
}

TEST_CASE("magnitude aggregation") {
  std::vector<ConeConstraint> c = measured_constraints();
  for (auto& k : c) k.field_sigma = 0.0;
  const auto [mean, std] = aggregate_magnitude(c);
  CHECK(mean == doctest::Approx((59.53 + 59.48 + 59.56) / 3.0).epsilon(1e-15));
  CHECK(std == doctest::Approx(0.040414518843273).epsilon(1e-9));

  const auto weighted = aggregate_magnitude(measured_constraints());
  const double w[3] = {1 / (0.26 * 0.26), 1 / (0.35 * 0.35), 1 / (0.36 * 0.36)};
  CHECK(weighted.first == doctest::Approx((w[0] * 59.53 + w[1] * 59.48 + w[2] * 59.56) / (w[0] + w[1] + w[2])));

  const auto single = aggregate_magnitude({measured_constraints()[1]});
  CHECK(single.first == 59.48);
  CHECK(single.second == 0.0);
  std::vector<ConeConstraint> same(3, measured_constraints()[0]);
  CHECK(aggregate_magnitude(same).second == 0.0);
  CHECK_THROWS_AS(aggregate_magnitude({}), Error);
}

TEST_CASE("non-intersecting cones are flagged") {
  const std::vector<ConeConstraint> c{{NVOrientation::from_degrees(0, 0), 5 * oracle::kDeg, 0, 1, 0},
                                      {NVOrientation::from_degrees(90, 0), 5 * oracle::kDeg, 0, 1, 0},
                                      {NVOrientation::from_degrees(90, 90), 90 * oracle::kDeg, 0, 1, 0}};
  const auto d = triangle_diagnostic(c, {0, 0, 0}, Eigen::Vector3d::UnitZ());
  CHECK_FALSE(d.pairs[0].intersects);
  CHECK_THROWS_AS(triangle_diagnostic({c[0], c[1]}, {0, 0}, Eigen::Vector3d::UnitZ()), Error);
}
